import json
import math
import pathlib
import random

import pytest

import vecont

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def test_beethoven_position():
    o = vecont.reference_ontology()
    assert o.total_bins == 6**8
    assert vecont.assign_bin(o, [0.3, 0.2, 0.0, 0.9, 0.9, 0.1, 0.2, 95]) == [0, 0, 0, 4, 5, 1, 1, 1]
    assert o.dimension_names[-1] == "tempo"


def test_out_of_domain_raises():
    o = vecont.reference_ontology()
    with pytest.raises(vecont.VecontError, match="OutOfDomain"):
        vecont.assign_bin(o, [0.5] * 7 + [300])


def test_ontology_json_roundtrip():
    o = vecont.reference_ontology()
    back = vecont.Ontology.from_json(o.to_json())
    assert back.edges(0) == o.edges(0)
    assert json.loads(o.to_json())["bins_per_dim"] == 6


def test_geometry_matches_plain_python():
    rng = random.Random(1)
    pts = [[rng.random() for _ in range(4)] for _ in range(9)]
    c = [sum(col) / len(pts) for col in zip(*pts)]
    assert vecont.centroid(pts) == pytest.approx(c, abs=1e-15)
    mean_dist = sum(math.dist(p, c) for p in pts) / len(pts)
    assert vecont.mean_centroid_distance(pts) == pytest.approx(mean_dist, abs=1e-12)
    pairs = [math.dist(pts[i], pts[j]) for i in range(9) for j in range(i + 1, 9)]
    assert vecont.mean_pairwise_distance(pts) == pytest.approx(sum(pairs) / len(pairs), abs=1e-12)
    assert vecont.affine_dimension(pts) == 4
    assert vecont.ball_volume_fraction(2, 1.0) == pytest.approx(math.pi)
    assert vecont.cosine_similarity([1, 1], [0, 0], shift=0.5) == pytest.approx(-1.0)
    assert sorted(vecont.hull_2d([(0, 0), (2, 0), (1, 1), (0, 2), (2, 2)])) == [(0, 0), (0, 2), (2, 0), (2, 2)]


def test_stats_and_baseline():
    o = vecont.reference_ontology()
    groups = vecont.baseline_groups(o, points=47, groups=3, seed=7)
    assert len(groups) == 3 and len(groups[0]) == 47
    assert groups == vecont.baseline_groups(o, points=47, groups=3, seed=7)
    assert vecont.cohens_d([1, 2, 3], [4, 5, 6]) == pytest.approx(-3.0)
    assert 0.0 < vecont.welch_p_value([1, 2, 3, 4], [2, 3, 4, 6]) < 1.0


def test_suites_return_reports():
    o = vecont.reference_ontology()
    answers = {f"g{g}": {f"f{i}": [g % 6] * 8 for i in range(47)} for g in range(4)}
    report = vecont.consistency_suite(o, answers, groups=50)
    c = report["comparisons"]["mean_centroid_distance"]
    assert c["observed_mean"] == 0.0
    assert c["p_value"] < 1e-6

    offsets = [[1] + [0] * 7, [-1] + [0] * 7, [0, 1] + [0] * 6]
    planted = {
        f"g{g}": {f"f{i}": [2 + (g + k) % 3 + off[k] for k in range(8)] for i, off in enumerate(offsets)}
        for g in range(6)
    }
    shift = vecont.shift_suite(o, planted, k=2, trials=2)
    for f in shift["formulations"]:
        assert f["global_mean_cosine"] == pytest.approx(1.0, abs=1e-12)


def test_replay_pipeline(tmp_path):
    outcomes = vecont.run_stage(str(FIXTURES / "replay.toml"), "all", str(tmp_path))
    assert [o["stage"] for o in outcomes] == vecont.stage_names()
    assert all(o["exit_code"] == 0 for o in outcomes)
    summary = json.loads((tmp_path / "report" / "summary.json").read_text())
    assert summary["meta"]["stage"] == "report"


def test_missing_artifact(tmp_path):
    with pytest.raises(vecont.VecontError, match="MissingArtifact"):
        vecont.run_stage(str(FIXTURES / "replay.toml"), "shift", str(tmp_path))
