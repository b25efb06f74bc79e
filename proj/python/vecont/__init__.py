"""Python access to the vecont C++ core.

JSON-producing calls return parsed dicts; everything else is passed through.
"""

import json as _json

from . import _vecont
from ._vecont import (
    Ontology,
    VecontError,
    affine_dimension,
    assign_bin,
    ball_volume_fraction,
    baseline_groups,
    bin_center,
    centroid,
    cohens_d,
    cosine_similarity,
    fit_edges,
    hull_2d,
    mean_centroid_distance,
    mean_pairwise_distance,
    reference_ontology,
    run_stage,
    stage_names,
    welch_p_value,
)

__all__ = [
    "Ontology",
    "VecontError",
    "affine_dimension",
    "assign_bin",
    "ball_volume_fraction",
    "baseline_groups",
    "bin_center",
    "centroid",
    "cohens_d",
    "consistency_suite",
    "cosine_similarity",
    "fit_edges",
    "hull_2d",
    "mean_centroid_distance",
    "mean_pairwise_distance",
    "reference_ontology",
    "run_stage",
    "shift_suite",
    "stage_names",
    "welch_p_value",
]


def consistency_suite(ontology, answers, points=47, groups=1000, seed=42):
    """answers: {genre: {formulation_id: [bin indices]}}."""
    return _json.loads(_vecont.consistency_suite(ontology, answers, points, groups, seed))


def shift_suite(ontology, answers, k=5, trials=20, seed=42):
    return _json.loads(_vecont.shift_suite(ontology, answers, k, trials, seed))
