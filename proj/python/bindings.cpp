#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vecont/analysis.hpp"
#include "vecont/config.hpp"
#include "vecont/error.hpp"
#include "vecont/geometry.hpp"
#include "vecont/ontology.hpp"
#include "vecont/pipeline.hpp"
#include "vecont/stats.hpp"

namespace py = pybind11;
using namespace vecont;

namespace {

// JSON crosses the boundary as text; the Python side parses it with json.loads.
std::string dump(const nlohmann::json& j) { return j.dump(); }

PointCloud cloud_of(const std::vector<std::vector<double>>& points) {
  std::vector<NormalizedPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p});
  return PointCloud(std::move(out));
}

ExtractionSet set_of(const std::string& genre, const std::map<std::string, std::vector<int>>& positions) {
  ExtractionSet s;
  s.genre = genre;
  for (const auto& [id, idx] : positions) s.results[id] = DiscretePosition{idx};
  return s;
}

}  // namespace

PYBIND11_MODULE(_vecont, m) {
  m.doc() = "Vector-ontology toolkit: binning, geometry, statistics and the replayable pipeline.";

  // Messages already start with the error code name.
  py::register_exception<Error>(m, "VecontError");

  py::class_<Ontology>(m, "Ontology")
      .def_property_readonly("bins_per_dim", &Ontology::bins_per_dim)
      .def_property_readonly("dimension_names",
                             [](const Ontology& o) {
                               std::vector<std::string> names;
                               for (const auto& d : o.dimensions()) names.push_back(d.name);
                               return names;
                             })
      .def_property_readonly("total_bins", &Ontology::total_bins)
      .def("edges", [](const Ontology& o, std::size_t k) { return o.dimension(k).edges; })
      .def("to_json", [](const Ontology& o) { return dump(to_json(o)); })
      .def_static("from_json",
                  [](const std::string& text) { return ontology_from_json(nlohmann::json::parse(text)); });

  m.def("reference_ontology", &reference_ontology);
  m.def(
      "fit_edges",
      [](const std::vector<std::vector<double>>& corpus, int n) {
        std::vector<FeatureVector> fv;
        for (const auto& v : corpus) fv.push_back({v});
        const auto dims = song_dimensions();
        return fit_edges(fv, n, dims);
      },
      py::arg("corpus"), py::arg("n"), "Equal-frequency edges over the eight song dimensions.");
  m.def(
      "assign_bin",
      [](const Ontology& o, const std::vector<double>& features) {
        return assign_bin(o, FeatureVector{features}).indices;
      },
      py::arg("ontology"), py::arg("features"));
  m.def(
      "bin_center",
      [](const Ontology& o, const std::vector<int>& position) {
        return bin_center(o, DiscretePosition{position}).coords;
      },
      py::arg("ontology"), py::arg("position"));

  m.def("centroid", [](const std::vector<std::vector<double>>& pts) { return centroid(cloud_of(pts)).coords; });
  m.def("mean_centroid_distance",
        [](const std::vector<std::vector<double>>& pts) { return mean_centroid_distance(cloud_of(pts)); });
  m.def("mean_pairwise_distance",
        [](const std::vector<std::vector<double>>& pts) { return mean_pairwise_distance(cloud_of(pts)); });
  m.def(
      "affine_dimension",
      [](const std::vector<std::vector<double>>& pts, double tol) { return affine_dimension(cloud_of(pts), tol); },
      py::arg("points"), py::arg("tol") = 1e-9);
  m.def("ball_volume_fraction", &ball_volume_fraction, py::arg("d"), py::arg("radius"));
  m.def(
      "cosine_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b, std::optional<double> shift) {
        return cosine_similarity(a, b, shift);
      },
      py::arg("a"), py::arg("b"), py::arg("shift") = py::none());
  m.def("hull_2d", [](const std::vector<std::pair<double, double>>& pts) {
    std::vector<Point2> in;
    for (const auto& [x, y] : pts) in.push_back({x, y});
    std::vector<std::pair<double, double>> out;
    for (const auto& p : hull_2d(in)) out.emplace_back(p.x, p.y);
    return out;
  });

  m.def("welch_p_value", [](const std::vector<double>& a, const std::vector<double>& b) { return welch_t_test(a, b); });
  m.def("cohens_d", [](const std::vector<double>& a, const std::vector<double>& b) { return cohens_d(a, b); });
  m.def(
      "baseline_groups",
      [](const Ontology& o, int points, int groups, std::uint64_t seed) {
        std::vector<std::vector<std::vector<int>>> out;
        for (const auto& g : sample_uniform_groups(o, BaselineSpec{points, groups, seed})) {
          auto& group = out.emplace_back();
          for (const auto& p : g) group.push_back(p.indices);
        }
        return out;
      },
      py::arg("ontology"), py::arg("points") = 47, py::arg("groups") = 1000, py::arg("seed") = 42);

  m.def(
      "consistency_suite",
      [](const Ontology& o, const std::map<std::string, std::map<std::string, std::vector<int>>>& answers,
         int points, int groups, std::uint64_t seed) {
        std::vector<ExtractionSet> sets;
        for (const auto& [genre, positions] : answers) sets.push_back(set_of(genre, positions));
        return dump(to_json(consistency_suite(sets, o, BaselineSpec{points, groups, seed})));
      },
      py::arg("ontology"), py::arg("answers"), py::arg("points") = 47, py::arg("groups") = 1000,
      py::arg("seed") = 42, "answers: {genre: {formulation_id: position}}; returns the report as JSON text.");
  m.def(
      "shift_suite",
      [](const Ontology& o, const std::map<std::string, std::map<std::string, std::vector<int>>>& answers, int k,
         int trials, std::uint64_t seed) {
        std::vector<ExtractionSet> sets;
        for (const auto& [genre, positions] : answers) sets.push_back(set_of(genre, positions));
        return dump(to_json(shift_suite(sets, o, ShiftParams{k, trials, seed})));
      },
      py::arg("ontology"), py::arg("answers"), py::arg("k") = 5, py::arg("trials") = 20, py::arg("seed") = 42);

  m.def("stage_names", &stage_names);
  m.def(
      "run_stage",
      [](const std::filesystem::path& config, const std::string& stage, std::optional<std::filesystem::path> out) {
        auto cfg = load_config(config);
        if (out) cfg.out = std::filesystem::absolute(*out);
        Pipeline p(cfg);
        const auto outcomes = stage == "all" ? p.run_all() : std::vector<StageOutcome>{p.run(stage)};
        py::list result;
        for (const auto& o : outcomes) {
          py::dict d;
          d["stage"] = o.stage;
          d["exit_code"] = o.exit_code;
          d["artifacts"] = o.artifacts;
          d["messages"] = o.messages;
          result.append(d);
        }
        return result;
      },
      py::arg("config"), py::arg("stage") = "all", py::arg("out") = py::none(),
      "Runs one pipeline stage (or \"all\") with the config's LLM mode; no transport override.");
}
