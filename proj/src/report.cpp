#include "vecont/report.hpp"

#include "vecont/error.hpp"

namespace vecont {

using json = nlohmann::json;

namespace {

constexpr int kFigureSchema = 1;

const json& report_of(const json& artifact, const char* stage) {
  if (!artifact.contains("report"))
    throw Error(ErrorCode::MissingArtifact, std::string(stage) + " artifact has no report");
  return artifact.at("report");
}

json figure(const ReportInputs& in, const std::string& id, const std::string& kind,
            const std::string& title, const std::string& stage) {
  const auto it = in.sha256.find(stage);
  return {{"schema_version", kFigureSchema},
          {"figure", id},
          {"kind", kind},
          {"title", title},
          {"source", {{"stage", stage}, {"sha256", it == in.sha256.end() ? "" : it->second}}}};
}

json baseline_of(const json& comparisons, const std::string& metric) {
  if (!comparisons.contains(metric)) return nullptr;
  const auto& c = comparisons.at(metric);
  return {{"mean", c.at("baseline_mean")},
          {"median", c.at("baseline_median")},
          {"count", c.at("baseline_count")}};
}

// One bar per genre; log-scale figures flag exact zeros instead of clamping.
FigureFile genre_bars(const ReportInputs& in, const std::string& name, const std::string& id,
                      const std::string& title, const std::string& metric, const std::string& y_label,
                      bool log_scale) {
  const auto& rep = report_of(in.consistency, "consistency");
  json fig = figure(in, id, "bar_per_genre", title, "consistency");
  json bars = json::array();
  for (const auto& g : rep.at("genres")) {
    json bar = {{"genre", g.at("genre")}, {"value", g.at(metric)}};
    if (log_scale) bar["zero"] = g.at(metric).get<double>() == 0.0;
    bars.push_back(std::move(bar));
  }
  fig["axes"] = {{"x", {{"label", "genre"}}},
                 {"y", {{"label", y_label}, {"scale", log_scale ? "log" : "linear"}}}};
  fig["series"] = {{{"name", metric}, {"bars", bars}}};
  fig["baseline"] = baseline_of(rep.at("comparisons"), metric);
  fig["excluded"] = rep.at("excluded");
  return {name, fig};
}

FigureFile similarity_bars(const ReportInputs& in, const std::string& name, const std::string& id,
                           const std::string& title, const std::string& metric) {
  const auto& rep = report_of(in.shift, "shift");
  json fig = figure(in, id, "similarity_bars", title, "shift");
  json bars = json::array();
  for (const auto& f : rep.at("formulations")) {
    bars.push_back({{"formulation", f.at("formulation")},
                    {"value", f.at(metric)},
                    {"skipped_reason", f.at("skipped_reason")}});
  }
  fig["axes"] = {{"x", {{"label", "query formulation"}}},
                 {"y", {{"label", "mean cosine similarity"}, {"scale", "linear"}}}};
  fig["series"] = {{{"name", metric}, {"bars", bars}}};
  fig["baseline"] = baseline_of(rep.at("comparisons"), metric);
  fig["k"] = rep.at("params").at("k");
  return {name, fig};
}

json pca_axes(const json& projection) {
  const auto& pca = projection.at("pca");
  const auto& ev = pca.at("explained_variance");
  const double total = pca.at("total_variance").get<double>();
  return {{"x", {{"label", "PC1"}, {"explained_variance", ev.at(0)}, {"total_variance", total}}},
          {"y", {{"label", "PC2"}, {"explained_variance", ev.at(1)}, {"total_variance", total}}}};
}

std::string number(const json& v) {
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

std::vector<FigureFile> figure_data(const ReportInputs& in) {
  std::vector<FigureFile> out;
  const auto& projection = in.projection;

  {
    json fig = figure(in, "fig01", "scatter_hulls", "Extracted genre locations (PCA) with convex hulls",
                      "project");
    json series = json::array();
    for (const auto& g : projection.at("genres")) {
      json pts = json::array();
      for (const auto& p : g.at("points")) pts.push_back({p.at("x"), p.at("y")});
      series.push_back({{"genre", g.at("genre")}, {"points", pts}, {"hull", g.at("hull")}});
    }
    fig["axes"] = pca_axes(projection);
    fig["series"] = series;
    out.push_back({"fig01_scatter_hulls", fig});
  }
  {
    json fig = figure(in, "fig02", "centroid_scatter", "Genre centroids (PCA)", "project");
    json series = json::array();
    for (const auto& g : projection.at("genres"))
      series.push_back({{"genre", g.at("genre")},
                        {"extraction_centroid", g.at("centroid")},
                        {"truth_centroid", g.at("truth_centroid")}});
    fig["axes"] = pca_axes(projection);
    fig["series"] = series;
    out.push_back({"fig02_centroid_scatter", fig});
  }
  {
    const auto& rep = report_of(in.consistency, "consistency");
    json fig = figure(in, "fig03", "bar_per_genre", "Total and unique successful query locations",
                      "consistency");
    json total = json::array(), unique = json::array();
    for (const auto& g : rep.at("genres")) {
      total.push_back({{"genre", g.at("genre")}, {"value", g.at("total_queries")}});
      unique.push_back({{"genre", g.at("genre")}, {"value", g.at("unique_locations")}});
    }
    fig["axes"] = {{"x", {{"label", "genre"}}}, {"y", {{"label", "locations"}, {"scale", "linear"}}}};
    fig["series"] = {{{"name", "total_queries"}, {"bars", total}},
                     {{"name", "unique_locations"}, {"bars", unique}}};
    fig["baseline"] = baseline_of(rep.at("comparisons"), "unique_locations");
    fig["excluded"] = rep.at("excluded");
    out.push_back({"fig03_counts", fig});
  }
  out.push_back(genre_bars(in, "fig04_centroid_distance", "fig04", "Mean distance to the genre centroid",
                           "mean_centroid_distance", "mean centroid distance", false));
  out.push_back(genre_bars(in, "fig05_pairwise_distance", "fig05", "Mean pairwise distance",
                           "mean_pairwise_distance", "mean pairwise distance", false));
  out.push_back(genre_bars(in, "fig06_affine_dim", "fig06", "Affine dimension of the extracted points",
                           "affine_dim", "dimension", false));
  out.push_back(genre_bars(in, "fig07_volume_mean_radius", "fig07",
                           "Ball volume at the mean centroid distance (fraction of the cube)",
                           "volume_fraction_mean_radius", "volume fraction", true));
  out.push_back(genre_bars(in, "fig08_volume_max_radius", "fig08",
                           "Ball volume at the max centroid distance (fraction of the cube)",
                           "volume_fraction_max_radius", "volume fraction", true));
  {
    const auto& rep = report_of(in.accuracy, "accuracy");
    json fig = figure(in, "fig09", "distribution_bars", "Genre labels of songs at the extracted locations",
                      "accuracy");
    json series = json::array();
    for (const auto& g : rep.at("genres")) {
      if (!g.contains("distribution")) continue;
      const auto& d = g.at("distribution");
      series.push_back({{"genre", g.at("genre")},
                        {"labels", d.at("genres")},
                        {"tokens", d.at("tokens")},
                        {"sampled_songs", d.at("sampled_songs")},
                        {"empty_bins", d.at("empty_bins")}});
    }
    fig["axes"] = {{"x", {{"label", "label"}}}, {"y", {{"label", "songs"}, {"scale", "linear"}}}};
    fig["series"] = series;
    fig["sample_cap"] = rep.at("params").at("sample_cap");
    out.push_back({"fig09_distributions", fig});
  }
  {
    json fig = figure(in, "fig10", "heatmap_overlay", "Ground-truth genre heatmaps with extracted locations",
                      "project");
    json series = json::array();
    for (const auto& g : projection.at("genres")) {
      json pts = json::array();
      for (const auto& p : g.at("points")) pts.push_back({p.at("x"), p.at("y")});
      series.push_back({{"genre", g.at("genre")},
                        {"heatmap", g.at("heatmap")},
                        {"points", pts},
                        {"extraction_centroid", g.at("centroid")},
                        {"truth_centroid", g.at("truth_centroid")}});
    }
    fig["axes"] = pca_axes(projection);
    fig["series"] = series;
    out.push_back({"fig10_heatmap_overlay", fig});
  }
  {
    json fig = figure(in, "fig11a", "shift_arrows", "Shift from each genre centroid to its formulation locations",
                      "project");
    json arrows = json::array();
    for (const auto& g : projection.at("genres")) {
      if (g.at("centroid").is_null()) continue;
      for (const auto& p : g.at("points"))
        arrows.push_back({{"genre", g.at("genre")},
                          {"formulation", p.at("formulation")},
                          {"from", g.at("centroid")},
                          {"to", {p.at("x"), p.at("y")}}});
    }
    fig["axes"] = pca_axes(projection);
    fig["series"] = {{{"name", "shifts"}, {"arrows", arrows}}};
    out.push_back({"fig11a_shift_arrows", fig});
  }
  out.push_back(similarity_bars(in, "fig11b_similarity_global", "fig11b",
                                "Mean cosine of shift vectors across all genre pairs", "global_mean_cosine"));
  out.push_back(similarity_bars(in, "fig11c_similarity_knn", "fig11c",
                                "Mean cosine of shift vectors among nearest genres", "knn_mean_cosine"));
  return out;
}

std::map<std::string, std::string> report_tables(const ReportInputs& in) {
  std::map<std::string, std::string> out;

  {
    const std::vector<std::string> cols = {"total_queries",          "unique_locations",
                                           "mean_centroid_distance", "max_centroid_distance",
                                           "mean_pairwise_distance", "affine_dim",
                                           "volume_fraction_mean_radius", "volume_fraction_max_radius"};
    std::string csv = "genre";
    for (const auto& c : cols) csv += "," + c;
    csv += "\n";
    for (const auto& g : report_of(in.consistency, "consistency").at("genres")) {
      csv += csv_field(g.at("genre").get<std::string>());
      for (const auto& c : cols) csv += "," + number(g.at(c));
      csv += "\n";
    }
    out["consistency.csv"] = csv;
  }
  {
    std::string csv = "genre,centroid_euclidean,cosine_raw,cosine_shifted,sampled_songs,empty_bins\n";
    for (const auto& g : report_of(in.accuracy, "accuracy").at("genres")) {
      csv += csv_field(g.at("genre").get<std::string>()) + "," + number(g.at("centroid_euclidean")) + "," +
             number(g.at("cosine_raw")) + "," + number(g.at("cosine_shifted"));
      if (g.contains("distribution"))
        csv += "," + number(g.at("distribution").at("sampled_songs")) + "," +
               number(g.at("distribution").at("empty_bins"));
      else
        csv += ",,";
      csv += "\n";
    }
    out["accuracy.csv"] = csv;
  }
  {
    std::string csv = "formulation,genres_used,zero_vectors,global_mean_cosine,knn_mean_cosine,skipped_reason\n";
    for (const auto& f : report_of(in.shift, "shift").at("formulations")) {
      csv += csv_field(f.at("formulation").get<std::string>()) + "," + number(f.at("genres_used")) + "," +
             number(f.at("zero_vectors")) + "," + number(f.at("global_mean_cosine")) + "," +
             number(f.at("knn_mean_cosine")) + "," + csv_field(f.at("skipped_reason").get<std::string>()) +
             "\n";
    }
    out["shift.csv"] = csv;
  }
  {
    std::string csv =
        "suite,metric,observed_mean,observed_median,observed_count,baseline_mean,baseline_median,"
        "baseline_count,p_value,cohens_d\n";
    const std::vector<std::pair<std::string, const json*>> suites = {
        {"consistency", &report_of(in.consistency, "consistency")},
        {"accuracy", &report_of(in.accuracy, "accuracy")},
        {"shift", &report_of(in.shift, "shift")}};
    for (const auto& [suite, rep] : suites) {
      for (const auto& [metric, c] : rep->at("comparisons").items()) {
        csv += suite + "," + metric + "," + number(c.at("observed_mean")) + "," +
               number(c.at("observed_median")) + "," + number(c.at("observed_count")) + "," +
               number(c.at("baseline_mean")) + "," + number(c.at("baseline_median")) + "," +
               number(c.at("baseline_count")) + "," + number(c.at("p_value")) + "," +
               number(c.at("cohens_d")) + "\n";
      }
    }
    out["comparisons.csv"] = csv;
  }
  return out;
}

json report_summary(const ReportInputs& in) {
  const auto& cons = report_of(in.consistency, "consistency");
  const auto& acc = report_of(in.accuracy, "accuracy");
  const auto& sh = report_of(in.shift, "shift");
  return {{"consistency",
           {{"genres", cons.at("genres").size()},
            {"excluded", cons.at("excluded")},
            {"baseline", cons.at("baseline")},
            {"comparisons", cons.at("comparisons")}}},
          {"accuracy",
           {{"genres", acc.at("genres").size()},
            {"excluded", acc.at("excluded")},
            {"params", acc.at("params")},
            {"skipped_shifted_pairs", acc.at("skipped_shifted_pairs")},
            {"comparisons", acc.at("comparisons")}}},
          {"shift",
           {{"formulations", sh.at("formulations").size()},
            {"params", sh.at("params")},
            {"comparisons", sh.at("comparisons")}}},
          {"sources", in.sha256}};
}

}  // namespace vecont
