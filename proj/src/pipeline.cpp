#include "vecont/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include "vecont/analysis.hpp"
#include "vecont/dataset.hpp"
#include "vecont/geometry.hpp"
#include "vecont/hash.hpp"
#include "vecont/ontology.hpp"
#include "vecont/report.hpp"

namespace vecont {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingArtifact: return kExitMissingArtifact;
    case ErrorCode::NetworkError: return kExitNetwork;
    default: return kExitValidation;
  }
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"synth",       "ingest",   "fit",   "index",
                                                 "extract",     "consistency", "accuracy", "shift",
                                                 "project",     "report"};
  return names;
}

namespace {

constexpr int kSchemaVersion = 1;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so a reader never sees a half-written artifact.
void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

Pipeline::Pipeline(RunConfig cfg, PipelineOptions options)
    : cfg_(std::move(cfg)), options_(options), hash_(vecont::config_hash(cfg_)) {}

fs::path Pipeline::artifact_path(std::string_view stage, std::string_view name) const {
  return cfg_.out / std::string(stage) / std::string(name);
}

json Pipeline::meta(std::string_view stage, const std::vector<std::string>& inputs) const {
  json in = json::object();
  for (const auto& i : inputs) {
    const auto slash = i.find('/');
    in[i] = sha256_hex(read_file(artifact_path(i.substr(0, slash), i.substr(slash + 1))));
  }
  return {{"schema_version", kSchemaVersion},
          {"stage", stage},
          {"config_hash", hash_},
          {"seed", cfg_.seed},
          {"inputs", in}};
}

json Pipeline::load(std::string_view stage, std::string_view name) const {
  const auto path = artifact_path(stage, name);
  if (!fs::exists(path))
    throw Error(ErrorCode::MissingArtifact, path.string() + " not found; run `vecont " +
                                                std::string(stage) + "` first");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  const auto& m = j.value("meta", json::object());
  if (m.value("schema_version", 0) != kSchemaVersion)
    throw Error(ErrorCode::SchemaError, path.string() + ": unsupported schema_version");
  if (m.value("config_hash", std::string{}) != hash_)
    throw Error(ErrorCode::MissingArtifact, path.string() +
                                                " was produced by a different config; re-run `vecont " +
                                                std::string(stage) + "`");
  return j;
}

fs::path Pipeline::write(std::string_view stage, std::string_view name, const json& j) const {
  const auto path = artifact_path(stage, name);
  write_file(path, j.dump(1) + "\n");
  return path;
}

StageOutcome Pipeline::run(std::string_view stage) {
  if (stage == "synth") return synth();
  if (stage == "ingest") return ingest();
  if (stage == "fit") return fit();
  if (stage == "index") return index();
  if (stage == "extract") return extract();
  if (stage == "consistency") return consistency();
  if (stage == "accuracy") return accuracy();
  if (stage == "shift") return shift();
  if (stage == "project") return project();
  if (stage == "report") return report();
  throw Error(ErrorCode::ConfigError, "unknown stage '" + std::string(stage) + "'");
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> out;
  for (const auto& s : stage_names()) {
    if (s == "synth" && !cfg_.corpus.synthetic) continue;
    out.push_back(run(s));
    if (out.back().exit_code != kExitOk) break;
  }
  return out;
}

// --- corpus ---------------------------------------------------------------

StageOutcome Pipeline::synth() {
  if (!cfg_.corpus.synthetic)
    throw Error(ErrorCode::ConfigError, "corpus is a file (corpus.path); run `vecont ingest` instead");
  const auto spec = default_synth_spec(cfg_.corpus.synth_count, cfg_.seed);
  const auto records = synthesize(spec);
  const auto dims = song_dimensions();

  StageOutcome out;
  out.stage = "synth";
  const auto corpus_path = artifact_path("synth", "corpus.jsonl");
  fs::create_directories(corpus_path.parent_path());
  write_jsonl(corpus_path, records, dims);
  out.artifacts.push_back(corpus_path);

  json clusters = json::array();
  const auto counts = cluster_counts(spec);
  for (std::size_t c = 0; c < spec.clusters.size(); ++c)
    clusters.push_back({{"genre", spec.clusters[c].genre}, {"count", counts[c]}});
  json j = {{"meta", meta("synth", {"synth/corpus.jsonl"})},
            {"records", records.size()},
            {"clusters", clusters}};
  out.artifacts.push_back(write("synth", "manifest.json", j));
  out.messages.push_back("synthesized " + std::to_string(records.size()) + " songs");
  return out;
}

StageOutcome Pipeline::ingest() {
  fs::path source;
  if (cfg_.corpus.synthetic) {
    load("synth", "manifest.json");
    source = artifact_path("synth", "corpus.jsonl");
  } else {
    source = cfg_.corpus.path;
    if (!fs::exists(source))
      throw Error(ErrorCode::ConfigError, "corpus.path " + source.string() + " does not exist");
  }
  const auto dims = song_dimensions();
  auto result = vecont::ingest(source, cfg_.corpus.synthetic ? CorpusFormat::Jsonl : cfg_.corpus.format,
                               dims);
  if (result.records.empty())
    throw Error(ErrorCode::EmptyCorpus, "no valid records in " + source.filename().string());

  StageOutcome out;
  out.stage = "ingest";
  const auto corpus_path = artifact_path("ingest", "corpus.jsonl");
  fs::create_directories(corpus_path.parent_path());
  write_jsonl(corpus_path, result.records, dims);
  out.artifacts.push_back(corpus_path);

  json rejected = json::array();
  for (const auto& r : result.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
  json j = {{"meta", meta("ingest", {"ingest/corpus.jsonl"})},
            {"source", source.filename().string()},
            {"records", result.records.size()},
            {"rejected", rejected}};
  out.artifacts.push_back(write("ingest", "manifest.json", j));
  out.messages.push_back("ingested " + std::to_string(result.records.size()) + " songs, rejected " +
                         std::to_string(result.rejected.size()));
  return out;
}

// --- ontology and index ------------------------------------------------------

StageOutcome Pipeline::fit() {
  load("ingest", "manifest.json");
  const auto dims = song_dimensions();
  const auto corpus = vecont::ingest(artifact_path("ingest", "corpus.jsonl"), CorpusFormat::Jsonl, dims).records;
  const auto features = features_of(corpus);

  StageOutcome out;
  out.stage = "fit";
  json resolution = nullptr;
  int n = 0;
  if (cfg_.ontology.bins) {
    n = *cfg_.ontology.bins;
  } else {
    const auto r = search_resolution(features, dims, cfg_.ontology.density_threshold, cfg_.ontology.n_max);
    n = r.n;
    json trace = json::array();
    for (const auto& s : r.trace)
      trace.push_back({{"n", s.n}, {"occupied", s.occupied}, {"occupancy", s.occupancy}});
    resolution = {{"n", r.n},
                  {"occupancy", r.occupancy},
                  {"density_threshold", cfg_.ontology.density_threshold},
                  {"trace", trace}};
  }
  std::vector<std::string> warnings;
  const Ontology ontology = fit_edges(features, n, dims, &warnings);
  const auto positions = assign_bins(ontology, features);
  const auto occupied = count_unique(positions);
  const auto total = ontology.total_bins();

  json j = {{"meta", meta("fit", {"ingest/corpus.jsonl"})},
            {"ontology", to_json(ontology)},
            {"resolution", resolution},
            {"occupied_bins", occupied},
            {"total_bins", total ? json(*total) : json(nullptr)},
            {"warnings", warnings}};
  out.artifacts.push_back(write("fit", "ontology.json", j));
  out.messages.push_back("n = " + std::to_string(n) + ", " + std::to_string(occupied) + " occupied bins");
  for (const auto& w : warnings) out.messages.push_back("warning: " + w);
  return out;
}

StageOutcome Pipeline::index() {
  const auto ontology = ontology_from_json(load("fit", "ontology.json").at("ontology"));
  load("ingest", "manifest.json");
  const auto corpus =
      vecont::ingest(artifact_path("ingest", "corpus.jsonl"), CorpusFormat::Jsonl, song_dimensions()).records;
  const auto idx = build_index(ontology, corpus);

  json j = {{"meta", meta("index", {"fit/ontology.json", "ingest/corpus.jsonl"})},
            {"index", to_json(idx)}};
  StageOutcome out;
  out.stage = "index";
  out.artifacts.push_back(write("index", "index.json", j));
  out.messages.push_back(std::to_string(idx.bins().size()) + " occupied bins, " +
                         std::to_string(idx.genres().size()) + " genres");
  return out;
}

// --- extraction --------------------------------------------------------------

StageOutcome Pipeline::extract() {
  const auto ontology = ontology_from_json(load("fit", "ontology.json").at("ontology"));
  LlmConfig llm = cfg_.llm;
  if (options_.mode) llm.mode = *options_.mode;

  std::unique_ptr<ResponseCache> cache;
  if (llm.mode != LlmMode::Live) {
    if (llm.cache_path.empty())
      throw Error(ErrorCode::ConfigError, "llm.cache is required in " + std::string(to_string(llm.mode)) + " mode");
    if (llm.mode == LlmMode::Replay && !fs::exists(llm.cache_path))
      throw Error(ErrorCode::ConfigError, "replay cache " + llm.cache_path.string() + " does not exist");
    if (llm.cache_path.has_parent_path()) fs::create_directories(llm.cache_path.parent_path());
    cache = std::make_unique<ResponseCache>(llm.cache_path);
  }
  std::unique_ptr<ChatTransport> http;
  ChatTransport* transport = options_.transport;
  if (transport == nullptr && llm.mode != LlmMode::Replay) {
    const char* key = std::getenv(llm.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw Error(ErrorCode::ConfigError, "environment variable " + llm.api_key_env + " is not set");
    http = std::make_unique<HttpChatTransport>(llm.endpoint, key, llm.timeout_seconds);
    transport = http.get();
  }
  CompletionSource source(llm.mode, transport, cache.get());

  json sets = json::array();
  std::map<std::string, std::size_t> failures_by_code;
  std::size_t successes = 0;
  for (const auto& genre : cfg_.genres) {
    const auto set = extract_genre(genre, cfg_.formulations, llm, ontology, source);
    successes += set.results.size();
    for (const auto& [id, f] : set.failures) ++failures_by_code[std::string(to_string(f.code))];
    sets.push_back(to_json(set));
  }

  json j = {{"meta", meta("extract", {"fit/ontology.json"})},
            {"model", llm.model},
            {"system_prompt_sha256", sha256_hex(build_system_prompt(ontology))},
            {"sets", sets},
            {"summary",
             {{"queries", cfg_.genres.size() * cfg_.formulations.size()},
              {"successes", successes},
              {"failures", failures_by_code}}}};
  StageOutcome out;
  out.stage = "extract";
  out.artifacts.push_back(write("extract", "extractions.json", j));
  out.messages.push_back(std::to_string(successes) + " of " +
                         std::to_string(cfg_.genres.size() * cfg_.formulations.size()) +
                         " queries placed (mode " + std::string(to_string(llm.mode)) + ")");
  for (const auto& [code, count] : failures_by_code)
    out.messages.push_back(std::to_string(count) + " failed with " + code);
  if (failures_by_code.contains(std::string(to_string(ErrorCode::NetworkError))))
    out.exit_code = kExitNetwork;
  return out;
}

namespace {

std::vector<ExtractionSet> sets_of(const json& extractions) {
  std::vector<ExtractionSet> out;
  for (const auto& s : extractions.at("sets")) out.push_back(extraction_set_from_json(s));
  return out;
}

}  // namespace

// --- analysis suites ---------------------------------------------------------

StageOutcome Pipeline::consistency() {
  const auto ontology = ontology_from_json(load("fit", "ontology.json").at("ontology"));
  const auto sets = sets_of(load("extract", "extractions.json"));
  const BaselineSpec baseline{cfg_.analysis.baseline_points, cfg_.analysis.baseline_groups, cfg_.seed};
  const auto report = consistency_suite(sets, ontology, baseline);

  json j = {{"meta", meta("consistency", {"fit/ontology.json", "extract/extractions.json"})},
            {"report", to_json(report)}};
  StageOutcome out;
  out.stage = "consistency";
  out.artifacts.push_back(write("consistency", "consistency.json", j));
  out.messages.push_back(std::to_string(report.genres.size()) + " genres analysed, " +
                         std::to_string(report.excluded.size()) + " excluded");
  return out;
}

StageOutcome Pipeline::accuracy() {
  const auto idx = index_from_json(load("index", "index.json").at("index"));
  const auto sets = sets_of(load("extract", "extractions.json"));
  load("ingest", "manifest.json");
  const auto corpus =
      vecont::ingest(artifact_path("ingest", "corpus.jsonl"), CorpusFormat::Jsonl, song_dimensions()).records;
  const BinMembership membership(idx.ontology(), corpus);
  const AccuracyParams params{cfg_.analysis.accuracy_pairs, cfg_.seed, cfg_.analysis.min_genre_count,
                              cfg_.analysis.sample_cap};
  const auto report = accuracy_suite(sets, idx, params, corpus, &membership);

  json j = {{"meta", meta("accuracy", {"index/index.json", "extract/extractions.json", "ingest/corpus.jsonl"})},
            {"report", to_json(report)}};
  StageOutcome out;
  out.stage = "accuracy";
  out.artifacts.push_back(write("accuracy", "accuracy.json", j));
  out.messages.push_back(std::to_string(report.genres.size()) + " genres analysed, " +
                         std::to_string(report.excluded.size()) + " excluded");
  return out;
}

StageOutcome Pipeline::shift() {
  const auto ontology = ontology_from_json(load("fit", "ontology.json").at("ontology"));
  const auto sets = sets_of(load("extract", "extractions.json"));
  const ShiftParams params{cfg_.analysis.k, cfg_.analysis.shift_baseline_trials, cfg_.seed};
  const auto report = shift_suite(sets, ontology, params);

  json j = {{"meta", meta("shift", {"fit/ontology.json", "extract/extractions.json"})},
            {"report", to_json(report)}};
  StageOutcome out;
  out.stage = "shift";
  out.artifacts.push_back(write("shift", "shift.json", j));
  std::size_t skipped = 0;
  for (const auto& f : report.formulations)
    if (!f.skipped_reason.empty()) ++skipped;
  out.messages.push_back(std::to_string(report.formulations.size()) + " formulations, " +
                         std::to_string(skipped) + " skipped");
  return out;
}

// --- projection ----------------------------------------------------------------

StageOutcome Pipeline::project() {
  const auto idx = index_from_json(load("index", "index.json").at("index"));
  const auto& ontology = idx.ontology();
  const auto sets = sets_of(load("extract", "extractions.json"));

  std::vector<NormalizedPoint> pooled;
  for (const auto& s : sets)
    for (const auto& p : s.positions()) pooled.push_back(bin_center(ontology, p));
  if (pooled.size() < 2)
    throw Error(ErrorCode::InsufficientPoints, "projection needs at least two extracted positions");
  const auto pca = fit_pca(PointCloud(pooled), 2);

  const auto xy = [&](const std::vector<double>& coords) {
    const auto v = vecont::project(pca, coords);
    return json::array({v[0], v[1]});
  };

  json genres = json::array();
  for (const auto& s : sets) {
    json g = {{"genre", s.genre}};
    json points = json::array();
    std::vector<Point2> plane;
    for (const auto& [fid, p] : s.results) {
      const auto v = vecont::project(pca, bin_center(ontology, p).coords);
      points.push_back({{"formulation", fid}, {"x", v[0]}, {"y", v[1]}});
      plane.push_back({v[0], v[1]});
    }
    g["points"] = points;
    json hull = json::array();
    for (const auto& h : hull_2d(plane)) hull.push_back({h.x, h.y});
    g["hull"] = hull;
    std::vector<NormalizedPoint> centers;
    for (const auto& p : s.positions()) centers.push_back(bin_center(ontology, p));
    g["centroid"] = centers.empty() ? json(nullptr) : xy(centroid(PointCloud(centers)).coords);
    if (idx.contains_genre(s.genre)) {
      const auto truth = genre_centroid(idx, s.genre, cfg_.analysis.min_genre_count);
      g["truth_centroid"] = xy(truth.point.coords);
      g["heatmap"] = to_json(heatmap_grid(idx, s.genre, pca, cfg_.analysis.heatmap_grid));
    } else {
      g["truth_centroid"] = nullptr;
      g["heatmap"] = nullptr;
    }
    genres.push_back(std::move(g));
  }

  json j = {{"meta", meta("project", {"index/index.json", "extract/extractions.json"})},
            {"pca", to_json(pca)},
            {"genres", genres}};
  StageOutcome out;
  out.stage = "project";
  out.artifacts.push_back(write("project", "projection.json", j));
  out.messages.push_back("PCA over " + std::to_string(pooled.size()) + " points");
  return out;
}

// --- report --------------------------------------------------------------------

StageOutcome Pipeline::report() {
  ReportInputs in;
  in.consistency = load("consistency", "consistency.json");
  in.accuracy = load("accuracy", "accuracy.json");
  in.shift = load("shift", "shift.json");
  in.projection = load("project", "projection.json");
  for (const auto& [stage, name] : std::vector<std::pair<std::string, std::string>>{
           {"consistency", "consistency.json"},
           {"accuracy", "accuracy.json"},
           {"shift", "shift.json"},
           {"project", "projection.json"}})
    in.sha256[stage] = sha256_hex(read_file(artifact_path(stage, name)));

  StageOutcome out;
  out.stage = "report";
  json summary = report_summary(in);
  summary["meta"] = meta("report", {"consistency/consistency.json", "accuracy/accuracy.json",
                                    "shift/shift.json", "project/projection.json"});
  out.artifacts.push_back(write("report", "summary.json", summary));

  for (const auto& [name, csv] : report_tables(in)) {
    const auto path = artifact_path("report", "tables/" + name);
    write_file(path, csv);
    out.artifacts.push_back(path);
  }
  for (auto& fig : figure_data(in)) {
    fig.data["config_hash"] = hash_;
    fig.data["seed"] = cfg_.seed;
    out.artifacts.push_back(write("report", "figures/" + fig.name + ".json", fig.data));
  }
  out.messages.push_back(std::to_string(out.artifacts.size()) + " report files");
  return out;
}

}  // namespace vecont
