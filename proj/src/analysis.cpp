#include "vecont/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "vecont/error.hpp"
#include "vecont/rng.hpp"

namespace vecont {

namespace {

PointCloud cloud_of(const Ontology& ontology, std::span<const DiscretePosition> positions) {
  std::vector<NormalizedPoint> pts;
  pts.reserve(positions.size());
  for (const auto& p : positions) pts.push_back(bin_center(ontology, p));
  return PointCloud(std::move(pts));
}

nlohmann::json to_json(const NormalizedPoint& p) { return p.coords; }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

SpreadMetrics spread_metrics(const Ontology& ontology, std::span<const DiscretePosition> positions) {
  if (positions.size() < 2)
    throw Error(ErrorCode::TooFewPoints, "need at least two positions, got " +
                                             std::to_string(positions.size()));
  const auto cloud = cloud_of(ontology, positions);
  const auto dists = centroid_distances(cloud);
  const int d = static_cast<int>(ontology.dimension_count());

  SpreadMetrics m;
  m.total_queries = positions.size();
  m.unique_locations = count_unique(positions);
  m.mean_centroid_distance = std::accumulate(dists.begin(), dists.end(), 0.0) / dists.size();
  m.max_centroid_distance = *std::max_element(dists.begin(), dists.end());
  m.mean_pairwise_distance = mean_pairwise_distance(cloud);
  m.affine_dim = affine_dimension(cloud, 1e-9);
  m.volume_fraction_mean_radius = ball_volume_fraction(d, m.mean_centroid_distance);
  m.volume_fraction_max_radius = ball_volume_fraction(d, m.max_centroid_distance);
  return m;
}

std::vector<std::string> consistency_metric_names() {
  return {"unique_locations",       "mean_centroid_distance",      "mean_pairwise_distance",
          "affine_dim",             "volume_fraction_mean_radius", "volume_fraction_max_radius"};
}

double metric_value(const SpreadMetrics& m, const std::string& name) {
  if (name == "unique_locations") return static_cast<double>(m.unique_locations);
  if (name == "total_queries") return static_cast<double>(m.total_queries);
  if (name == "mean_centroid_distance") return m.mean_centroid_distance;
  if (name == "max_centroid_distance") return m.max_centroid_distance;
  if (name == "mean_pairwise_distance") return m.mean_pairwise_distance;
  if (name == "affine_dim") return m.affine_dim;
  if (name == "volume_fraction_mean_radius") return m.volume_fraction_mean_radius;
  if (name == "volume_fraction_max_radius") return m.volume_fraction_max_radius;
  throw Error(ErrorCode::InvalidSpec, "unknown metric " + name);
}

ConsistencyReport consistency_suite(std::span<const ExtractionSet> sets, const Ontology& ontology,
                                    const BaselineSpec& baseline) {
  ConsistencyReport report;
  report.baseline = baseline;
  for (const auto& set : sets) {
    const auto positions = set.positions();
    if (positions.size() < 2) {
      report.excluded.push_back(set.genre);
      continue;
    }
    report.genres.push_back({set.genre, spread_metrics(ontology, positions)});
  }

  std::vector<SpreadMetrics> base;
  for (const auto& group : sample_uniform_groups(ontology, baseline))
    base.push_back(spread_metrics(ontology, group));
  double max_radius_sum = 0.0;
  for (const auto& b : base) max_radius_sum += b.max_centroid_distance;
  report.baseline_mean_max_radius = max_radius_sum / static_cast<double>(base.size());

  for (const auto& name : consistency_metric_names()) {
    std::vector<double> observed, random;
    for (const auto& g : report.genres) observed.push_back(metric_value(g.metrics, name));
    for (const auto& b : base) random.push_back(metric_value(b, name));
    report.comparisons[name] = compare(observed, random);
  }
  return report;
}

nlohmann::json to_json(const ConsistencyReport& report) {
  nlohmann::json genres = nlohmann::json::array();
  for (const auto& g : report.genres) {
    const auto& m = g.metrics;
    genres.push_back({{"genre", g.genre},
                      {"total_queries", m.total_queries},
                      {"unique_locations", m.unique_locations},
                      {"mean_centroid_distance", m.mean_centroid_distance},
                      {"max_centroid_distance", m.max_centroid_distance},
                      {"mean_pairwise_distance", m.mean_pairwise_distance},
                      {"affine_dim", m.affine_dim},
                      {"volume_fraction_mean_radius", m.volume_fraction_mean_radius},
                      {"volume_fraction_max_radius", m.volume_fraction_max_radius}});
  }
  nlohmann::json comparisons = nlohmann::json::object();
  for (const auto& [name, c] : report.comparisons) comparisons[name] = to_json(c);
  return {{"schema_version", 1},
          {"genres", genres},
          {"excluded", report.excluded},
          {"comparisons", comparisons},
          {"baseline",
           {{"points_per_group", report.baseline.points_per_group},
            {"groups", report.baseline.groups},
            {"seed", report.baseline.seed},
            {"mean_max_radius", report.baseline_mean_max_radius}}}};
}

std::vector<std::string> genre_tokens(std::string_view genre) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : genre) {
    if (c == ' ' || c == '-' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

LocationDistribution distribution_at_locations(const ExtractionSet& set,
                                               std::span<const SongRecord> corpus,
                                               const BinMembership& membership, std::size_t cap,
                                               std::uint64_t seed) {
  LocationDistribution dist;
  for (const auto& [formulation, position] : set.results) {
    const auto sample =
        sample_songs(membership, position, cap, derive_seed(seed, "sampling/" + set.genre + "/" + formulation));
    if (sample.empty_bin) {
      ++dist.empty_bins;
      continue;
    }
    for (std::size_t idx : sample.songs) {
      ++dist.sampled_songs;
      for (const auto& label : corpus[idx].artist_genres) {
        ++dist.genres[label];
        const auto tokens = genre_tokens(label);
        for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) ++dist.tokens[t];
      }
    }
  }
  return dist;
}

AccuracyReport accuracy_suite(std::span<const ExtractionSet> sets, const GroundTruthIndex& index,
                              const AccuracyParams& params, std::span<const SongRecord> corpus,
                              const BinMembership* membership) {
  const auto& ontology = index.ontology();
  AccuracyReport report;
  report.params = params;
  for (const auto& set : sets) {
    const auto positions = set.positions();
    if (positions.empty() || !index.contains_genre(set.genre)) {
      report.excluded.push_back(set.genre);
      continue;
    }
    GenreAccuracy g;
    g.genre = set.genre;
    g.extraction_centroid = centroid(cloud_of(ontology, positions));
    try {
      g.truth_centroid = genre_centroid(index, set.genre, params.min_genre_count).point;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GenreAbsent) throw;
      report.excluded.push_back(set.genre);
      continue;
    }
    g.centroid_euclidean = euclidean_distance(g.extraction_centroid.coords, g.truth_centroid.coords);
    g.cosine_raw = cosine_similarity(g.extraction_centroid.coords, g.truth_centroid.coords);
    try {
      g.cosine_shifted = cosine_similarity(g.extraction_centroid.coords, g.truth_centroid.coords, 0.5);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVector) throw;
      ++report.skipped_shifted_pairs;
    }
    if (membership != nullptr && !corpus.empty())
      g.distribution = distribution_at_locations(set, corpus, *membership, params.sample_cap, params.seed);
    report.genres.push_back(std::move(g));
  }

  // Mismatched (extraction centroid, truth centroid) pairs, with replacement.
  std::vector<double> base_euclid, base_raw, base_shifted;
  const auto count = report.genres.size();
  if (count >= 2) {
    Rng rng(params.seed, "accuracy-baseline");
    for (std::size_t drawn = 0; drawn < params.baseline_pairs;) {
      const auto i = static_cast<std::size_t>(rng.below(count));
      const auto j = static_cast<std::size_t>(rng.below(count));
      if (i == j) continue;
      ++drawn;
      const auto& a = report.genres[i].extraction_centroid.coords;
      const auto& b = report.genres[j].truth_centroid.coords;
      base_euclid.push_back(euclidean_distance(a, b));
      base_raw.push_back(cosine_similarity(a, b));
      try {
        base_shifted.push_back(cosine_similarity(a, b, 0.5));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVector) throw;
        ++report.skipped_shifted_pairs;
      }
    }
  }

  std::vector<double> obs_euclid, obs_raw, obs_shifted;
  for (const auto& g : report.genres) {
    obs_euclid.push_back(g.centroid_euclidean);
    obs_raw.push_back(g.cosine_raw);
    if (g.cosine_shifted) obs_shifted.push_back(*g.cosine_shifted);
  }
  report.comparisons["centroid_euclidean"] = compare(obs_euclid, base_euclid);
  report.comparisons["cosine_raw"] = compare(obs_raw, base_raw);
  report.comparisons["cosine_shifted"] = compare(obs_shifted, base_shifted);
  // Centered cosines against the uncentered random pairs.
  report.comparisons["cosine_shifted_vs_raw_baseline"] = compare(obs_shifted, base_raw);
  return report;
}

nlohmann::json to_json(const AccuracyReport& report) {
  nlohmann::json genres = nlohmann::json::array();
  for (const auto& g : report.genres) {
    nlohmann::json row = {{"genre", g.genre},
                          {"extraction_centroid", to_json(g.extraction_centroid)},
                          {"truth_centroid", to_json(g.truth_centroid)},
                          {"centroid_euclidean", g.centroid_euclidean},
                          {"cosine_raw", g.cosine_raw},
                          {"cosine_shifted", optional_json(g.cosine_shifted)}};
    if (g.distribution) {
      row["distribution"] = {{"genres", g.distribution->genres},
                             {"tokens", g.distribution->tokens},
                             {"sampled_songs", g.distribution->sampled_songs},
                             {"empty_bins", g.distribution->empty_bins}};
    }
    genres.push_back(std::move(row));
  }
  nlohmann::json comparisons = nlohmann::json::object();
  for (const auto& [name, c] : report.comparisons) comparisons[name] = to_json(c);
  return {{"schema_version", 1},
          {"genres", genres},
          {"excluded", report.excluded},
          {"comparisons", comparisons},
          {"skipped_shifted_pairs", report.skipped_shifted_pairs},
          {"params",
           {{"baseline_pairs", report.params.baseline_pairs},
            {"seed", report.params.seed},
            {"min_genre_count", report.params.min_genre_count},
            {"sample_cap", report.params.sample_cap}}}};
}

namespace {

struct GenreShiftInput {
  std::string genre;
  NormalizedPoint centroid;
  std::map<std::string, DiscretePosition> positions;
};

struct Scores {
  std::optional<double> global;
  std::optional<double> local;
  std::size_t zero_vectors = 0;
};

// `vectors[i]` belongs to genre `members[i]` (index into the centroid table).
Scores score_shifts(const std::vector<std::vector<double>>& vectors,
                    const std::vector<std::size_t>& members,
                    const std::vector<NormalizedPoint>& centroids, int k) {
  Scores s;
  std::vector<bool> nonzero(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    nonzero[i] = std::any_of(vectors[i].begin(), vectors[i].end(), [](double v) { return v != 0.0; });
    if (!nonzero[i]) ++s.zero_vectors;
  }

  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!nonzero[i]) continue;
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      if (!nonzero[j]) continue;
      sum += cosine_similarity(vectors[i], vectors[j]);
      ++pairs;
    }
  }
  if (pairs > 0) s.global = sum / static_cast<double>(pairs);

  sum = 0.0;
  pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!nonzero[i]) continue;
    std::vector<std::pair<double, std::size_t>> by_distance;
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      if (j == i) continue;
      by_distance.emplace_back(
          euclidean_distance(centroids[members[i]].coords, centroids[members[j]].coords), j);
    }
    std::stable_sort(by_distance.begin(), by_distance.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto limit = std::min<std::size_t>(static_cast<std::size_t>(k), by_distance.size());
    for (std::size_t r = 0; r < limit; ++r) {
      const auto j = by_distance[r].second;
      if (!nonzero[j]) continue;
      sum += cosine_similarity(vectors[i], vectors[j]);
      ++pairs;
    }
  }
  if (pairs > 0) s.local = sum / static_cast<double>(pairs);
  return s;
}

std::vector<double> minus(const NormalizedPoint& a, const NormalizedPoint& b) {
  std::vector<double> out(a.coords.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.coords[k] - b.coords[k];
  return out;
}

}  // namespace

ShiftReport shift_suite(std::span<const ExtractionSet> sets, const Ontology& ontology,
                        const ShiftParams& params) {
  if (params.k < 1) throw Error(ErrorCode::InvalidSpec, "k must be at least 1");
  ShiftReport report;
  report.params = params;

  std::vector<GenreShiftInput> genres;
  std::set<std::string> formulation_ids;
  for (const auto& set : sets) {
    const auto positions = set.positions();
    if (positions.empty()) continue;
    genres.push_back({set.genre, centroid(cloud_of(ontology, positions)), set.results});
    for (const auto& [id, p] : set.results) formulation_ids.insert(id);
  }
  std::vector<NormalizedPoint> centroids;
  for (const auto& g : genres) centroids.push_back(g.centroid);

  std::vector<double> observed_global, observed_local;
  std::vector<std::string> scored;
  for (const auto& fid : formulation_ids) {
    FormulationShift fs;
    fs.formulation = fid;
    std::vector<std::vector<double>> vectors;
    std::vector<std::size_t> members;
    for (std::size_t gi = 0; gi < genres.size(); ++gi) {
      const auto it = genres[gi].positions.find(fid);
      if (it == genres[gi].positions.end()) continue;
      auto v = minus(bin_center(ontology, it->second), genres[gi].centroid);
      report.vectors.push_back({genres[gi].genre, fid, v});
      vectors.push_back(std::move(v));
      members.push_back(gi);
    }
    fs.genres_used = members.size();
    if (members.size() < static_cast<std::size_t>(params.k) + 1) {
      fs.skipped_reason = "InsufficientGenres: " + std::to_string(members.size()) + " genres for k=" +
                          std::to_string(params.k);
      report.formulations.push_back(std::move(fs));
      continue;
    }
    const auto s = score_shifts(vectors, members, centroids, params.k);
    fs.zero_vectors = s.zero_vectors;
    fs.global_mean_cosine = s.global;
    fs.knn_mean_cosine = s.local;
    if (s.global) observed_global.push_back(*s.global);
    if (s.local) observed_local.push_back(*s.local);
    report.formulations.push_back(std::move(fs));
  }

  // Baseline: every successful (genre, formulation) answer replaced by a
  // uniform random cell, keeping the observed centroids and neighbour sets.
  std::vector<double> base_global, base_local;
  const auto n = static_cast<std::uint64_t>(ontology.bins_per_dim());
  for (int trial = 0; trial < params.baseline_trials; ++trial) {
    Rng rng(params.seed, "shift-baseline", static_cast<std::uint64_t>(trial));
    for (const auto& fid : formulation_ids) {
      std::vector<std::vector<double>> vectors;
      std::vector<std::size_t> members;
      for (std::size_t gi = 0; gi < genres.size(); ++gi) {
        if (!genres[gi].positions.contains(fid)) continue;
        DiscretePosition p;
        p.indices.resize(ontology.dimension_count());
        for (auto& i : p.indices) i = static_cast<int>(rng.below(n));
        vectors.push_back(minus(bin_center(ontology, p), genres[gi].centroid));
        members.push_back(gi);
      }
      if (members.size() < static_cast<std::size_t>(params.k) + 1) continue;
      const auto s = score_shifts(vectors, members, centroids, params.k);
      if (s.global) base_global.push_back(*s.global);
      if (s.local) base_local.push_back(*s.local);
    }
  }
  report.comparisons["global_mean_cosine"] = compare(observed_global, base_global);
  report.comparisons["knn_mean_cosine"] = compare(observed_local, base_local);
  return report;
}

nlohmann::json to_json(const ShiftReport& report) {
  nlohmann::json formulations = nlohmann::json::array();
  for (const auto& f : report.formulations) {
    formulations.push_back({{"formulation", f.formulation},
                            {"genres_used", f.genres_used},
                            {"zero_vectors", f.zero_vectors},
                            {"global_mean_cosine", optional_json(f.global_mean_cosine)},
                            {"knn_mean_cosine", optional_json(f.knn_mean_cosine)},
                            {"skipped_reason", f.skipped_reason}});
  }
  nlohmann::json vectors = nlohmann::json::array();
  for (const auto& v : report.vectors)
    vectors.push_back({{"genre", v.genre}, {"formulation", v.formulation}, {"vector", v.vector}});
  nlohmann::json comparisons = nlohmann::json::object();
  for (const auto& [name, c] : report.comparisons) comparisons[name] = to_json(c);
  return {{"schema_version", 1},
          {"params",
           {{"k", report.params.k},
            {"baseline_trials", report.params.baseline_trials},
            {"seed", report.params.seed}}},
          {"formulations", formulations},
          {"vectors", vectors},
          {"comparisons", comparisons}};
}

}  // namespace vecont
