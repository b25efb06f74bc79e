#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecont/dataset.hpp"
#include "vecont/extraction.hpp"
#include "vecont/geometry.hpp"
#include "vecont/ontology.hpp"
#include "vecont/stats.hpp"

namespace vecont {

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

/// Spread metrics of one group of positions (a genre or a random baseline group).
struct SpreadMetrics {
  std::size_t total_queries = 0;
  std::size_t unique_locations = 0;
  double mean_centroid_distance = 0.0;
  double max_centroid_distance = 0.0;
  double mean_pairwise_distance = 0.0;
  int affine_dim = 0;
  double volume_fraction_mean_radius = 0.0;
  double volume_fraction_max_radius = 0.0;
};

/// Requires at least two positions.
SpreadMetrics spread_metrics(const Ontology& ontology, std::span<const DiscretePosition> positions);

struct GenreConsistency {
  std::string genre;
  SpreadMetrics metrics;
};

/// Names of the compared metrics, in report order.
std::vector<std::string> consistency_metric_names();
double metric_value(const SpreadMetrics& m, const std::string& name);

struct ConsistencyReport {
  std::vector<GenreConsistency> genres;          // input order
  std::vector<std::string> excluded;             // fewer than two successful positions
  std::map<std::string, ComparisonResult> comparisons;  // metric -> observed vs baseline
  BaselineSpec baseline;
  double baseline_mean_max_radius = 0.0;
};

ConsistencyReport consistency_suite(std::span<const ExtractionSet> sets, const Ontology& ontology,
                                    const BaselineSpec& baseline);

nlohmann::json to_json(const ConsistencyReport& report);

// ---------------------------------------------------------------------------
// Accuracy
// ---------------------------------------------------------------------------

/// Lowercased words of a genre name, split on spaces and hyphens.
std::vector<std::string> genre_tokens(std::string_view genre);

struct LocationDistribution {
  std::map<std::string, std::uint64_t> genres;
  std::map<std::string, std::uint64_t> tokens;
  std::size_t sampled_songs = 0;
  std::size_t empty_bins = 0;
};

/// Pools up to `cap` sampled songs per successful formulation location and
/// counts their genre labels and label tokens.
LocationDistribution distribution_at_locations(const ExtractionSet& set,
                                               std::span<const SongRecord> corpus,
                                               const BinMembership& membership, std::size_t cap,
                                               std::uint64_t seed);

struct GenreAccuracy {
  std::string genre;
  NormalizedPoint extraction_centroid;
  NormalizedPoint truth_centroid;
  double centroid_euclidean = 0.0;
  double cosine_raw = 0.0;
  std::optional<double> cosine_shifted;  // empty when a shifted vector vanishes
  std::optional<LocationDistribution> distribution;
};

struct AccuracyParams {
  std::size_t baseline_pairs = 10000;
  std::uint64_t seed = 0;
  std::uint64_t min_genre_count = 0;
  std::size_t sample_cap = 50;
};

struct AccuracyReport {
  std::vector<GenreAccuracy> genres;
  std::vector<std::string> excluded;  // no successful positions or absent from the index
  // centroid_euclidean, cosine_raw, cosine_shifted, cosine_shifted_vs_raw_baseline
  std::map<std::string, ComparisonResult> comparisons;
  AccuracyParams params;
  std::size_t skipped_shifted_pairs = 0;  // zero vectors in the shifted cosine
};

/// `corpus`, when given, adds the sampled location distributions.
AccuracyReport accuracy_suite(std::span<const ExtractionSet> sets, const GroundTruthIndex& index,
                              const AccuracyParams& params,
                              std::span<const SongRecord> corpus = {},
                              const BinMembership* membership = nullptr);

nlohmann::json to_json(const AccuracyReport& report);

// ---------------------------------------------------------------------------
// Formulation shifts
// ---------------------------------------------------------------------------

struct FormulationShift {
  std::string formulation;
  std::size_t genres_used = 0;
  std::size_t zero_vectors = 0;
  std::optional<double> global_mean_cosine;
  std::optional<double> knn_mean_cosine;
  std::string skipped_reason;  // InsufficientGenres etc.
};

struct ShiftVector {
  std::string genre;
  std::string formulation;
  std::vector<double> vector;
};

struct ShiftParams {
  int k = 5;
  int baseline_trials = 20;
  std::uint64_t seed = 0;
};

struct ShiftReport {
  ShiftParams params;
  std::vector<FormulationShift> formulations;
  std::vector<ShiftVector> vectors;
  std::map<std::string, ComparisonResult> comparisons;  // global, knn
};

/// Per formulation: s(g,f) = position(g,f) - centroid(g); global score is the
/// mean cosine over unordered cross-genre pairs, local score restricts each
/// genre to its k nearest genre centroids. Baseline replaces every position
/// by a uniform random grid cell.
ShiftReport shift_suite(std::span<const ExtractionSet> sets, const Ontology& ontology,
                        const ShiftParams& params);

nlohmann::json to_json(const ShiftReport& report);

}  // namespace vecont
