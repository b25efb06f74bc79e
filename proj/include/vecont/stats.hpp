#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecont/geometry.hpp"
#include "vecont/ontology.hpp"

namespace vecont {

struct BaselineSpec {
  int points_per_group = 47;
  int groups = 1000;
  std::uint64_t seed = 0;
};

/// Groups of positions drawn independently and uniformly per coordinate over
/// all n^d cells. Group g uses sub-stream ("baseline", g) of the seed.
std::vector<std::vector<DiscretePosition>> sample_uniform_groups(const Ontology& ontology,
                                                                 const BaselineSpec& spec);

/// Same draws as sample_uniform_groups, mapped through bin_center.
std::vector<PointCloud> sample_uniform_positions(const Ontology& ontology, const BaselineSpec& spec);

double mean(std::span<const double> xs);
double median(std::span<const double> xs);
/// Sample variance (denominator n-1).
double sample_variance(std::span<const double> xs);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// Two-sided Welch unequal-variance t-test.
WelchResult welch_test(std::span<const double> a, std::span<const double> b);
double welch_t_test(std::span<const double> a, std::span<const double> b);

/// (mean_a - mean_b) / pooled sd.
double cohens_d(std::span<const double> a, std::span<const double> b);

struct ComparisonResult {
  double observed_mean = 0.0;
  double observed_median = 0.0;
  double baseline_mean = 0.0;
  double baseline_median = 0.0;
  std::size_t observed_count = 0;
  std::size_t baseline_count = 0;
  std::optional<double> p_value;   // empty when the test is undefined for the samples
  std::optional<double> cohens_d;
  std::vector<std::string> notes;
};

/// Observed-vs-baseline summary. Statistics that cannot be computed are left
/// empty with a note instead of throwing.
ComparisonResult compare(std::span<const double> observed, std::span<const double> baseline);

nlohmann::json to_json(const ComparisonResult& r);

}  // namespace vecont
