#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace vecont {

/// Name and native-unit bounds of one ontological dimension, before binning.
struct DimensionDomain {
  std::string name;
  double min = 0.0;
  double max = 1.0;
};

/// A binned dimension. `edges` holds n+1 strictly increasing boundaries with
/// edges.front() == domain_min and edges.back() == domain_max.
struct DimensionSpec {
  std::string name;
  double domain_min = 0.0;
  double domain_max = 1.0;
  std::vector<double> edges;

  bool operator==(const DimensionSpec&) const = default;
};

/// Raw feature values in each dimension's native units (tempo in BPM, the rest in [0,1]).
struct FeatureVector {
  std::vector<double> values;
};

/// Grid cell: one bin index per dimension, each in [0, n-1].
struct DiscretePosition {
  std::vector<int> indices;

  auto operator<=>(const DiscretePosition&) const = default;
  bool operator==(const DiscretePosition&) const = default;
};

struct DiscretePositionHash {
  std::size_t operator()(const DiscretePosition& p) const noexcept;
};

/// Unit-cube embedding of a position; all geometry runs on these.
struct NormalizedPoint {
  std::vector<double> coords;

  bool operator==(const NormalizedPoint&) const = default;
};

/// The discretized vector space: ordered dimensions sharing one bin count n.
/// Construction validates every invariant, so a live Ontology is always usable.
class Ontology {
 public:
  Ontology(std::vector<DimensionSpec> dimensions, int bins_per_dim);

  const std::vector<DimensionSpec>& dimensions() const noexcept { return dims_; }
  const DimensionSpec& dimension(std::size_t k) const { return dims_.at(k); }
  std::size_t dimension_count() const noexcept { return dims_.size(); }
  int bins_per_dim() const noexcept { return n_; }
  std::vector<std::string> dimension_names() const;
  std::optional<std::size_t> find_dimension(std::string_view name) const;

  /// n^d as an exact integer; nullopt when it does not fit in 64 bits.
  std::optional<std::uint64_t> total_bins() const noexcept;

  bool operator==(const Ontology&) const = default;

 private:
  std::vector<DimensionSpec> dims_;
  int n_;
};

/// The eight audio-feature dimensions with their native domains.
std::vector<DimensionDomain> song_dimensions();

/// The fixed six-bin ontology of the published Spotify corpus. Collapsed
/// instrumentalness edges are widened by one ulp each.
Ontology reference_ontology();

/// Equal-frequency edges per dimension. Collapsed edges caused by duplicate
/// values are widened by one representable step and reported in `warnings`.
Ontology fit_edges(std::span<const FeatureVector> corpus, int n,
                   std::span<const DimensionDomain> domains,
                   std::vector<std::string>* warnings = nullptr);

/// Bin lookup with the interval convention [e0,e1], (e1,e2], ..., (e_{n-1},e_n].
DiscretePosition assign_bin(const Ontology& ontology, const FeatureVector& v);

std::vector<DiscretePosition> assign_bins(const Ontology& ontology,
                                          std::span<const FeatureVector> corpus);

/// coords[k] = (indices[k] + 0.5) / n.
NormalizedPoint bin_center(const Ontology& ontology, const DiscretePosition& p);

/// Native-unit midpoint of the bin that contains a grid coordinate.
FeatureVector lift_to_native(const Ontology& ontology, const NormalizedPoint& point);

void validate_position(const Ontology& ontology, const DiscretePosition& p);
void validate_features(const Ontology& ontology, const FeatureVector& v);

struct ResolutionStep {
  int n = 0;
  std::size_t occupied = 0;
  double occupancy = 0.0;
};

struct ResolutionResult {
  int n = 0;
  double occupancy = 0.0;
  std::vector<ResolutionStep> trace;
};

/// Largest n <= n_max whose occupied-bin fraction reaches `density_threshold`.
/// Occupancy is counted over distinct positions, never over a dense n^d grid.
ResolutionResult search_resolution(std::span<const FeatureVector> corpus,
                                   std::span<const DimensionDomain> domains,
                                   double density_threshold, int n_max = 64);

nlohmann::json to_json(const Ontology& ontology);
Ontology ontology_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DiscretePosition& p);
DiscretePosition position_from_json(const nlohmann::json& j);

}  // namespace vecont
