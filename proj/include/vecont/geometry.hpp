#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "vecont/ontology.hpp"

namespace vecont {

/// A non-empty-by-convention set of points sharing one dimension. Most
/// clouds hold unit-cube bin centers, but nothing here relies on that.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<NormalizedPoint> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<NormalizedPoint>& points() const noexcept { return points_; }
  const NormalizedPoint& operator[](std::size_t i) const { return points_[i]; }

 private:
  std::vector<NormalizedPoint> points_;
  std::size_t dim_ = 0;
};

NormalizedPoint centroid(const PointCloud& cloud);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Distance of each point to the cloud centroid, in point order.
std::vector<double> centroid_distances(const PointCloud& cloud);
double mean_centroid_distance(const PointCloud& cloud);
double max_centroid_distance(const PointCloud& cloud);

/// Mean over the m(m-1)/2 unordered pairs.
double mean_pairwise_distance(const PointCloud& cloud);

/// Rank of the mean-centered point matrix, counting singular values above
/// tol * sigma_max.
int affine_dimension(const PointCloud& cloud, double tol = 1e-9);

/// Volume of the d-ball of the given radius relative to the unit cube. Not
/// clipped: large radii give fractions above 1.
double ball_volume_fraction(int d, double radius);

/// Natural log of the same volume; -inf for radius 0.
double log_ball_volume(int d, double radius);

/// Cosine of (a - shift) and (b - shift). Throws ZeroVector if either
/// shifted vector vanishes.
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         std::optional<double> shift = std::nullopt);

struct PcaModel {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // orthonormal rows, by decreasing variance
  std::vector<double> explained_variance;       // one per component
  double total_variance = 0.0;                  // trace of the sample covariance

  std::size_t input_dim() const noexcept { return mean.size(); }
  std::size_t output_dim() const noexcept { return components.size(); }
};

/// Top-k eigenvectors of the sample covariance (denominator m-1). Each
/// component's largest-magnitude entry is made positive.
PcaModel fit_pca(const PointCloud& cloud, int k);

std::vector<double> project(const PcaModel& model, std::span<const double> point);

nlohmann::json to_json(const PcaModel& model);
PcaModel pca_from_json(const nlohmann::json& j);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  auto operator<=>(const Point2&) const = default;
};

/// Counter-clockwise hull (monotone chain) starting from the lowest-x,
/// lowest-y vertex. Collinear boundary points are dropped; degenerate input
/// yields a single point or the two segment endpoints.
std::vector<Point2> hull_2d(std::vector<Point2> points);

std::size_t count_unique(std::span<const DiscretePosition> positions);

}  // namespace vecont
