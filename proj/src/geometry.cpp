#include "vecont/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <Eigen/Dense>

#include "vecont/error.hpp"
#include "vecont/special.hpp"

namespace vecont {

PointCloud::PointCloud(std::vector<NormalizedPoint> points) : points_(std::move(points)) {
  if (!points_.empty()) {
    dim_ = points_.front().coords.size();
    for (const auto& p : points_) {
      if (p.coords.size() != dim_)
        throw Error(ErrorCode::InvalidSpec, "point cloud mixes dimensions");
    }
  }
}

namespace {

void require_points(const PointCloud& cloud, std::size_t at_least) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "point cloud is empty");
  if (cloud.size() < at_least)
    throw Error(ErrorCode::InsufficientPoints, "need at least " + std::to_string(at_least) +
                                                   " points, got " + std::to_string(cloud.size()));
}

Eigen::MatrixXd centered_matrix(const PointCloud& cloud, const NormalizedPoint& mean) {
  Eigen::MatrixXd x(cloud.size(), cloud.dim());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t k = 0; k < cloud.dim(); ++k) x(i, k) = cloud[i].coords[k] - mean.coords[k];
  return x;
}

}  // namespace

NormalizedPoint centroid(const PointCloud& cloud) {
  require_points(cloud, 1);
  // Offsets from the first point: exact when every point coincides.
  const auto& origin = cloud[0].coords;
  std::vector<double> offset(cloud.dim(), 0.0);
  for (const auto& p : cloud.points())
    for (std::size_t k = 0; k < cloud.dim(); ++k) offset[k] += p.coords[k] - origin[k];
  NormalizedPoint c;
  c.coords.resize(cloud.dim());
  for (std::size_t k = 0; k < cloud.dim(); ++k)
    c.coords[k] = origin[k] + offset[k] / static_cast<double>(cloud.size());
  return c;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidSpec, "vector dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

std::vector<double> centroid_distances(const PointCloud& cloud) {
  const auto c = centroid(cloud);
  std::vector<double> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points()) out.push_back(euclidean_distance(p.coords, c.coords));
  return out;
}

double mean_centroid_distance(const PointCloud& cloud) {
  const auto d = centroid_distances(cloud);
  double s = 0.0;
  for (double v : d) s += v;
  return s / static_cast<double>(d.size());
}

double max_centroid_distance(const PointCloud& cloud) {
  const auto d = centroid_distances(cloud);
  return *std::max_element(d.begin(), d.end());
}

double mean_pairwise_distance(const PointCloud& cloud) {
  require_points(cloud, 2);
  double s = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      s += euclidean_distance(cloud[i].coords, cloud[j].coords);
      ++pairs;
    }
  }
  return s / static_cast<double>(pairs);
}

int affine_dimension(const PointCloud& cloud, double tol) {
  require_points(cloud, 1);
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidSpec, "rank tolerance must be positive");
  if (cloud.size() == 1) return 0;
  const Eigen::MatrixXd x = centered_matrix(cloud, centroid(cloud));
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  // Relative cutoff, floored at the rounding level of the coordinates.
  double scale = 0.0;
  for (const auto& p : cloud.points())
    for (double v : p.coords) scale = std::max(scale, std::fabs(v));
  const double noise = std::numeric_limits<double>::epsilon() * scale *
                       static_cast<double>(cloud.size() * cloud.dim());
  const double cutoff = std::max(tol * sv(0), noise);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > cutoff ? 1 : 0;
  return rank;
}

double log_ball_volume(int d, double radius) {
  if (d < 1) throw Error(ErrorCode::InvalidSpec, "ball dimension must be at least 1");
  if (radius < 0.0 || std::isnan(radius))
    throw Error(ErrorCode::NegativeRadius, "radius must be non-negative");
  if (radius == 0.0) return -std::numeric_limits<double>::infinity();
  const double half = 0.5 * d;
  return half * std::log(std::numbers::pi) + d * std::log(radius) - special::log_gamma(half + 1.0);
}

double ball_volume_fraction(int d, double radius) {
  const double lv = log_ball_volume(d, radius);
  return std::isinf(lv) ? 0.0 : std::exp(lv);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         std::optional<double> shift) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidSpec, "vector dimension mismatch");
  const double s = shift.value_or(0.0);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k] - s;
    const double y = b[k] - s;
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

PcaModel fit_pca(const PointCloud& cloud, int k) {
  require_points(cloud, 2);
  const auto d = static_cast<int>(cloud.dim());
  if (k < 1 || k > d)
    throw Error(ErrorCode::InvalidSpec, "PCA needs 1 <= k <= " + std::to_string(d));
  const auto mean = centroid(cloud);
  const Eigen::MatrixXd x = centered_matrix(cloud, mean);
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(cloud.size() - 1);
  const double trace = cov.trace();
  if (!(trace > 0.0)) throw Error(ErrorCode::DegenerateCovariance, "all points coincide");

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  PcaModel model;
  model.mean = mean.coords;
  model.total_variance = trace;
  // Eigen sorts ascending; walk from the top.
  for (int c = 0; c < k; ++c) {
    const int col = d - 1 - c;
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
      if (std::fabs(v(i)) > std::fabs(v(arg)) + 1e-12) arg = i;
    if (v(arg) < 0.0) v = -v;
    model.components.emplace_back(v.data(), v.data() + v.size());
    model.explained_variance.push_back(std::max(0.0, eig.eigenvalues()(col)));
  }
  return model;
}

std::vector<double> project(const PcaModel& model, std::span<const double> point) {
  if (point.size() != model.input_dim())
    throw Error(ErrorCode::InvalidSpec, "projection input dimension mismatch");
  std::vector<double> out(model.output_dim(), 0.0);
  for (std::size_t c = 0; c < model.output_dim(); ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < point.size(); ++k)
      s += (point[k] - model.mean[k]) * model.components[c][k];
    out[c] = s;
  }
  return out;
}

nlohmann::json to_json(const PcaModel& model) {
  return {{"schema_version", 1},
          {"mean", model.mean},
          {"components", model.components},
          {"explained_variance", model.explained_variance},
          {"total_variance", model.total_variance}};
}

PcaModel pca_from_json(const nlohmann::json& j) {
  try {
    PcaModel m;
    m.mean = j.at("mean").get<std::vector<double>>();
    m.components = j.at("components").get<std::vector<std::vector<double>>>();
    m.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    m.total_variance = j.at("total_variance").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("pca json: ") + e.what());
  }
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<Point2> hull_2d(std::vector<Point2> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() <= 2) return points;

  std::vector<Point2> hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = points.rbegin() + 1; it != points.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0.0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

std::size_t count_unique(std::span<const DiscretePosition> positions) {
  std::set<DiscretePosition> seen(positions.begin(), positions.end());
  return seen.size();
}

}  // namespace vecont
