#include "vecont/stats.hpp"

#include <algorithm>
#include <cmath>

#include "vecont/error.hpp"
#include "vecont/rng.hpp"
#include "vecont/special.hpp"

namespace vecont {

std::vector<std::vector<DiscretePosition>> sample_uniform_groups(const Ontology& ontology,
                                                                 const BaselineSpec& spec) {
  if (spec.points_per_group < 2 || spec.groups < 1)
    throw Error(ErrorCode::InvalidSpec, "baseline needs points_per_group >= 2 and groups >= 1");
  const auto d = ontology.dimension_count();
  const auto n = static_cast<std::uint64_t>(ontology.bins_per_dim());
  std::vector<std::vector<DiscretePosition>> groups(spec.groups);
  for (int g = 0; g < spec.groups; ++g) {
    Rng rng(spec.seed, "baseline", static_cast<std::uint64_t>(g));
    auto& group = groups[g];
    group.resize(spec.points_per_group);
    for (auto& p : group) {
      p.indices.resize(d);
      for (auto& i : p.indices) i = static_cast<int>(rng.below(n));
    }
  }
  return groups;
}

std::vector<PointCloud> sample_uniform_positions(const Ontology& ontology, const BaselineSpec& spec) {
  std::vector<PointCloud> clouds;
  for (const auto& group : sample_uniform_groups(ontology, spec)) {
    std::vector<NormalizedPoint> pts;
    pts.reserve(group.size());
    for (const auto& p : group) pts.push_back(bin_center(ontology, p));
    clouds.emplace_back(std::move(pts));
  }
  return clouds;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::DegenerateSample, "mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::DegenerateSample, "median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateSample, "variance needs two values");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

WelchResult welch_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw Error(ErrorCode::DegenerateSample, "Welch test needs at least two values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;
  if (va == 0.0 && vb == 0.0)
    throw Error(ErrorCode::DegenerateSample, "both samples have zero variance");
  WelchResult r;
  const double se2 = va + vb;
  r.t = (mean(a) - mean(b)) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = std::clamp(special::student_t_two_sided(r.t, r.df), 0.0, 1.0);
  return r;
}

double welch_t_test(std::span<const double> a, std::span<const double> b) {
  return welch_test(a, b).p_value;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty() || a.size() + b.size() < 3)
    throw Error(ErrorCode::ZeroVariance, "pooled variance needs at least three values");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ssa = a.size() > 1 ? sample_variance(a) * (na - 1.0) : 0.0;
  const double ssb = b.size() > 1 ? sample_variance(b) * (nb - 1.0) : 0.0;
  const double pooled = std::sqrt((ssa + ssb) / (na + nb - 2.0));
  if (!(pooled > 0.0)) throw Error(ErrorCode::ZeroVariance, "pooled standard deviation is zero");
  return (mean(a) - mean(b)) / pooled;
}

ComparisonResult compare(std::span<const double> observed, std::span<const double> baseline) {
  ComparisonResult r;
  r.observed_count = observed.size();
  r.baseline_count = baseline.size();
  if (!observed.empty()) {
    r.observed_mean = mean(observed);
    r.observed_median = median(observed);
  }
  if (!baseline.empty()) {
    r.baseline_mean = mean(baseline);
    r.baseline_median = median(baseline);
  }
  try {
    r.p_value = welch_t_test(observed, baseline);
  } catch (const Error& e) {
    r.notes.push_back(std::string("p_value: ") + e.what());
  }
  try {
    r.cohens_d = cohens_d(observed, baseline);
  } catch (const Error& e) {
    r.notes.push_back(std::string("cohens_d: ") + e.what());
  }
  return r;
}

nlohmann::json to_json(const ComparisonResult& r) {
  nlohmann::json j = {{"observed_mean", r.observed_mean},
                      {"observed_median", r.observed_median},
                      {"baseline_mean", r.baseline_mean},
                      {"baseline_median", r.baseline_median},
                      {"observed_count", r.observed_count},
                      {"baseline_count", r.baseline_count},
                      {"p_value", nullptr},
                      {"cohens_d", nullptr},
                      {"notes", r.notes}};
  if (r.p_value) j["p_value"] = *r.p_value;
  if (r.cohens_d) j["cohens_d"] = *r.cohens_d;
  return j;
}

}  // namespace vecont
