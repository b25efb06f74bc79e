// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "vecont/analysis.hpp"
#include "vecont/geometry.hpp"
#include "vecont/ontology.hpp"
#include "vecont/pipeline.hpp"
#include "vecont/stats.hpp"

using namespace vecont;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%02d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// Baseline statistics shared by criteria 3-6.
struct Baseline {
  std::vector<double> centroid, pairwise, max_radius;
  double seconds = 0.0;
};

Baseline baseline_groups() {
  const auto o = reference_ontology();
  const auto t0 = Clock::now();
  Baseline b;
  for (const auto& cloud : sample_uniform_positions(o, BaselineSpec{47, 1000, 42})) {
    b.centroid.push_back(mean_centroid_distance(cloud));
    b.pairwise.push_back(mean_pairwise_distance(cloud));
    b.max_radius.push_back(max_centroid_distance(cloud));
  }
  b.seconds = seconds_since(t0);
  return b;
}

void beethoven() {
  const auto o = reference_ontology();
  const FeatureVector v{{0.3, 0.2, 0.0, 0.9, 0.9, 0.1, 0.2, 95}};
  const auto t0 = Clock::now();
  const auto p = assign_bin(o, v);
  const double ms = seconds_since(t0) * 1e3;
  const bool ok = p.indices == std::vector<int>{0, 0, 0, 4, 5, 1, 1, 1} && ms < 1.0;
  std::string got;
  for (int i : p.indices) got += std::to_string(i);
  report(1, "beethoven-binning", ok, fmt("position %s in %.4f ms", got.c_str(), ms));
}

void bin_count() {
  const auto total = reference_ontology().total_bins();
  report(2, "bin-count", total == 1679616u,
         fmt("%llu positions", static_cast<unsigned long long>(total.value_or(0))));
}

void centroid_baseline(const Baseline& b) {
  const double m = mean(b.centroid);
  report(3, "random-centroid-baseline", std::fabs(m - 0.765) <= 0.010 && b.seconds < 5.0,
         fmt("grand mean %.4f (target 0.765 +/- 0.010), %.2f s", m, b.seconds));
}

void pairwise_baseline(const Baseline& b) {
  const double m = mean(b.pairwise);
  report(4, "random-pairwise-baseline", std::fabs(m - 1.079) <= 0.010,
         fmt("grand mean %.4f (target 1.079 +/- 0.010)", m));
}

void volume_closure(const Baseline& b) {
  const double v_mean = ball_volume_fraction(8, 0.765);
  const double r_max = mean(b.max_radius);
  const double v_max = ball_volume_fraction(8, r_max);
  const bool ok = v_mean >= 0.45 && v_mean <= 0.50 && std::fabs(v_max / 6.9 - 1.0) <= 0.15;
  report(5, "volume-closure", ok,
         fmt("V(8, 0.765) = %.4f (want [0.45, 0.50]); V(8, mean r_max = %.4f) = %.3f (want 6.9 +/- 15%%)",
             v_mean, r_max, v_max));
}

void perfect_consistency(const Baseline& b) {
  const auto o = reference_ontology();
  const std::vector<DiscretePosition> same(47, DiscretePosition{{2, 3, 1, 4, 0, 5, 2, 2}});
  const auto m = spread_metrics(o, same);
  const bool zeros = m.unique_locations == 1 && m.mean_centroid_distance == 0.0 &&
                     m.mean_pairwise_distance == 0.0 && m.affine_dim == 0 &&
                     m.volume_fraction_mean_radius == 0.0 && m.volume_fraction_max_radius == 0.0;
  const std::vector<double> observed{m.mean_centroid_distance};
  const double d = cohens_d(observed, b.centroid);
  report(6, "perfect-consistency", zeros && std::fabs(d) > 5.0,
         fmt("unique=%zu dist=%g pairwise=%g affine=%d volumes=%g/%g; d=%.2f vs %zu groups",
             m.unique_locations, m.mean_centroid_distance, m.mean_pairwise_distance, m.affine_dim,
             m.volume_fraction_mean_radius, m.volume_fraction_max_radius, d, b.centroid.size()));
}

PointCloud cloud_of(const std::vector<std::vector<double>>& pts) {
  std::vector<NormalizedPoint> out;
  for (const auto& p : pts) out.push_back({p});
  return PointCloud(out);
}

void geometry_oracles() {
  const auto t0 = Clock::now();
  const int fixtures = 25;
  std::mt19937_64 gen(2024);
  int affine_ok = 0, hull_ok = 0, pca_ok = 0, welch_ok = 0, d_ok = 0;

  for (int t = 0; t < fixtures; ++t) {
    std::uniform_int_distribution<int> coef(-3, 3);
    const int d = 3 + t % 6, rank = t % (d + 1), m = 4 + t % 10;
    std::vector<std::vector<long long>> dirs(rank, std::vector<long long>(d));
    for (auto& v : dirs)
      for (auto& x : v) x = coef(gen);
    std::vector<std::vector<long long>> ipts;
    std::vector<std::vector<double>> dpts;
    for (int i = 0; i < m; ++i) {
      std::vector<long long> p(d, 1);
      for (const auto& v : dirs) {
        const int c = coef(gen);
        for (int k = 0; k < d; ++k) p[k] += c * v[k];
      }
      ipts.push_back(p);
      dpts.emplace_back(p.begin(), p.end());
    }
    affine_ok += affine_dimension(cloud_of(dpts)) == oracle::exact_affine_dimension(ipts);
  }

  for (int t = 0; t < fixtures; ++t) {
    std::uniform_int_distribution<int> c(0, 3 + t % 7);
    std::vector<std::pair<long long, long long>> ipts;
    std::vector<Point2> pts;
    for (int i = 0; i < 2 + t; ++i) {
      const long long x = c(gen), y = c(gen);
      ipts.push_back({x, y});
      pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    }
    std::set<std::pair<long long, long long>> got;
    const auto hull = hull_2d(pts);
    for (const auto& p : hull) got.insert({static_cast<long long>(p.x), static_cast<long long>(p.y)});
    hull_ok += got == oracle::hull_vertices(ipts) && got.size() == hull.size();
  }

  for (int t = 0; t < fixtures; ++t) {
    std::normal_distribution<double> z(0.0, 1.0);
    const int d = 3 + t % 4;
    std::vector<std::vector<double>> pts(12 + t, std::vector<double>(d));
    for (auto& p : pts)
      for (int k = 0; k < d; ++k) p[k] = z(gen) * (1.0 + 1.5 * k);
    const auto model = fit_pca(cloud_of(pts), d);
    const auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(pts));
    bool ok = true;
    for (int c = 0; c < d; ++c) {
      ok &= std::fabs(model.explained_variance[c] - values[c]) <= 1e-8 * std::max(1.0, values[0]);
      for (int k = 0; k < d; ++k) ok &= std::fabs(model.components[c][k] - vectors[c][k]) <= 1e-8;
    }
    pca_ok += ok;
  }

  for (int t = 0; t < fixtures; ++t) {
    std::normal_distribution<double> za(0.0, 1.0 + t % 3), zb(0.25 * (t % 5), 0.5 + t % 4);
    std::vector<double> a(3 + t % 8), b(4 + t % 11);
    for (auto& x : a) x = za(gen);
    for (auto& x : b) x = zb(gen);
    const double va = oracle::ss(a) / (a.size() - 1) / a.size();
    const double vb = oracle::ss(b) / (b.size() - 1) / b.size();
    const double ts = (oracle::mean(a) - oracle::mean(b)) / std::sqrt(va + vb);
    const double df = (va + vb) * (va + vb) / (va * va / (a.size() - 1) + vb * vb / (b.size() - 1));
    welch_ok += std::fabs(welch_t_test(a, b) - oracle::t_two_sided_by_quadrature(ts, df)) <= 1e-9;
    d_ok += std::fabs(cohens_d(a, b) - oracle::cohens_d(a, b)) <= 1e-8;
  }

  const double s = seconds_since(t0);
  const bool ok = affine_ok == fixtures && hull_ok == fixtures && pca_ok == fixtures &&
                  welch_ok == fixtures && d_ok == fixtures && s < 10.0;
  report(7, "geometry-oracles", ok,
         fmt("affine %d/%d, hull %d/%d, pca %d/%d, welch %d/%d, cohen %d/%d in %.2f s", affine_ok,
             fixtures, hull_ok, fixtures, pca_ok, fixtures, welch_ok, fixtures, d_ok, fixtures, s));
}

ExtractionSet set_of(const std::string& genre, const std::vector<DiscretePosition>& positions) {
  ExtractionSet s;
  s.genre = genre;
  for (std::size_t i = 0; i < positions.size(); ++i) s.results[fmt("f%02zu", i)] = positions[i];
  return s;
}

void shift_identity() {
  const auto o = reference_ontology();
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> inner(1, 4), any(0, 5);
  const std::vector<std::vector<int>> offsets = {
      {1, 0, 0, 0, 0, 0, 0, 0}, {-1, 0, 0, 0, 0, 0, 0, 0}, {0, 1, -1, 0, 0, 0, 0, 1}, {0, 0, 0, 1, 1, 0, 0, 0}};

  std::vector<ExtractionSet> planted;
  for (int g = 0; g < 10; ++g) {
    std::vector<int> base(8);
    for (auto& x : base) x = inner(gen);
    std::vector<DiscretePosition> ps;
    for (const auto& off : offsets) {
      DiscretePosition p{base};
      for (int k = 0; k < 8; ++k) p.indices[k] += off[k];
      ps.push_back(p);
    }
    planted.push_back(set_of(fmt("g%d", g), ps));
  }
  const auto r = shift_suite(planted, o, ShiftParams{3, 0, 1});
  double worst_identity = 0.0;
  bool all_scored = !r.formulations.empty();
  for (const auto& f : r.formulations) {
    if (!f.global_mean_cosine || !f.knn_mean_cosine) {
      all_scored = false;
      continue;
    }
    worst_identity = std::max({worst_identity, std::fabs(*f.global_mean_cosine - 1.0),
                               std::fabs(*f.knn_mean_cosine - 1.0)});
  }

  double worst_equal = 0.0;
  int random_fixtures = 0;
  for (int t = 0; t < 20; ++t) {
    const int genres = 4 + t % 9;
    std::vector<ExtractionSet> sets;
    for (int g = 0; g < genres; ++g) {
      std::vector<DiscretePosition> ps(5, DiscretePosition{std::vector<int>(8)});
      for (auto& p : ps)
        for (auto& i : p.indices) i = any(gen);
      sets.push_back(set_of(fmt("g%d", g), ps));
    }
    for (const auto& f : shift_suite(sets, o, ShiftParams{genres - 1, 0, 1}).formulations) {
      if (!f.global_mean_cosine || !f.knn_mean_cosine) continue;
      worst_equal = std::max(worst_equal, std::fabs(*f.global_mean_cosine - *f.knn_mean_cosine));
    }
    ++random_fixtures;
  }
  const bool ok = all_scored && worst_identity <= 1e-12 && worst_equal <= 1e-12;
  report(8, "shift-identity", ok,
         fmt("planted |cos-1| <= %.1e; k=G-1 vs global max diff %.1e over %d fixtures", worst_identity,
             worst_equal, random_fixtures));
}

class CountingTransport : public ChatTransport {
 public:
  std::string complete(const ChatRequest&) override {
    ++calls;
    throw Error(ErrorCode::NetworkError, "network disabled in acceptance");
  }
  std::atomic<int> calls{0};
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// Runs the replay fixture twice; returns the first output dir.
fs::path end_to_end(const fs::path& scratch) {
  const fs::path a = scratch / "run-a", b = scratch / "run-b";
  CountingTransport transport;
  std::string detail;
  bool ok = true;
  try {
    const auto t0 = Clock::now();
    for (const auto& out : {a, b}) {
      auto cfg = load_config(fs::path(VECONT_FIXTURE_DIR) / "replay.toml");
      cfg.out = out;
      Pipeline p(cfg, PipelineOptions{std::nullopt, &transport});
      for (const auto& o : p.run_all()) ok &= o.exit_code == kExitOk;
    }
    std::size_t files = 0, differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      ++files;
      const auto other = b / fs::relative(e.path(), a);
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
    }
    ok &= transport.calls.load() == 0 && differing == 0 && files > 0;
    detail = fmt("%d network calls, %zu/%zu files identical, %.2f s for two runs", transport.calls.load(),
                 files - differing, files, seconds_since(t0));

    const auto comparisons = read_json(a / "consistency" / "consistency.json").at("report").at("comparisons");
    for (const auto& [metric, c] : comparisons.items()) {
      if (c.at("p_value").is_null()) {
        detail += fmt("; %s: observed %.3f = baseline %.3f, no test", metric.c_str(),
                      c.at("observed_mean").get<double>(), c.at("baseline_mean").get<double>());
        continue;
      }
      const double obs = c.at("observed_mean"), base = c.at("baseline_mean"), p = c.at("p_value");
      const bool beats = obs < base && p < 1e-6;
      ok &= beats;
      detail += fmt("; %s %.4g vs %.4g p=%.1e", metric.c_str(), obs, base, p);
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(9, "end-to-end-replay", ok, detail);
  return a;
}

void accuracy_sanity(const fs::path& run) {
  bool ok = true;
  std::string detail;
  try {
    const auto c = read_json(run / "accuracy" / "accuracy.json").at("report").at("comparisons");
    for (const char* metric : {"cosine_shifted_vs_raw_baseline", "cosine_shifted"}) {
      const auto& m = c.at(metric);
      const double obs = m.at("observed_mean"), base = m.at("baseline_mean");
      const bool has = !m.at("p_value").is_null() && !m.at("cohens_d").is_null();
      const double p = has ? m.at("p_value").get<double>() : 1.0;
      const double d = has ? m.at("cohens_d").get<double>() : 0.0;
      ok &= has && obs > base && p < 1e-6 && d > 0.0;
      detail += fmt("%s%s: %.3f vs %.3f p=%.1e d=%.2f", detail.empty() ? "" : "; ", metric, obs, base, p, d);
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(10, "synthetic-accuracy", ok, detail);
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / ("vecont-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(scratch);

  beethoven();
  bin_count();
  const auto baseline = baseline_groups();
  centroid_baseline(baseline);
  pairwise_baseline(baseline);
  volume_closure(baseline);
  perfect_consistency(baseline);
  geometry_oracles();
  shift_identity();
  const auto run = end_to_end(scratch);
  accuracy_sanity(run);

  fs::remove_all(scratch);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
