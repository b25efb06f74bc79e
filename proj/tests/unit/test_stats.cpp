#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "vecont/error.hpp"
#include "vecont/ontology.hpp"
#include "vecont/rng.hpp"
#include "vecont/stats.hpp"

using namespace vecont;

TEST(Stats, WelchPValueMatchesQuadrature) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 25; ++t) {
    std::normal_distribution<double> za(0.0, 1.0 + t % 3), zb(0.3 * (t % 5), 0.5 + t % 4);
    std::vector<double> a(4 + t % 9), b(5 + t % 13);
    for (auto& x : a) x = za(gen);
    for (auto& x : b) x = zb(gen);

    const double va = oracle::ss(a) / (a.size() - 1) / a.size();
    const double vb = oracle::ss(b) / (b.size() - 1) / b.size();
    const double t_stat = (oracle::mean(a) - oracle::mean(b)) / std::sqrt(va + vb);
    const double df = (va + vb) * (va + vb) / (va * va / (a.size() - 1) + vb * vb / (b.size() - 1));

    const auto r = welch_test(a, b);
    EXPECT_NEAR(r.t, t_stat, 1e-10 * std::max(1.0, std::fabs(t_stat)));
    EXPECT_NEAR(r.df, df, 1e-9 * df);
    EXPECT_NEAR(r.p_value, oracle::t_two_sided_by_quadrature(t_stat, df), 1e-9) << "fixture " << t;
  }
}

TEST(Stats, StudentTailKnownValues) {
  // df = 1 is Cauchy: P(|T| > 1) = 1/2; df = 2 has a closed form.
  EXPECT_NEAR(oracle::t_two_sided_by_quadrature(1.0, 1.0), 0.5, 1e-9);
  const double t = 2.0;
  EXPECT_NEAR(oracle::t_two_sided_by_quadrature(t, 2.0), 1.0 - t / std::sqrt(2.0 + t * t), 1e-9);
}

TEST(Stats, WelchDegenerateSamples) {
  const std::vector<double> one{1.0}, flat{2.0, 2.0, 2.0}, flat2{3.0, 3.0};
  EXPECT_THROW(welch_test(one, flat), Error);
  try {
    welch_test(flat, flat2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSample);
  }
}

TEST(Stats, CohensDMatchesFormula) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 25; ++t) {
    std::normal_distribution<double> za(t * 0.1, 1.0), zb(0.0, 2.0);
    std::vector<double> a(2 + t % 7), b(3 + t % 11);
    for (auto& x : a) x = za(gen);
    for (auto& x : b) x = zb(gen);
    EXPECT_NEAR(cohens_d(a, b), oracle::cohens_d(a, b), 1e-10);
  }
  // Hand value: means 2 and 5, both with sum of squares 2, pooled sd sqrt(4/4) = 1.
  EXPECT_NEAR(cohens_d(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}), -3.0, 1e-12);
}

TEST(Stats, CohensDWithASingleObservation) {
  const std::vector<double> one{0.0}, base{1.0, 2.0, 3.0};
  // Pooled over the baseline alone: sd = 1.
  EXPECT_NEAR(cohens_d(one, base), -2.0, 1e-12);
  try {
    cohens_d(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
  }
}

TEST(Stats, CompareRecordsUncomputableStatistics) {
  const std::vector<double> one{1.0}, base{1.0, 2.0, 3.0};
  const auto r = compare(one, base);
  EXPECT_FALSE(r.p_value.has_value());
  ASSERT_TRUE(r.cohens_d.has_value());
  EXPECT_EQ(r.notes.size(), 1u);
  EXPECT_DOUBLE_EQ(r.baseline_mean, 2.0);
  const auto j = to_json(r);
  EXPECT_TRUE(j.at("p_value").is_null());
}

TEST(Stats, MeanMedianVariance) {
  const std::vector<double> x{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_DOUBLE_EQ(median(x), 2.5);
  EXPECT_DOUBLE_EQ(median(std::vector<double>{3, 1, 2}), 2.0);
  EXPECT_NEAR(sample_variance(x), 5.0 / 3.0, 1e-15);
}

TEST(Stats, BaselineGroupsAreSeededAndIndependent) {
  const auto o = reference_ontology();
  const BaselineSpec spec{47, 20, 123};
  const auto a = sample_uniform_groups(o, spec);
  const auto b = sample_uniform_groups(o, spec);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 20u);
  for (const auto& g : a) {
    ASSERT_EQ(g.size(), 47u);
    for (const auto& p : g) EXPECT_NO_THROW(validate_position(o, p));
  }
  // Group g does not depend on how many groups are drawn.
  const auto fewer = sample_uniform_groups(o, {47, 5, 123});
  for (int g = 0; g < 5; ++g) EXPECT_EQ(fewer[g], a[g]);
  EXPECT_NE(sample_uniform_groups(o, {47, 1, 124})[0], a[0]);
}

TEST(Stats, BaselineCoordinatesAreUniform) {
  const auto o = reference_ontology();
  const auto groups = sample_uniform_groups(o, {47, 500, 9});
  std::vector<int> counts(6, 0);
  int total = 0;
  for (const auto& g : groups)
    for (const auto& p : g)
      for (int i : p.indices) {
        ++counts[i];
        ++total;
      }
  // Chi-square with 5 degrees of freedom; 20.5 is the 0.999 quantile.
  double chi2 = 0;
  for (int c : counts) chi2 += std::pow(c - total / 6.0, 2) / (total / 6.0);
  EXPECT_LT(chi2, 20.5);
}

TEST(Rng, DrawsAreReproducibleAndInRange) {
  Rng a(42, "x"), b(42, "x"), c(42, "y");
  for (int i = 0; i < 100; ++i) {
    const auto va = a.below(7);
    EXPECT_EQ(va, b.below(7));
    EXPECT_LT(va, 7u);
  }
  EXPECT_NE(Rng(42, "x").next(), c.next());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  const auto s = Rng(5).sample_without_replacement(10, 4);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 4u);
  EXPECT_EQ(Rng(5).sample_without_replacement(3, 10).size(), 3u);
}

TEST(Rng, NormalMoments) {
  Rng r(77);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}
