#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "vecont/error.hpp"
#include "vecont/ontology.hpp"

using namespace vecont;

namespace {

std::vector<DimensionDomain> unit_dims(int d) {
  std::vector<DimensionDomain> dims;
  for (int k = 0; k < d; ++k) dims.push_back({"x" + std::to_string(k), 0.0, 1.0});
  return dims;
}

std::vector<FeatureVector> random_corpus(std::size_t m, int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FeatureVector> out(m);
  for (auto& v : out) {
    v.values.resize(d);
    for (auto& x : v.values) x = u(gen);
  }
  return out;
}

// Ranks of column k (1-based), assuming distinct values.
std::vector<std::size_t> ranks(const std::vector<FeatureVector>& corpus, std::size_t k) {
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return corpus[a].values[k] < corpus[b].values[k]; });
  std::vector<std::size_t> r(corpus.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = i + 1;
  return r;
}

}  // namespace

TEST(Ontology, BeethovenFeatureVectorBinsToPublishedPosition) {
  const auto ontology = reference_ontology();
  const FeatureVector beethoven{{0.3, 0.2, 0.0, 0.9, 0.9, 0.1, 0.2, 95}};
  EXPECT_EQ(assign_bin(ontology, beethoven).indices, (std::vector<int>{0, 0, 0, 4, 5, 1, 1, 1}));
}

TEST(Ontology, SixBinsInEightDimensions) {
  EXPECT_EQ(reference_ontology().total_bins(), std::optional<std::uint64_t>(1679616));
}

TEST(Ontology, TotalBinsOverflowIsReported) {
  std::vector<DimensionSpec> dims;
  for (int k = 0; k < 20; ++k) {
    DimensionSpec s{"x" + std::to_string(k), 0.0, 1.0, {}};
    for (int j = 0; j <= 10; ++j) s.edges.push_back(j / 10.0);
    dims.push_back(s);
  }
  EXPECT_FALSE(Ontology(dims, 10).total_bins().has_value());  // 10^20 > 2^64
}

TEST(Ontology, ReferenceEdgesAreStrictlyIncreasing) {
  const auto o = reference_ontology();
  for (const auto& d : o.dimensions()) {
    ASSERT_EQ(d.edges.size(), 7u);
    EXPECT_EQ(d.edges.front(), d.domain_min);
    EXPECT_EQ(d.edges.back(), d.domain_max);
    for (std::size_t j = 1; j < d.edges.size(); ++j) EXPECT_LT(d.edges[j - 1], d.edges[j]) << d.name;
  }
}

TEST(Ontology, EdgeValuesBelongToTheLowerBin) {
  const auto o = reference_ontology();
  // danceability edges (0, 0.35, 0.48, ...): 0.35 closes bin 0, just above opens bin 1
  FeatureVector v{{0.35, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 120}};
  EXPECT_EQ(assign_bin(o, v).indices[0], 0);
  v.values[0] = std::nextafter(0.35, 1.0);
  EXPECT_EQ(assign_bin(o, v).indices[0], 1);
  v.values[0] = 0.0;  // domain minimum is in the first bin
  EXPECT_EQ(assign_bin(o, v).indices[0], 0);
  v.values[0] = 1.0;
  EXPECT_EQ(assign_bin(o, v).indices[0], 5);
}

TEST(Ontology, OutOfDomainFeaturesAreRejected) {
  const auto o = reference_ontology();
  FeatureVector v{{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 300}};
  try {
    assign_bin(o, v);
    FAIL() << "expected OutOfDomain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfDomain);
  }
  EXPECT_THROW(assign_bin(o, FeatureVector{{0.5}}), Error);
}

TEST(Ontology, QuantileBinningMatchesRankOracle) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const std::size_t m = 50 + seed * 37;
    const int n = 2 + static_cast<int>(seed % 9);
    const auto corpus = random_corpus(m, 3, seed);
    const auto dims = unit_dims(3);
    const auto o = fit_edges(corpus, n, dims);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto r = ranks(corpus, k);
      std::vector<std::size_t> per_bin(n, 0);
      for (std::size_t i = 0; i < m; ++i) {
        const int bin = assign_bin(o, corpus[i]).indices[k];
        ASSERT_EQ(bin, oracle::rank_bin(r[i], m, n)) << "seed " << seed << " dim " << k;
        ++per_bin[bin];
      }
      // Equal frequency up to the integer remainder.
      const auto [lo, hi] = std::minmax_element(per_bin.begin(), per_bin.end());
      EXPECT_LE(*hi - *lo, 1u);
    }
  }
}

TEST(Ontology, EdgesEqualSortedSlices) {
  const auto corpus = random_corpus(1000, 1, 7);
  const auto o = fit_edges(corpus, 4, unit_dims(1));
  std::vector<double> col;
  for (const auto& v : corpus) col.push_back(v.values[0]);
  std::sort(col.begin(), col.end());
  const auto& e = o.dimension(0).edges;
  EXPECT_EQ(e[1], col[249]);
  EXPECT_EQ(e[2], col[499]);
  EXPECT_EQ(e[3], col[749]);
}

TEST(Ontology, DuplicateValuesWidenCollapsedEdges) {
  // 70% zeros: several quantiles land on 0.0.
  std::vector<FeatureVector> corpus;
  for (int i = 0; i < 70; ++i) corpus.push_back({{0.0}});
  for (int i = 0; i < 30; ++i) corpus.push_back({{0.1 + i * 0.01}});
  std::vector<std::string> warnings;
  const auto o = fit_edges(corpus, 6, unit_dims(1), &warnings);
  const auto& e = o.dimension(0).edges;
  for (std::size_t j = 1; j < e.size(); ++j) EXPECT_LT(e[j - 1], e[j]);
  EXPECT_FALSE(warnings.empty());
  // All the zeros share the first bin.
  EXPECT_EQ(assign_bin(o, {{0.0}}).indices[0], 0);
}

TEST(Ontology, TooFewDistinctValuesIsDegenerate) {
  std::vector<FeatureVector> corpus;
  for (int i = 0; i < 100; ++i) corpus.push_back({{i % 3 * 0.5}});
  try {
    fit_edges(corpus, 4, unit_dims(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateDimension);
  }
}

TEST(Ontology, EmptyCorpusIsRejected) {
  try {
    fit_edges({}, 4, unit_dims(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
}

TEST(Ontology, ResolutionSearchMatchesRankOccupancyOracle) {
  const std::size_t m = 10000;
  const auto corpus = random_corpus(m, 2, 99);
  const auto r0 = ranks(corpus, 0), r1 = ranks(corpus, 1);
  const int n_max = 200;
  // Oracle occupancy for every n, without the early exit.
  std::vector<double> occupancy(n_max + 1, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    std::set<std::pair<int, int>> cells;
    for (std::size_t i = 0; i < m; ++i)
      cells.insert({oracle::rank_bin(r0[i], m, n), oracle::rank_bin(r1[i], m, n)});
    occupancy[n] = static_cast<double>(cells.size()) / (n * n);
  }
  for (double threshold : {0.3, 0.5, 0.7}) {
    int best = 0;
    for (int n = 1; n <= n_max; ++n)
      if (occupancy[n] >= threshold) best = n;
    const auto result = search_resolution(corpus, unit_dims(2), threshold, n_max);
    EXPECT_EQ(result.n, best) << "threshold " << threshold;
    EXPECT_DOUBLE_EQ(result.occupancy, occupancy[best]);
    for (const auto& step : result.trace) EXPECT_DOUBLE_EQ(step.occupancy, occupancy[step.n]);
  }
}

TEST(Ontology, ResolutionSearchSmallCorpus) {
  // Three points cannot fill half of 2^8 cells, so only n = 1 qualifies.
  const auto corpus = random_corpus(3, 8, 5);
  const auto r = search_resolution(corpus, unit_dims(8), 0.5, 8);
  EXPECT_EQ(r.n, 1);
  EXPECT_EQ(r.trace.size(), 1u);
  try {
    search_resolution(std::vector<FeatureVector>{}, unit_dims(8), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
  EXPECT_THROW(search_resolution(corpus, unit_dims(8), 0.0), Error);
}

TEST(Ontology, BinCentersAndLift) {
  const auto o = reference_ontology();
  const DiscretePosition p{{0, 1, 2, 3, 4, 5, 0, 5}};
  const auto c = bin_center(o, p);
  EXPECT_DOUBLE_EQ(c.coords[0], 0.5 / 6);
  EXPECT_DOUBLE_EQ(c.coords[5], 5.5 / 6);
  const auto native = lift_to_native(o, c);
  EXPECT_EQ(assign_bin(o, native).indices, p.indices);
}

TEST(Ontology, PositionValidation) {
  const auto o = reference_ontology();
  try {
    validate_position(o, DiscretePosition{{0, 0, 0, 0, 0, 0, 0, 6}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
  EXPECT_NO_THROW(validate_position(o, DiscretePosition{{5, 5, 5, 5, 5, 5, 5, 5}}));
}

TEST(Ontology, JsonRoundTripIsExact) {
  const auto corpus = random_corpus(500, 4, 3);
  const auto o = fit_edges(corpus, 5, unit_dims(4));
  const auto back = ontology_from_json(nlohmann::json::parse(to_json(o).dump()));
  EXPECT_EQ(back, o);
  const DiscretePosition p{{1, 2, 3, 4}};
  EXPECT_EQ(position_from_json(to_json(p)), p);
}

TEST(Ontology, InvalidJsonIsASchemaError) {
  try {
    ontology_from_json(nlohmann::json{{"bins_per_dim", 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
  }
}

TEST(Ontology, ConstructorRejectsBrokenInvariants) {
  DimensionSpec s{"x", 0.0, 1.0, {0.0, 0.5, 0.5, 1.0}};
  EXPECT_THROW(Ontology({s}, 3), Error);
  DimensionSpec t{"x", 0.0, 1.0, {0.0, 0.5, 1.0}};
  EXPECT_THROW(Ontology({t}, 3), Error);  // wrong edge count
  EXPECT_THROW(Ontology({t, t}, 2), Error);  // duplicate names
}
