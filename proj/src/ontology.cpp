#include "vecont/ontology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include "vecont/error.hpp"

namespace vecont {

std::size_t DiscretePositionHash::operator()(const DiscretePosition& p) const noexcept {
  // FNV-1a over the index bytes.
  std::uint64_t h = 1469598103934665603ULL;
  for (int i : p.indices) {
    auto u = static_cast<std::uint32_t>(i);
    for (int b = 0; b < 4; ++b) {
      h ^= (u >> (8 * b)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  }
  return static_cast<std::size_t>(h);
}

Ontology::Ontology(std::vector<DimensionSpec> dimensions, int bins_per_dim)
    : dims_(std::move(dimensions)), n_(bins_per_dim) {
  if (n_ < 1) throw Error(ErrorCode::InvalidOntology, "bins_per_dim must be positive");
  if (dims_.empty()) throw Error(ErrorCode::InvalidOntology, "ontology needs at least one dimension");
  std::set<std::string> names;
  for (const auto& d : dims_) {
    if (d.name.empty()) throw Error(ErrorCode::InvalidOntology, "dimension name is empty");
    if (!names.insert(d.name).second)
      throw Error(ErrorCode::InvalidOntology, "duplicate dimension name '" + d.name + "'");
    if (!(d.domain_min < d.domain_max))
      throw Error(ErrorCode::InvalidOntology, d.name + ": domain_min must be below domain_max");
    if (d.edges.size() != static_cast<std::size_t>(n_) + 1)
      throw Error(ErrorCode::InvalidOntology,
                  d.name + ": expected " + std::to_string(n_ + 1) + " edges, got " +
                      std::to_string(d.edges.size()));
    if (d.edges.front() != d.domain_min || d.edges.back() != d.domain_max)
      throw Error(ErrorCode::InvalidOntology, d.name + ": outer edges must equal the domain bounds");
    for (std::size_t i = 1; i < d.edges.size(); ++i) {
      if (!(d.edges[i - 1] < d.edges[i]))
        throw Error(ErrorCode::InvalidOntology, d.name + ": edges must be strictly increasing");
    }
  }
}

std::vector<std::string> Ontology::dimension_names() const {
  std::vector<std::string> out;
  out.reserve(dims_.size());
  for (const auto& d : dims_) out.push_back(d.name);
  return out;
}

std::optional<std::size_t> Ontology::find_dimension(std::string_view name) const {
  for (std::size_t k = 0; k < dims_.size(); ++k)
    if (dims_[k].name == name) return k;
  return std::nullopt;
}

std::optional<std::uint64_t> Ontology::total_bins() const noexcept {
  std::uint64_t total = 1;
  const auto n = static_cast<std::uint64_t>(n_);
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (total > std::numeric_limits<std::uint64_t>::max() / n) return std::nullopt;
    total *= n;
  }
  return total;
}

std::vector<DimensionDomain> song_dimensions() {
  return {
      {"danceability", 0.0, 1.0},     {"energy", 0.0, 1.0},  {"speechiness", 0.0, 1.0},
      {"acousticness", 0.0, 1.0},     {"instrumentalness", 0.0, 1.0},
      {"liveness", 0.0, 1.0},         {"valence", 0.0, 1.0}, {"tempo", 0.0, 250.0},
  };
}

namespace {

// Makes edges strictly increasing by nudging each collapsed edge one ulp above its
// predecessor. Returns the number of nudged edges.
int widen_collapsed(std::vector<double>& edges) {
  int widened = 0;
  for (std::size_t i = 1; i + 1 < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      edges[i] = std::nextafter(edges[i - 1], std::numeric_limits<double>::infinity());
      ++widened;
    }
  }
  return widened;
}

}  // namespace

Ontology reference_ontology() {
  // Published six-bin ranges; the outer edges are the native domain bounds.
  const std::vector<std::vector<double>> inner = {
      {0.35, 0.48, 0.58, 0.67, 0.76},  // danceability
      {0.20, 0.42, 0.59, 0.73, 0.86},  // energy
      {0.03, 0.04, 0.05, 0.07, 0.13},  // speechiness
      {0.01, 0.06, 0.27, 0.66, 0.92},  // acousticness
      {0.00, 0.00, 0.03, 0.61, 0.87},  // instrumentalness
      {0.08, 0.10, 0.12, 0.18, 0.33},  // liveness
      {0.14, 0.29, 0.43, 0.59, 0.77},  // valence
      {88, 105, 120, 129, 145},        // tempo
  };
  const auto domains = song_dimensions();
  std::vector<DimensionSpec> dims;
  for (std::size_t k = 0; k < domains.size(); ++k) {
    DimensionSpec spec{domains[k].name, domains[k].min, domains[k].max, {}};
    spec.edges.push_back(domains[k].min);
    spec.edges.insert(spec.edges.end(), inner[k].begin(), inner[k].end());
    spec.edges.push_back(domains[k].max);
    widen_collapsed(spec.edges);
    dims.push_back(std::move(spec));
  }
  return Ontology(std::move(dims), 6);
}

Ontology fit_edges(std::span<const FeatureVector> corpus, int n,
                   std::span<const DimensionDomain> domains, std::vector<std::string>* warnings) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot fit edges on an empty corpus");
  if (n < 1) throw Error(ErrorCode::InvalidOntology, "n must be positive");
  if (domains.empty()) throw Error(ErrorCode::InvalidOntology, "no dimensions given");

  const std::size_t m = corpus.size();
  std::vector<DimensionSpec> dims;
  dims.reserve(domains.size());
  std::vector<double> column(m);

  for (std::size_t k = 0; k < domains.size(); ++k) {
    const auto& dom = domains[k];
    for (std::size_t i = 0; i < m; ++i) {
      const auto& values = corpus[i].values;
      if (values.size() != domains.size())
        throw Error(ErrorCode::OutOfDomain, "feature vector " + std::to_string(i) + " has " +
                                                std::to_string(values.size()) + " values, expected " +
                                                std::to_string(domains.size()));
      const double v = values[k];
      if (!(v >= dom.min && v <= dom.max))
        throw Error(ErrorCode::OutOfDomain, dom.name + " value " + std::to_string(v) +
                                                " outside [" + std::to_string(dom.min) + ", " +
                                                std::to_string(dom.max) + "]");
      column[i] = v;
    }
    std::sort(column.begin(), column.end());
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < m; ++i) distinct += column[i] != column[i - 1] ? 1 : 0;
    if (distinct < static_cast<std::size_t>(n))
      throw Error(ErrorCode::DegenerateDimension,
                  dom.name + " has " + std::to_string(distinct) + " distinct values, fewer than n=" +
                      std::to_string(n));

    DimensionSpec spec{dom.name, dom.min, dom.max, std::vector<double>(n + 1)};
    spec.edges.front() = dom.min;
    spec.edges.back() = dom.max;
    for (int j = 1; j < n; ++j) {
      // Largest value among the first ceil(j*m/n) ranks: right-closed bins then
      // hold equal shares up to the integer remainder.
      const std::size_t rank = (static_cast<std::size_t>(j) * m + n - 1) / n;
      spec.edges[j] = column[rank - 1];
    }
    if (const int widened = widen_collapsed(spec.edges); widened > 0 && warnings) {
      warnings->push_back(dom.name + ": widened " + std::to_string(widened) +
                          " collapsed edge(s) caused by duplicate values");
    }
    // Duplicates at the domain maximum push inner edges onto it; nudge those down.
    for (int j = n - 1; j >= 1; --j) {
      if (!(spec.edges[j] < spec.edges[j + 1]))
        spec.edges[j] = std::nextafter(spec.edges[j + 1], -std::numeric_limits<double>::infinity());
    }
    for (int j = 1; j <= n; ++j) {
      if (!(spec.edges[j - 1] < spec.edges[j]))
        throw Error(ErrorCode::DegenerateDimension, dom.name + ": edges cannot be separated");
    }
    dims.push_back(std::move(spec));
  }
  return Ontology(std::move(dims), n);
}

void validate_features(const Ontology& ontology, const FeatureVector& v) {
  if (v.values.size() != ontology.dimension_count())
    throw Error(ErrorCode::OutOfDomain, "feature vector has " + std::to_string(v.values.size()) +
                                            " values, expected " +
                                            std::to_string(ontology.dimension_count()));
  for (std::size_t k = 0; k < v.values.size(); ++k) {
    const auto& d = ontology.dimension(k);
    const double x = v.values[k];
    if (!(x >= d.domain_min && x <= d.domain_max)) {
      std::ostringstream msg;
      msg << d.name << " value " << x << " outside [" << d.domain_min << ", " << d.domain_max << "]";
      throw Error(ErrorCode::OutOfDomain, msg.str());
    }
  }
}

DiscretePosition assign_bin(const Ontology& ontology, const FeatureVector& v) {
  validate_features(ontology, v);
  DiscretePosition p;
  p.indices.resize(v.values.size());
  for (std::size_t k = 0; k < v.values.size(); ++k) {
    const auto& edges = ontology.dimension(k).edges;
    const auto it = std::lower_bound(edges.begin() + 1, edges.end(), v.values[k]);
    p.indices[k] = static_cast<int>(it - (edges.begin() + 1));
  }
  return p;
}

std::vector<DiscretePosition> assign_bins(const Ontology& ontology,
                                          std::span<const FeatureVector> corpus) {
  std::vector<DiscretePosition> out;
  out.reserve(corpus.size());
  for (const auto& v : corpus) out.push_back(assign_bin(ontology, v));
  return out;
}

void validate_position(const Ontology& ontology, const DiscretePosition& p) {
  if (p.indices.size() != ontology.dimension_count())
    throw Error(ErrorCode::IndexOutOfRange, "position has " + std::to_string(p.indices.size()) +
                                                " indices, expected " +
                                                std::to_string(ontology.dimension_count()));
  for (std::size_t k = 0; k < p.indices.size(); ++k) {
    if (p.indices[k] < 0 || p.indices[k] >= ontology.bins_per_dim())
      throw Error(ErrorCode::IndexOutOfRange, ontology.dimension(k).name + "=" +
                                                  std::to_string(p.indices[k]));
  }
}

NormalizedPoint bin_center(const Ontology& ontology, const DiscretePosition& p) {
  validate_position(ontology, p);
  const double n = ontology.bins_per_dim();
  NormalizedPoint out;
  out.coords.resize(p.indices.size());
  for (std::size_t k = 0; k < p.indices.size(); ++k) out.coords[k] = (p.indices[k] + 0.5) / n;
  return out;
}

FeatureVector lift_to_native(const Ontology& ontology, const NormalizedPoint& point) {
  if (point.coords.size() != ontology.dimension_count())
    throw Error(ErrorCode::IndexOutOfRange, "point dimension mismatch");
  const int n = ontology.bins_per_dim();
  FeatureVector out;
  out.values.resize(point.coords.size());
  for (std::size_t k = 0; k < point.coords.size(); ++k) {
    const double c = point.coords[k];
    if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::OutOfDomain, "coordinate outside [0,1]");
    const int i = std::min(n - 1, static_cast<int>(std::floor(c * n)));
    const auto& edges = ontology.dimension(k).edges;
    out.values[k] = edges[i] + 0.5 * (edges[i + 1] - edges[i]);
  }
  return out;
}

ResolutionResult search_resolution(std::span<const FeatureVector> corpus,
                                   std::span<const DimensionDomain> domains,
                                   double density_threshold, int n_max) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot search resolution on an empty corpus");
  if (!(density_threshold > 0.0 && density_threshold <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "density threshold must lie in (0, 1]");
  if (n_max < 1) throw Error(ErrorCode::InvalidSpec, "n_max must be positive");

  const double d = static_cast<double>(domains.size());
  const double m = static_cast<double>(corpus.size());
  ResolutionResult result;
  for (int n = 1; n <= n_max; ++n) {
    const double cells = std::pow(static_cast<double>(n), d);
    // Occupied bins never exceed the corpus size, so larger n cannot qualify.
    if (m < density_threshold * cells) break;
    std::optional<Ontology> ontology;
    try {
      ontology.emplace(fit_edges(corpus, n, domains));
    } catch (const Error& e) {
      // Too few distinct values for this n; finer grids fail the same way.
      if (e.code() == ErrorCode::DegenerateDimension && n > 1) break;
      throw;
    }
    std::unordered_set<DiscretePosition, DiscretePositionHash> seen;
    seen.reserve(corpus.size());
    for (const auto& v : corpus) seen.insert(assign_bin(*ontology, v));
    const double occupancy = static_cast<double>(seen.size()) / cells;
    result.trace.push_back({n, seen.size(), occupancy});
    if (occupancy >= density_threshold) {
      result.n = n;
      result.occupancy = occupancy;
    }
  }
  if (result.n == 0)
    throw Error(ErrorCode::NoFeasibleResolution, "no n in [1, n_max] meets the density threshold");
  return result;
}

nlohmann::json to_json(const Ontology& ontology) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : ontology.dimensions()) {
    dims.push_back({{"name", d.name},
                    {"domain_min", d.domain_min},
                    {"domain_max", d.domain_max},
                    {"edges", d.edges}});
  }
  return {{"schema_version", 1}, {"bins_per_dim", ontology.bins_per_dim()}, {"dimensions", dims}};
}

Ontology ontology_from_json(const nlohmann::json& j) {
  try {
    std::vector<DimensionSpec> dims;
    for (const auto& d : j.at("dimensions")) {
      dims.push_back({d.at("name").get<std::string>(), d.at("domain_min").get<double>(),
                      d.at("domain_max").get<double>(), d.at("edges").get<std::vector<double>>()});
    }
    return Ontology(std::move(dims), j.at("bins_per_dim").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("ontology json: ") + e.what());
  }
}

nlohmann::json to_json(const DiscretePosition& p) { return p.indices; }

DiscretePosition position_from_json(const nlohmann::json& j) {
  return DiscretePosition{j.get<std::vector<int>>()};
}

}  // namespace vecont
