#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vecont/dataset.hpp"
#include "vecont/extraction.hpp"

namespace vecont {

// A small TOML subset: [tables], bare or quoted keys, strings, integers,
// floats, booleans and (possibly multi-line) arrays of those. No inline
// tables, dotted keys or dates.
struct TomlValue;
using TomlArray = std::vector<TomlValue>;

struct TomlValue {
  std::variant<std::string, std::int64_t, double, bool, TomlArray> v;
  std::size_t line = 0;
};

struct TomlTable {
  std::vector<std::pair<std::string, TomlValue>> entries;  // file order
  std::size_t line = 0;

  const TomlValue* find(std::string_view key) const;
};

struct TomlDocument {
  TomlTable root;
  std::vector<std::pair<std::string, TomlTable>> tables;  // file order

  const TomlTable* table(std::string_view name) const;
};

/// Throws ParseError naming the line.
TomlDocument parse_toml(std::string_view text);

struct CorpusSource {
  bool synthetic = true;
  std::size_t synth_count = 20000;
  std::filesystem::path path;  // when not synthetic
  CorpusFormat format = CorpusFormat::Jsonl;
};

struct OntologyParams {
  std::optional<int> bins;  // nullopt: resolution search
  double density_threshold = 0.5;
  int n_max = 64;
};

struct AnalysisParams {
  int k = 5;
  std::size_t sample_cap = 50;
  int baseline_groups = 1000;
  int baseline_points = 47;
  std::size_t accuracy_pairs = 10000;
  int heatmap_grid = 24;
  std::uint64_t min_genre_count = 0;
  int shift_baseline_trials = 20;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out = "out";
  CorpusSource corpus;
  OntologyParams ontology;
  std::vector<std::string> genres;
  std::vector<FormulationTemplate> formulations;
  LlmConfig llm;
  AnalysisParams analysis;
};

/// Parses and validates; every violation is collected into one ConfigError.
/// Relative paths resolve against `base_dir`. Missing genres/formulations
/// fall back to the shipped defaults.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical form of everything that influences results. Output location
/// and LLM mode are left out, so relocated or replayed runs hash the same.
nlohmann::json canonical_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace vecont
