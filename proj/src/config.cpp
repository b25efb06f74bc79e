#include "vecont/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "vecont/error.hpp"
#include "vecont/hash.hpp"

namespace vecont {

const TomlValue* TomlTable::find(std::string_view key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

const TomlTable* TomlDocument::table(std::string_view name) const {
  for (const auto& [k, t] : tables)
    if (k == name) return &t;
  return nullptr;
}

namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : s_(text) {}

  TomlDocument parse() {
    TomlDocument doc;
    TomlTable* current = &doc.root;
    std::set<std::string> seen_tables;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        const auto table_line = line_;
        ++pos_;
        skip_ws();
        const auto name = key();
        skip_ws();
        expect(']');
        if (!seen_tables.insert(name).second) fail("table [" + name + "] defined twice");
        end_of_line();
        doc.tables.emplace_back(name, TomlTable{{}, table_line});
        current = &doc.tables.back().second;
        continue;
      }
      const auto k = key();
      skip_ws();
      expect('=');
      skip_ws();
      if (current->find(k) != nullptr) fail("duplicate key '" + k + "'");
      const auto line = line_;
      TomlValue v = value();
      v.line = line;
      current->entries.emplace_back(k, std::move(v));
      end_of_line();
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_) + ": " + msg);
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!at_end() && peek() != '\n') ++pos_;
  }

  void newline() {
    if (peek() == '\r') ++pos_;
    if (peek() == '\n') {
      ++pos_;
      ++line_;
    }
  }

  void skip_blank_lines() {
    while (!at_end()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') newline();
      else break;
    }
  }

  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() {
    while (!at_end()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') newline();
      else break;
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (at_end()) return;
    if (peek() != '\n' && peek() != '\r') fail("unexpected text after value");
    newline();
  }

  std::string key() {
    if (peek() == '"') return basic_string();
    std::string k;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        k.push_back(c);
        ++pos_;
      } else {
        break;
      }
    }
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end()) fail("unterminated escape");
      switch (s_[pos_++]) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'u': append_utf8(out, hex_digits(4)); break;
        case 'U': append_utf8(out, hex_digits(8)); break;
        default: fail("unsupported escape sequence");
      }
    }
    return out;
  }

  std::uint32_t hex_digits(int count) {
    std::uint32_t cp = 0;
    for (int i = 0; i < count; ++i) {
      const char c = peek();
      if (!std::isxdigit(static_cast<unsigned char>(c))) fail("bad unicode escape");
      cp = cp * 16 + static_cast<std::uint32_t>(std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (c | 0x20) - 'a' + 10);
      ++pos_;
    }
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail("bad unicode escape");
    return cp;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::string literal_string() {
    expect('\'');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '\'') break;
      out.push_back(c);
    }
    return out;
  }

  TomlValue value() {
    const char c = peek();
    if (c == '"') return {basic_string()};
    if (c == '\'') return {literal_string()};
    if (c == '[') return {array()};
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true};
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false};
    }
    return number();
  }

  TomlArray array() {
    expect('[');
    TomlArray out;
    while (true) {
      skip_array_space();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      const auto line = line_;
      TomlValue v = value();
      v.line = line;
      out.push_back(std::move(v));
      skip_array_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  TomlValue number() {
    const auto start = pos_;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_')
        ++pos_;
      else
        break;
    }
    std::string tok;
    for (char c : s_.substr(start, pos_ - start))
      if (c != '_') tok.push_back(c);
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" ||
                          tok == "nan" || tok == "+inf" || tok == "-inf";
    const char* first = tok.data() + (tok.front() == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (is_float) {
      double d = 0.0;
      const auto r = std::from_chars(first, last, d);
      if (r.ec != std::errc{} || r.ptr != last) fail("invalid number '" + tok + "'");
      return {d};
    }
    std::int64_t i = 0;
    const auto r = std::from_chars(first, last, i);
    if (r.ec != std::errc{} || r.ptr != last) fail("invalid value '" + tok + "'");
    return {i};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

// Collects violations instead of stopping at the first one.
class Validator {
 public:
  void add(const std::string& where, std::size_t line, const std::string& msg) {
    problems_.push_back(where + (line ? " (line " + std::to_string(line) + ")" : "") + ": " + msg);
  }
  void add(const std::string& msg) { problems_.push_back(msg); }

  void check_known(const TomlTable& t, const std::string& table, std::set<std::string_view> known) {
    for (const auto& [k, v] : t.entries)
      if (!known.contains(k)) add(qualify(table, k), v.line, "unknown key");
  }

  static std::string qualify(const std::string& table, const std::string& key) {
    return table.empty() ? key : table + "." + key;
  }

  template <class T>
  std::optional<T> get(const TomlTable* t, const std::string& table, std::string_view key) {
    if (t == nullptr) return std::nullopt;
    const TomlValue* v = t->find(key);
    if (v == nullptr) return std::nullopt;
    const auto where = qualify(table, std::string(key));
    if constexpr (std::is_same_v<T, double>) {
      if (const auto* d = std::get_if<double>(&v->v)) return *d;
      if (const auto* i = std::get_if<std::int64_t>(&v->v)) return static_cast<double>(*i);
      add(where, v->line, "expected a number");
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
      if (const auto* i = std::get_if<std::int64_t>(&v->v)) return *i;
      add(where, v->line, "expected an integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (const auto* b = std::get_if<bool>(&v->v)) return *b;
      add(where, v->line, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (const auto* s = std::get_if<std::string>(&v->v)) return *s;
      add(where, v->line, "expected a string");
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (const auto* a = std::get_if<TomlArray>(&v->v)) {
        std::vector<std::string> out;
        for (const auto& e : *a) {
          if (const auto* s = std::get_if<std::string>(&e.v)) out.push_back(*s);
          else add(where, e.line, "array entries must be strings");
        }
        return out;
      }
      add(where, v->line, "expected an array of strings");
    }
    return std::nullopt;
  }

  template <class T>
  void positive(const std::string& where, std::optional<std::int64_t> v, T& target,
                std::int64_t min = 1) {
    if (!v) return;
    if (*v < min) add(where + ": must be at least " + std::to_string(min));
    else target = static_cast<T>(*v);
  }

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

TomlDocument parse_toml(std::string_view text) { return TomlParser(text).parse(); }

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const TomlDocument doc = parse_toml(text);
  RunConfig cfg;
  Validator val;

  const std::set<std::string_view> tables = {"corpus",       "ontology", "genres",
                                             "formulations", "llm",      "analysis"};
  for (const auto& [name, t] : doc.tables)
    if (!tables.contains(name)) val.add("[" + name + "]", t.line, "unknown table");

  // Top level.
  val.check_known(doc.root, "", {"seed", "out"});
  if (auto s = val.get<std::int64_t>(&doc.root, "", "seed")) {
    if (*s < 0) val.add("seed: must be non-negative");
    else cfg.seed = static_cast<std::uint64_t>(*s);
  }
  if (auto o = val.get<std::string>(&doc.root, "", "out")) cfg.out = resolve(base_dir, *o);
  else cfg.out = resolve(base_dir, "out");

  // [corpus]: exactly one source.
  const TomlTable* corpus = doc.table("corpus");
  if (corpus == nullptr) {
    val.add("[corpus]: missing; set synth = true or path = \"...\"");
  } else {
    val.check_known(*corpus, "corpus", {"synth", "path", "format", "count"});
    const auto synth = val.get<bool>(corpus, "corpus", "synth");
    const auto path = val.get<std::string>(corpus, "corpus", "path");
    const bool is_synth = synth.value_or(false);
    if (is_synth == path.has_value())
      val.add("corpus: exactly one source is required (synth = true or path = \"...\")");
    cfg.corpus.synthetic = is_synth;
    if (path) cfg.corpus.path = resolve(base_dir, *path);
    if (auto f = val.get<std::string>(corpus, "corpus", "format")) {
      if (*f == "jsonl") cfg.corpus.format = CorpusFormat::Jsonl;
      else if (*f == "csv") cfg.corpus.format = CorpusFormat::Csv;
      else val.add("corpus.format: expected \"jsonl\" or \"csv\", got \"" + *f + "\"");
    } else if (path && cfg.corpus.path.extension() == ".csv") {
      cfg.corpus.format = CorpusFormat::Csv;
    }
    val.positive("corpus.count", val.get<std::int64_t>(corpus, "corpus", "count"),
                 cfg.corpus.synth_count);
    if (corpus->find("count") && !is_synth) val.add("corpus.count: only meaningful with synth = true");
  }

  // [ontology]
  if (const TomlTable* t = doc.table("ontology")) {
    val.check_known(*t, "ontology", {"bins", "density_threshold", "n_max"});
    if (const TomlValue* b = t->find("bins")) {
      if (const auto* s = std::get_if<std::string>(&b->v)) {
        if (*s != "auto") val.add("ontology.bins", b->line, "expected an integer or \"auto\"");
      } else if (const auto* i = std::get_if<std::int64_t>(&b->v)) {
        if (*i < 1 || *i > 4096) val.add("ontology.bins", b->line, "must be in [1, 4096]");
        else cfg.ontology.bins = static_cast<int>(*i);
      } else {
        val.add("ontology.bins", b->line, "expected an integer or \"auto\"");
      }
    } else {
      cfg.ontology.bins = 6;
    }
    if (auto d = val.get<double>(t, "ontology", "density_threshold")) {
      if (!(*d > 0.0 && *d <= 1.0)) val.add("ontology.density_threshold: must be in (0, 1]");
      else cfg.ontology.density_threshold = *d;
    }
    val.positive("ontology.n_max", val.get<std::int64_t>(t, "ontology", "n_max"), cfg.ontology.n_max);
  } else {
    cfg.ontology.bins = 6;
  }

  // [genres]
  if (const TomlTable* t = doc.table("genres")) {
    val.check_known(*t, "genres", {"list"});
    if (auto list = val.get<std::vector<std::string>>(t, "genres", "list")) {
      std::set<std::string> seen;
      for (const auto& g : *list) {
        if (g.empty()) val.add("genres.list: empty genre name");
        else if (!seen.insert(g).second) val.add("genres.list: duplicate genre \"" + g + "\"");
      }
      if (list->empty()) val.add("genres.list: must not be empty");
      cfg.genres = *list;
    } else if (t->find("list") == nullptr) {
      val.add("genres.list: required when [genres] is present");
    }
  } else {
    cfg.genres = default_genres();
  }

  // [formulations]: id = "template with {genre}"
  if (const TomlTable* t = doc.table("formulations")) {
    for (const auto& [id, v] : t->entries) {
      if (const auto* s = std::get_if<std::string>(&v.v)) cfg.formulations.push_back({id, *s});
      else val.add("formulations." + id, v.line, "expected a string template");
    }
    if (t->entries.empty()) val.add("[formulations]: table is empty; omit it to use the defaults");
  } else {
    cfg.formulations = default_formulations();
  }
  try {
    validate_formulations(cfg.formulations);
  } catch (const Error& e) {
    val.add(e.what());
  }

  // [llm]
  if (const TomlTable* t = doc.table("llm")) {
    val.check_known(*t, "llm",
                    {"endpoint", "model", "temperature", "max_retries", "timeout", "parallelism",
                     "cache", "mode", "api_key_env"});
    if (auto s = val.get<std::string>(t, "llm", "endpoint")) cfg.llm.endpoint = *s;
    if (auto s = val.get<std::string>(t, "llm", "model")) cfg.llm.model = *s;
    if (auto d = val.get<double>(t, "llm", "temperature")) {
      if (*d < 0.0 || *d > 2.0) val.add("llm.temperature: must be in [0, 2]");
      else cfg.llm.temperature = *d;
    }
    val.positive("llm.max_retries", val.get<std::int64_t>(t, "llm", "max_retries"),
                 cfg.llm.max_retries, 0);
    if (auto d = val.get<double>(t, "llm", "timeout")) {
      if (*d <= 0.0) val.add("llm.timeout: must be positive");
      else cfg.llm.timeout_seconds = *d;
    }
    val.positive("llm.parallelism", val.get<std::int64_t>(t, "llm", "parallelism"), cfg.llm.parallelism);
    if (auto s = val.get<std::string>(t, "llm", "cache")) cfg.llm.cache_path = resolve(base_dir, *s);
    if (auto s = val.get<std::string>(t, "llm", "mode")) {
      if (auto m = parse_mode(*s)) cfg.llm.mode = *m;
      else val.add("llm.mode: expected live, record or replay, got \"" + *s + "\"");
    }
    if (auto s = val.get<std::string>(t, "llm", "api_key_env")) cfg.llm.api_key_env = *s;
  }
  if (cfg.llm.model.empty()) val.add("llm.model: must not be empty");

  // [analysis]
  if (const TomlTable* t = doc.table("analysis")) {
    auto& a = cfg.analysis;
    val.check_known(*t, "analysis",
                    {"k", "sample_cap", "baseline_groups", "baseline_points", "accuracy_pairs",
                     "heatmap_grid", "min_genre_count", "shift_baseline_trials"});
    val.positive("analysis.k", val.get<std::int64_t>(t, "analysis", "k"), a.k);
    val.positive("analysis.sample_cap", val.get<std::int64_t>(t, "analysis", "sample_cap"), a.sample_cap);
    val.positive("analysis.baseline_groups", val.get<std::int64_t>(t, "analysis", "baseline_groups"),
                 a.baseline_groups);
    val.positive("analysis.baseline_points", val.get<std::int64_t>(t, "analysis", "baseline_points"),
                 a.baseline_points, 2);
    val.positive("analysis.accuracy_pairs", val.get<std::int64_t>(t, "analysis", "accuracy_pairs"),
                 a.accuracy_pairs);
    val.positive("analysis.heatmap_grid", val.get<std::int64_t>(t, "analysis", "heatmap_grid"),
                 a.heatmap_grid);
    val.positive("analysis.min_genre_count", val.get<std::int64_t>(t, "analysis", "min_genre_count"),
                 a.min_genre_count, 0);
    val.positive("analysis.shift_baseline_trials",
                 val.get<std::int64_t>(t, "analysis", "shift_baseline_trials"),
                 a.shift_baseline_trials);
  }

  if (!val.problems().empty()) {
    std::string msg = std::to_string(val.problems().size()) + " problem(s) in config:";
    for (const auto& p : val.problems()) msg += "\n  - " + p;
    throw Error(ErrorCode::ConfigError, msg);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

nlohmann::json canonical_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  if (cfg.corpus.synthetic) {
    j["corpus"] = {{"synth", true}, {"count", cfg.corpus.synth_count}};
  } else {
    // Content, not location, identifies the corpus.
    std::ifstream in(cfg.corpus.path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    j["corpus"] = {{"sha256", sha256_hex(ss.str())},
                   {"format", cfg.corpus.format == CorpusFormat::Csv ? "csv" : "jsonl"}};
  }
  j["ontology"] = {{"bins", cfg.ontology.bins ? nlohmann::json(*cfg.ontology.bins) : nlohmann::json("auto")},
                   {"density_threshold", cfg.ontology.density_threshold},
                   {"n_max", cfg.ontology.n_max}};
  j["genres"] = cfg.genres;
  nlohmann::ordered_json forms = nlohmann::ordered_json::array();
  for (const auto& f : cfg.formulations) forms.push_back({f.id, f.text});
  j["formulations"] = forms;
  j["llm"] = {{"endpoint", cfg.llm.endpoint},
              {"model", cfg.llm.model},
              {"temperature", cfg.llm.temperature},
              {"max_retries", cfg.llm.max_retries}};
  const auto& a = cfg.analysis;
  j["analysis"] = {{"k", a.k},
                   {"sample_cap", a.sample_cap},
                   {"baseline_groups", a.baseline_groups},
                   {"baseline_points", a.baseline_points},
                   {"accuracy_pairs", a.accuracy_pairs},
                   {"heatmap_grid", a.heatmap_grid},
                   {"min_genre_count", a.min_genre_count},
                   {"shift_baseline_trials", a.shift_baseline_trials}};
  return nlohmann::json::parse(j.dump());
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical_json(cfg).dump()); }

}  // namespace vecont
