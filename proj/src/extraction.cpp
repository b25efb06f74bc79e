#include "vecont/extraction.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "vecont/hash.hpp"

namespace vecont {

namespace {

constexpr std::string_view kPlaceholder = "{genre}";

std::size_t count_placeholders(std::string_view text) {
  std::size_t n = 0;
  for (auto pos = text.find(kPlaceholder); pos != std::string_view::npos;
       pos = text.find(kPlaceholder, pos + kPlaceholder.size()))
    ++n;
  return n;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string FormulationTemplate::instantiate(std::string_view genre) const {
  std::string out = text;
  const auto pos = out.find(kPlaceholder);
  if (pos != std::string::npos) out.replace(pos, kPlaceholder.size(), genre);
  return out;
}

std::vector<FormulationTemplate> default_formulations() {
  struct Family {
    const char* name;
    std::vector<const char*> texts;
  };
  const std::vector<Family> families = {
      {"direct",
       {"{genre}", "{genre} music", "{genre} songs", "Some {genre}", "{genre}, please",
        "Play some {genre}", "Play me {genre} songs", "Queue up some {genre}",
        "Put on some {genre}", "Start a {genre} playlist"}},
      {"action",
       {"Find me {genre} music", "Recommend some {genre} tracks", "Show me the best {genre} songs",
        "Give me a {genre} track", "Can you play {genre} for me?", "Search for {genre} music",
        "Suggest a {genre} song", "Spin some {genre}"}},
      {"preference",
       {"I want {genre} music", "I want {genre}", "I love {genre}",
        "I'd like to hear some {genre}", "My favorite genre is {genre}",
        "I'm a big fan of {genre}", "I prefer {genre} over everything else",
        "Nothing beats {genre} for me"}},
      {"mood",
       {"I'm in the mood for {genre} music", "I'm feeling {genre}",
        "Let's chill with some {genre} music", "I'm vibing with {genre}",
        "Something with a {genre} vibe", "I need some {genre} energy",
        "Set the mood with {genre}", "Give me that {genre} feeling"}},
      {"context",
       {"Play {genre} for my workout", "Background {genre} for studying",
        "{genre} for a road trip", "Music for a party, {genre} style",
        "{genre} to relax after work", "Play {genre} while I cook dinner",
        "Something {genre} for a rainy day", "{genre} for a night out"}},
      {"question",
       {"What does {genre} sound like?", "Can I hear a typical {genre} song?",
        "Do you have any {genre}?", "What's a good {genre} track right now?",
        "Surprise me with {genre}"}},
  };
  std::vector<FormulationTemplate> out;
  for (const auto& f : families) {
    int i = 0;
    for (const char* t : f.texts) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%02d", f.name, ++i);
      out.push_back({id, t});
    }
  }
  return out;
}

void validate_formulations(std::span<const FormulationTemplate> formulations) {
  std::vector<std::string> problems;
  std::set<std::string> ids;
  if (formulations.empty()) problems.emplace_back("no formulations configured");
  for (const auto& f : formulations) {
    if (f.id.empty()) problems.emplace_back("formulation with empty id");
    if (!ids.insert(f.id).second) problems.push_back("duplicate formulation id '" + f.id + "'");
    if (count_placeholders(f.text) != 1)
      problems.push_back("formulation '" + f.id + "' must contain exactly one {genre}");
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::ConfigError, msg);
  }
}

std::vector<std::string> default_genres() {
  return {"pop",         "rock",        "jazz",
          "classical",   "hip hop",     "rap",
          "r&b",         "country",     "folk",
          "blues",       "metal",       "punk",
          "electronic",  "techno",      "house",
          "trance",      "dubstep",     "reggae",
          "ska",         "latin",       "salsa",
          "soul",        "funk",        "disco",
          "gospel",      "opera",       "ambient",
          "lo-fi",       "indie rock",  "indie pop",
          "alternative rock", "hard rock", "punk rock",
          "grunge",      "emo",         "k-pop",
          "j-pop",       "edm",         "drum and bass",
          "bossa nova",  "flamenco",    "afrobeat",
          "synthwave",   "new age",     "singer-songwriter",
          "trap",        "swing",       "bluegrass",
          "grime",       "shoegaze"};
}

std::string_view to_string(LlmMode mode) {
  switch (mode) {
    case LlmMode::Live: return "live";
    case LlmMode::Record: return "record";
    case LlmMode::Replay: return "replay";
  }
  return "replay";
}

std::optional<LlmMode> parse_mode(std::string_view s) {
  if (s == "live") return LlmMode::Live;
  if (s == "record") return LlmMode::Record;
  if (s == "replay") return LlmMode::Replay;
  return std::nullopt;
}

namespace {

std::string format_edge(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string build_system_prompt(const Ontology& ontology) {
  const auto d = ontology.dimension_count();
  const int n = ontology.bins_per_dim();
  std::ostringstream os;
  os << "Answer in a single JSON object with an entry called 'location', which is a list "
        "of variables formatted as dimension names as keys and indices as values. "
        "These describe the location in the "
     << d << "D vibe space, with the dimensions [";
  for (std::size_t k = 0; k < d; ++k) os << (k ? ", " : "") << "'" << ontology.dimension(k).name << "'";
  os << "] taken by a vibe corresponding to the music you would recommend based on the chat "
        "history. Return variables as indices corresponding to the bucket values in this "
        "pattern (zero-indexed) ensuring that the values are within the range of the bins (0-"
     << (n - 1) << "): [";
  for (std::size_t k = 0; k < d; ++k) {
    const auto& dim = ontology.dimension(k);
    // Native units wider than [0, 10] (tempo) read better without decimals.
    const int decimals = dim.domain_max - dim.domain_min > 10.0 ? 0 : 2;
    os << (k ? ", " : "") << "{'name': '" << dim.name << "', 'ranges': [";
    for (int i = 0; i < n; ++i) {
      os << (i ? ", " : "") << "'" << format_edge(dim.edges[i], decimals) << "-"
         << format_edge(dim.edges[i + 1], decimals) << "'";
    }
    os << "]}";
  }
  os << "]";
  return os.str();
}

namespace {

// Candidate JSON documents in the order they are tried: the whole text, fenced
// blocks, then every balanced {...} span.
std::vector<std::string> json_candidates(std::string_view raw) {
  std::vector<std::string> out;
  out.push_back(trim(raw));
  for (auto pos = raw.find("```"); pos != std::string_view::npos;) {
    auto body = raw.find('\n', pos);
    const auto end = body == std::string_view::npos ? body : raw.find("```", body);
    if (end == std::string_view::npos) break;
    out.push_back(trim(raw.substr(body + 1, end - body - 1)));
    pos = raw.find("```", end + 3);
  }
  for (std::size_t start = raw.find('{'); start != std::string_view::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        out.emplace_back(raw.substr(start, i - start + 1));
        break;
      }
    }
  }
  return out;
}

int as_index(const nlohmann::json& v, const std::string& dim) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::floor(x) == x && std::fabs(x) < 1e6) return static_cast<int>(x);
  }
  if (v.is_string()) {
    const auto s = trim(v.get<std::string>());
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) && s.size() < 7)
      return std::stoi(s);
  }
  throw Error(ErrorCode::MalformedJson, "non-integer index for " + dim);
}

}  // namespace

DiscretePosition parse_position(std::string_view raw, const Ontology& ontology) {
  std::optional<nlohmann::json> location;
  for (const auto& candidate : json_candidates(raw)) {
    const auto doc = nlohmann::json::parse(candidate, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) continue;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (lower(trim(it.key())) == "location") {
        location = it.value();
        break;
      }
    }
    if (location) break;
  }
  if (!location) throw Error(ErrorCode::MalformedJson, "no JSON object with a 'location' entry");

  const auto d = ontology.dimension_count();
  const int n = ontology.bins_per_dim();
  DiscretePosition p;
  p.indices.resize(d);

  const auto check = [&](std::size_t k, int value) {
    if (value < 0 || value >= n)
      throw Error(ErrorCode::IndexOutOfRange,
                  ontology.dimension(k).name + "=" + std::to_string(value));
    p.indices[k] = value;
  };

  nlohmann::json by_name = nlohmann::json::object();
  if (location->is_array()) {
    const bool all_numbers = std::all_of(location->begin(), location->end(),
                                         [](const auto& v) { return !v.is_object(); });
    if (all_numbers) {
      if (location->size() > d)
        throw Error(ErrorCode::MalformedJson, "location list has " +
                                                  std::to_string(location->size()) + " entries");
      if (location->size() < d)
        throw Error(ErrorCode::MissingDimension, ontology.dimension(location->size()).name);
      for (std::size_t k = 0; k < d; ++k)
        check(k, as_index((*location)[k], ontology.dimension(k).name));
      return p;
    }
    // A list of {name: index} objects.
    for (const auto& item : *location) {
      if (!item.is_object()) throw Error(ErrorCode::MalformedJson, "mixed location list");
      for (auto it = item.begin(); it != item.end(); ++it) by_name[it.key()] = it.value();
    }
  } else if (location->is_object()) {
    by_name = *location;
  } else {
    throw Error(ErrorCode::MalformedJson, "location is neither an object nor a list");
  }

  std::map<std::string, nlohmann::json> folded;
  for (auto it = by_name.begin(); it != by_name.end(); ++it) folded[lower(trim(it.key()))] = it.value();
  for (std::size_t k = 0; k < d; ++k) {
    const auto& name = ontology.dimension(k).name;
    const auto it = folded.find(lower(name));
    if (it == folded.end()) throw Error(ErrorCode::MissingDimension, name);
    check(k, as_index(it->second, name));
  }
  return p;
}

std::string render_position(const Ontology& ontology, const DiscretePosition& p) {
  validate_position(ontology, p);
  nlohmann::ordered_json loc = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < p.indices.size(); ++k) loc[ontology.dimension(k).name] = p.indices[k];
  nlohmann::ordered_json j;
  j["location"] = loc;
  return j.dump();
}

std::string cache_key(std::string_view model, std::string_view system, std::string_view user,
                      int attempt) {
  const nlohmann::json parts = {std::string(model), std::string(system), std::string(user), attempt};
  return sha256_hex(parts.dump());
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("key") || !j.contains("raw_response"))
      throw Error(ErrorCode::ParseError,
                  path_.string() + " line " + std::to_string(line_no) + ": bad cache entry");
    entries_[j.at("key").get<std::string>()] = j.at("raw_response").get<std::string>();
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::append(CacheEntry entry) {
  std::lock_guard lock(mutex_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot append to " + path_.string());
    nlohmann::ordered_json j;
    j["key"] = entry.key;
    j["request"] = entry.request;
    j["raw_response"] = entry.raw_response;
    j["timestamp"] = entry.timestamp;
    out << j.dump() << '\n';
  }
  entries_[entry.key] = std::move(entry.raw_response);
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

CompletionSource::CompletionSource(LlmMode mode, ChatTransport* transport, ResponseCache* cache)
    : mode_(mode), transport_(transport), cache_(cache) {
  if (mode_ != LlmMode::Live && cache_ == nullptr)
    throw Error(ErrorCode::ConfigError, "record and replay modes need a response cache");
  if (mode_ != LlmMode::Replay && transport_ == nullptr)
    throw Error(ErrorCode::ConfigError, "live and record modes need a transport");
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string CompletionSource::complete(const ChatRequest& request, int attempt) {
  const auto key = cache_key(request.model, request.system, request.user, attempt);
  if (mode_ == LlmMode::Replay) {
    if (auto hit = cache_->lookup(key)) return *hit;
    throw Error(ErrorCode::CacheMiss, "no cached response for key " + key.substr(0, 16));
  }
  std::string raw = transport_->complete(request);
  if (mode_ == LlmMode::Record) {
    nlohmann::json req = {{"model", request.model},
                          {"user", request.user},
                          {"attempt", attempt},
                          {"temperature", request.temperature},
                          {"system_sha256", sha256_hex(request.system)}};
    cache_->append({key, std::move(req), raw, utc_now()});
  }
  return raw;
}

std::vector<DiscretePosition> ExtractionSet::positions() const {
  std::vector<DiscretePosition> out;
  out.reserve(results.size());
  for (const auto& [id, p] : results) out.push_back(p);
  return out;
}

namespace {

struct Outcome {
  std::optional<DiscretePosition> position;
  ExtractionFailure failure{ErrorCode::MalformedJson, "", 0};
};

Outcome run_formulation(const std::string& genre, const FormulationTemplate& f,
                        const std::string& system, const LlmConfig& cfg, const Ontology& ontology,
                        CompletionSource& source) {
  Outcome out;
  int attempt = 0;
  int network_failures = 0;
  const std::string base = f.instantiate(genre);
  while (true) {
    ChatRequest req{cfg.model, system,
                    attempt == 0 ? base : base + "\n\n" + std::string(kJsonReminder),
                    cfg.temperature};
    std::string raw;
    try {
      raw = source.complete(req, attempt);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NetworkError && ++network_failures <= cfg.max_retries) continue;
      out.failure = {e.code(), e.what(), attempt + 1};
      return out;
    }
    try {
      out.position = parse_position(raw, ontology);
      return out;
    } catch (const Error& e) {
      if (attempt >= cfg.max_retries) {
        out.failure = {e.code(), e.what(), attempt + 1};
        return out;
      }
      ++attempt;
    }
  }
}

}  // namespace

ExtractionSet extract_genre(const std::string& genre,
                            std::span<const FormulationTemplate> formulations,
                            const LlmConfig& cfg, const Ontology& ontology,
                            CompletionSource& source) {
  if (formulations.empty()) throw Error(ErrorCode::ConfigError, "no formulations given");
  const std::string system = build_system_prompt(ontology);
  std::vector<Outcome> outcomes(formulations.size());

  const auto workers = static_cast<std::size_t>(std::max(1, cfg.parallelism));
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < formulations.size(); i = next++) {
      try {
        outcomes[i] = run_formulation(genre, formulations[i], system, cfg, ontology, source);
      } catch (const std::exception& e) {
        outcomes[i].failure = {ErrorCode::NetworkError, e.what(), 0};
      }
    }
  };
  if (workers == 1 || formulations.size() == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, formulations.size()); ++w) pool.emplace_back(work);
  }

  ExtractionSet set;
  set.genre = genre;
  for (std::size_t i = 0; i < formulations.size(); ++i) {
    if (outcomes[i].position) set.results[formulations[i].id] = *outcomes[i].position;
    else set.failures[formulations[i].id] = outcomes[i].failure;
  }
  return set;
}

nlohmann::json to_json(const ExtractionSet& set) {
  nlohmann::json results = nlohmann::json::object();
  for (const auto& [id, p] : set.results) results[id] = p.indices;
  nlohmann::json failures = nlohmann::json::object();
  for (const auto& [id, f] : set.failures)
    failures[id] = {{"reason", std::string(to_string(f.code))}, {"detail", f.detail}, {"attempts", f.attempts}};
  return {{"genre", set.genre}, {"results", results}, {"failures", failures}};
}

namespace {

ErrorCode code_from_string(const std::string& s) {
  for (auto c : {ErrorCode::MalformedJson, ErrorCode::MissingDimension, ErrorCode::IndexOutOfRange,
                 ErrorCode::NetworkError, ErrorCode::CacheMiss})
    if (to_string(c) == s) return c;
  return ErrorCode::MalformedJson;
}

}  // namespace

ExtractionSet extraction_set_from_json(const nlohmann::json& j) {
  try {
    ExtractionSet set;
    set.genre = j.at("genre").get<std::string>();
    for (auto it = j.at("results").begin(); it != j.at("results").end(); ++it)
      set.results[it.key()] = DiscretePosition{it.value().get<std::vector<int>>()};
    for (auto it = j.at("failures").begin(); it != j.at("failures").end(); ++it) {
      const auto& f = it.value();
      set.failures[it.key()] = {code_from_string(f.at("reason").get<std::string>()),
                                f.value("detail", std::string{}), f.value("attempts", 0)};
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("extraction set json: ") + e.what());
  }
}

}  // namespace vecont
