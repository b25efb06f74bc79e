#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecont/error.hpp"
#include "vecont/ontology.hpp"

namespace vecont {

struct FormulationTemplate {
  std::string id;
  std::string text;  // contains exactly one "{genre}"

  std::string instantiate(std::string_view genre) const;
};

/// The 47 shipped query formulations (direct, action, preference, mood,
/// context and question families).
std::vector<FormulationTemplate> default_formulations();

/// Throws ConfigError listing every template without exactly one placeholder
/// and every repeated id.
void validate_formulations(std::span<const FormulationTemplate> formulations);

/// The 50 shipped genre names.
std::vector<std::string> default_genres();

enum class LlmMode { Live, Record, Replay };

std::string_view to_string(LlmMode mode);
std::optional<LlmMode> parse_mode(std::string_view s);

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  int max_retries = 3;
  double timeout_seconds = 60.0;
  int parallelism = 4;
  std::filesystem::path cache_path;
  LlmMode mode = LlmMode::Replay;
  std::string api_key_env = "VECONT_API_KEY";
};

/// Appended to the user message on every re-ask after a parse failure.
inline constexpr std::string_view kJsonReminder = "Respond with valid JSON only.";

std::string build_system_prompt(const Ontology& ontology);

/// Accepts {"location": {dim: index, ...}}, {"location": [i0, ...]} or a list of
/// single-key objects, optionally fenced or embedded in prose. Keys match
/// case-insensitively. Throws MalformedJson, MissingDimension or IndexOutOfRange.
DiscretePosition parse_position(std::string_view raw, const Ontology& ontology);

/// {"location": {dim: index, ...}} in ontology order.
std::string render_position(const Ontology& ontology, const DiscretePosition& p);

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
};

/// Something that can answer a chat completion with the assistant text.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Throws Error(NetworkError) on transport or HTTP failure.
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// OpenAI-compatible chat-completions endpoint over HTTP(S).
class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint, std::string api_key, double timeout_seconds);
  std::string complete(const ChatRequest& request) override;

 private:
  std::string base_;
  std::string path_;
  std::string api_key_;
  double timeout_;
};

/// Content hash of (model, system prompt, user message, attempt).
std::string cache_key(std::string_view model, std::string_view system, std::string_view user,
                      int attempt);

struct CacheEntry {
  std::string key;
  nlohmann::json request;
  std::string raw_response;
  std::string timestamp;
};

/// Append-only JSONL response cache. Later entries win on key collisions.
class ResponseCache {
 public:
  ResponseCache() = default;
  /// Loads an existing file (if any) and appends new entries to it.
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key) const;
  void append(CacheEntry entry);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

/// Routes requests according to the mode: replay reads only the cache,
/// record calls the transport and appends, live calls the transport only.
class CompletionSource {
 public:
  CompletionSource(LlmMode mode, ChatTransport* transport, ResponseCache* cache);

  std::string complete(const ChatRequest& request, int attempt);
  LlmMode mode() const noexcept { return mode_; }

 private:
  LlmMode mode_;
  ChatTransport* transport_;
  ResponseCache* cache_;
};

struct ExtractionFailure {
  ErrorCode code;
  std::string detail;
  int attempts = 0;
};

struct ExtractionSet {
  std::string genre;
  std::map<std::string, DiscretePosition> results;    // by formulation id
  std::map<std::string, ExtractionFailure> failures;  // by formulation id

  /// Successful positions in formulation-id order.
  std::vector<DiscretePosition> positions() const;
};

/// One completion per formulation with up to cfg.max_retries re-asks on parse
/// errors (and as many retries on network errors). Failures are recorded, not
/// thrown.
ExtractionSet extract_genre(const std::string& genre,
                            std::span<const FormulationTemplate> formulations,
                            const LlmConfig& cfg, const Ontology& ontology,
                            CompletionSource& source);

nlohmann::json to_json(const ExtractionSet& set);
ExtractionSet extraction_set_from_json(const nlohmann::json& j);

}  // namespace vecont
