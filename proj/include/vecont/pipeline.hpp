#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vecont/config.hpp"
#include "vecont/error.hpp"
#include "vecont/extraction.hpp"

namespace vecont {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitMissingArtifact = 2;
inline constexpr int kExitNetwork = 3;

int exit_code_for(ErrorCode code);

/// Stage names in dependency order.
const std::vector<std::string>& stage_names();

struct PipelineOptions {
  std::optional<LlmMode> mode;       // overrides the config
  ChatTransport* transport = nullptr;  // default: HTTP with the key from the environment
};

struct StageOutcome {
  std::string stage;
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::string> messages;
};

/// Runs stages against out/<stage>/... . Each stage reads only the artifacts of
/// earlier stages and refuses ones written under a different config.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, PipelineOptions options = {});

  const RunConfig& config() const noexcept { return cfg_; }
  const std::string& config_hash() const noexcept { return hash_; }
  std::filesystem::path artifact_path(std::string_view stage, std::string_view name) const;

  /// Throws Error; MissingArtifact names the stage to run first.
  StageOutcome run(std::string_view stage);

  /// Every stage in order (synth only for synthetic corpora). Stops at the
  /// first stage with a non-zero exit code.
  std::vector<StageOutcome> run_all();

 private:
  StageOutcome synth();
  StageOutcome ingest();
  StageOutcome fit();
  StageOutcome index();
  StageOutcome extract();
  StageOutcome consistency();
  StageOutcome accuracy();
  StageOutcome shift();
  StageOutcome project();
  StageOutcome report();

  nlohmann::json meta(std::string_view stage, const std::vector<std::string>& inputs) const;
  nlohmann::json load(std::string_view stage, std::string_view name) const;
  std::filesystem::path write(std::string_view stage, std::string_view name,
                              const nlohmann::json& j) const;

  RunConfig cfg_;
  PipelineOptions options_;
  std::string hash_;
};

}  // namespace vecont
