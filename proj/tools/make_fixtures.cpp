// Writes the replay cache named by a config: one recorded answer per
// (genre, formulation, attempt) that the pipeline will ask for. Answers sit
// near the genre's synthetic cluster, nudged by a per-formulation offset and
// some per-query jitter, in a mix of the response shapes models produce.
//
//   vecont_make_fixtures tests/fixtures/replay.toml

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <unistd.h>

#include "vecont/config.hpp"
#include "vecont/dataset.hpp"
#include "vecont/extraction.hpp"
#include "vecont/hash.hpp"
#include "vecont/pipeline.hpp"
#include "vecont/rng.hpp"

namespace fs = std::filesystem;
using namespace vecont;

namespace {

constexpr const char* kTimestamp = "2025-01-01T00:00:00Z";

std::string as_list(const DiscretePosition& p) {
  std::string s = "{\"location\": [";
  for (std::size_t k = 0; k < p.indices.size(); ++k) s += (k ? ", " : "") + std::to_string(p.indices[k]);
  return s + "]}";
}

std::string as_pairs(const Ontology& ontology, const DiscretePosition& p) {
  std::string s = "{\"location\": [";
  for (std::size_t k = 0; k < p.indices.size(); ++k)
    s += std::string(k ? ", " : "") + "{\"" + ontology.dimension(k).name + "\": " + std::to_string(p.indices[k]) + "}";
  return s + "]}";
}

const std::vector<std::string> kMalformed = {
    "It depends on the specific artists, but broadly the genre is upbeat and energetic.",
    "{\"location\": {\"danceability\": 3, \"energy\": }",
    "Sure! Here is the location: danceability high, energy medium.",
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: vecont_make_fixtures <config.toml>\n";
    return 1;
  }
  try {
    RunConfig cfg = load_config(argv[1]);
    if (!cfg.corpus.synthetic) throw Error(ErrorCode::ConfigError, "fixtures need a synthetic corpus");
    if (cfg.llm.cache_path.empty()) throw Error(ErrorCode::ConfigError, "llm.cache is not set");
    const fs::path cache_path = cfg.llm.cache_path;

    // Run the corpus stages exactly as the pipeline will, in a scratch directory.
    const fs::path scratch = fs::temp_directory_path() / ("vecont-fixtures-" + std::to_string(::getpid()));
    cfg.out = scratch;
    Pipeline pipeline(cfg);
    for (const char* stage : {"synth", "ingest", "fit"}) pipeline.run(stage);
    const auto ontology = ontology_from_json(
        nlohmann::json::parse(std::ifstream(pipeline.artifact_path("fit", "ontology.json"))).at("ontology"));
    fs::remove_all(scratch);

    const auto spec = default_synth_spec(cfg.corpus.synth_count, cfg.seed);
    std::map<std::string, std::vector<double>> cluster_means;
    for (const auto& c : spec.clusters) cluster_means[c.genre] = c.mean;

    const std::string system = build_system_prompt(ontology);
    const auto d = ontology.dimension_count();
    const int top = ontology.bins_per_dim() - 1;

    // Shared per-formulation offsets: each coordinate moves by one bin with
    // probability 1/4.
    std::vector<std::vector<int>> offsets;
    for (std::size_t f = 0; f < cfg.formulations.size(); ++f) {
      Rng rng(cfg.seed, "fixture-offset", f);
      std::vector<int> o(d, 0);
      for (auto& v : o)
        if (rng.uniform() < 0.25) v = rng.uniform() < 0.5 ? -1 : 1;
      offsets.push_back(std::move(o));
    }

    fs::remove(cache_path);
    ResponseCache cache(cache_path);
    std::size_t entries = 0, retried = 0, failing = 0;
    const auto record = [&](const std::string& user, int attempt, const std::string& raw) {
      nlohmann::json req = {{"model", cfg.llm.model},
                            {"user", user},
                            {"attempt", attempt},
                            {"temperature", cfg.llm.temperature},
                            {"system_sha256", sha256_hex(system)}};
      cache.append({cache_key(cfg.llm.model, system, user, attempt), std::move(req), raw, kTimestamp});
      ++entries;
    };

    for (const auto& genre : cfg.genres) {
      const auto mean_it = cluster_means.find(genre);
      if (mean_it == cluster_means.end())
        throw Error(ErrorCode::ConfigError, "no synthetic cluster for genre " + genre);
      const auto home = assign_bin(ontology, FeatureVector{mean_it->second});

      for (std::size_t f = 0; f < cfg.formulations.size(); ++f) {
        const auto& form = cfg.formulations[f];
        Rng rng(cfg.seed, "fixture/" + genre + "/" + form.id);
        DiscretePosition p = home;
        for (std::size_t k = 0; k < d; ++k) {
          int v = p.indices[k] + offsets[f][k];
          if (rng.uniform() < 0.15) v += rng.uniform() < 0.5 ? -1 : 1;
          p.indices[k] = std::clamp(v, 0, top);
        }

        const std::string base = form.instantiate(genre);
        const auto user_at = [&](int attempt) {
          return attempt == 0 ? base : base + "\n\n" + std::string(kJsonReminder);
        };
        const double shape = rng.uniform();
        const double fate = rng.uniform();
        if (fate < 0.004) {
          // Never answers in a usable form.
          for (int a = 0; a <= cfg.llm.max_retries; ++a)
            record(user_at(a), a, kMalformed[static_cast<std::size_t>(a) % kMalformed.size()]);
          ++failing;
          continue;
        }
        int attempt = 0;
        if (fate < 0.06) {
          record(user_at(0), 0, kMalformed[rng.below(kMalformed.size())]);
          attempt = 1;
          ++retried;
        }
        std::string raw;
        const std::string object = render_position(ontology, p);
        if (shape < 0.70) raw = object;
        else if (shape < 0.80) raw = "Here is the location:\n```json\n" + object + "\n```";
        else if (shape < 0.90) raw = as_list(p);
        else if (shape < 0.95) raw = as_pairs(ontology, p);
        else raw = "Based on typical " + genre + " tracks, I would place it at " + object + ".";
        record(user_at(attempt), attempt, raw);
      }
    }
    std::cout << "wrote " << entries << " entries to " << cache_path.string() << " (" << retried
              << " retried, " << failing << " unanswerable)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "vecont_make_fixtures: " << e.what() << "\n";
    return 1;
  }
}
