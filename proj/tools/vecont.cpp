// vecont <subcommand> --config <path> [--mode live|record|replay] [--out dir]

#include <iostream>

#include <CLI11.hpp>

#include "vecont/config.hpp"
#include "vecont/pipeline.hpp"

namespace {

int run(const std::string& stage, const std::string& config_path, const std::string& mode,
        const std::string& out) {
  using namespace vecont;
  try {
    RunConfig cfg = load_config(config_path);
    if (!out.empty()) cfg.out = out;
    PipelineOptions opts;
    if (!mode.empty()) {
      opts.mode = parse_mode(mode);
      if (!opts.mode) throw Error(ErrorCode::ConfigError, "--mode must be live, record or replay");
    }
    Pipeline pipeline(std::move(cfg), opts);
    const auto outcomes =
        stage == "all" ? pipeline.run_all() : std::vector<StageOutcome>{pipeline.run(stage)};
    int code = kExitOk;
    for (const auto& o : outcomes) {
      for (const auto& m : o.messages) std::cout << o.stage << ": " << m << "\n";
      for (const auto& a : o.artifacts) std::cout << o.stage << ": wrote " << a.string() << "\n";
      if (o.exit_code != kExitOk) code = o.exit_code;
    }
    return code;
  } catch (const Error& e) {
    std::cerr << "vecont " << stage << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "vecont " << stage << ": " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vector-ontology extraction and analysis pipeline"};
  app.require_subcommand(1);

  std::string config_path, mode, out;
  std::string chosen;
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"synth", "generate the synthetic corpus"},
      {"ingest", "read and validate the corpus"},
      {"fit", "fit bin edges (with resolution search when bins = \"auto\")"},
      {"index", "build the ground-truth genre index"},
      {"extract", "query the model for every genre and formulation"},
      {"consistency", "consistency suite against the random baseline"},
      {"accuracy", "accuracy suite against the ground-truth index"},
      {"shift", "formulation-shift suite"},
      {"project", "PCA projection, hulls and heatmaps"},
      {"report", "summary, CSV tables and figure data"},
      {"all", "run every stage in order"}};
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", config_path, "run configuration (TOML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", out, "output directory (overrides the config)");
    if (name == "extract" || name == "all")
      sub->add_option("--mode,-m", mode, "live, record or replay")
          ->check(CLI::IsMember({"live", "record", "replay"}));
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : vecont::kExitValidation;
  }
  return run(chosen, config_path, mode, out);
}
