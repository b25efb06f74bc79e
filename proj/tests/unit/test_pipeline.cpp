#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vecont/pipeline.hpp"

using namespace vecont;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = VECONT_FIXTURE_DIR;

class CountingTransport : public ChatTransport {
 public:
  std::string complete(const ChatRequest&) override {
    ++calls;
    throw Error(ErrorCode::NetworkError, "offline test");
  }
  std::atomic<int> calls{0};
};

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / name;
  fs::remove_all(p);
  return p;
}

RunConfig replay_config(const fs::path& out) {
  auto cfg = load_config(kFixtures / "replay.toml");
  cfg.out = out;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// One shared replay run; the suite only reads its outputs.
class ReplayRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    out_ = new fs::path(fresh_dir("replay_shared"));
    transport_ = new CountingTransport;
    Pipeline p(replay_config(*out_), PipelineOptions{std::nullopt, transport_});
    outcomes_ = new std::vector<StageOutcome>(p.run_all());
  }
  static void TearDownTestSuite() {
    delete out_;
    delete transport_;
    delete outcomes_;
  }
  static fs::path* out_;
  static CountingTransport* transport_;
  static std::vector<StageOutcome>* outcomes_;
};

fs::path* ReplayRun::out_ = nullptr;
CountingTransport* ReplayRun::transport_ = nullptr;
std::vector<StageOutcome>* ReplayRun::outcomes_ = nullptr;

}  // namespace

TEST_F(ReplayRun, EveryStageSucceedsWithoutTheNetwork) {
  ASSERT_EQ(outcomes_->size(), stage_names().size());
  for (const auto& o : *outcomes_) EXPECT_EQ(o.exit_code, kExitOk) << o.stage;
  EXPECT_EQ(transport_->calls.load(), 0);
}

TEST_F(ReplayRun, ExtractionSummaryReflectsTheCache) {
  const auto j = read_json(*out_ / "extract" / "extractions.json");
  const auto& s = j.at("summary");
  EXPECT_EQ(s.at("queries").get<int>(), 50 * 47);
  EXPECT_GT(s.at("successes").get<int>(), 2300);
  // The fixture holds a handful of answers that stay malformed on every attempt.
  EXPECT_GT(s.at("failures").at("MalformedJson").get<int>(), 0);
}

TEST_F(ReplayRun, ConsistencyBeatsTheRandomBaseline) {
  const auto j = read_json(*out_ / "consistency" / "consistency.json");
  const auto& c = j.at("report").at("comparisons").at("mean_centroid_distance");
  EXPECT_LT(c.at("observed_mean").get<double>(), c.at("baseline_mean").get<double>());
  EXPECT_LT(c.at("p_value").get<double>(), 1e-6);
}

TEST_F(ReplayRun, ArtifactsCarryProvenance) {
  const auto hash = Pipeline(replay_config(*out_)).config_hash();
  for (const auto& [stage, name] : std::vector<std::pair<std::string, std::string>>{
           {"fit", "ontology.json"}, {"index", "index.json"}, {"shift", "shift.json"}}) {
    const auto meta = read_json(*out_ / stage / name).at("meta");
    EXPECT_EQ(meta.at("stage"), stage);
    EXPECT_EQ(meta.at("config_hash"), hash);
    EXPECT_EQ(meta.at("seed"), 42);
    EXPECT_EQ(meta.at("schema_version"), 1);
  }
  const auto inputs = read_json(*out_ / "index" / "index.json").at("meta").at("inputs");
  EXPECT_EQ(inputs.at("fit/ontology.json").get<std::string>().size(), 64u);
}

TEST_F(ReplayRun, FigureDataFollowsOneSchema) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(*out_ / "report" / "figures")) {
    ++count;
    const auto j = read_json(entry.path());
    for (const char* key : {"schema_version", "figure", "kind", "title", "source", "axes", "series",
                            "config_hash", "seed"})
      EXPECT_TRUE(j.contains(key)) << entry.path() << " lacks " << key;
    EXPECT_EQ(j.at("source").at("sha256").get<std::string>().size(), 64u);
  }
  EXPECT_EQ(count, 13u);
  EXPECT_TRUE(fs::exists(*out_ / "report" / "tables" / "consistency.csv"));
  EXPECT_TRUE(fs::exists(*out_ / "report" / "summary.json"));
}

TEST_F(ReplayRun, RerunIsByteIdentical) {
  const auto again = fresh_dir("replay_again");
  Pipeline p(replay_config(again));
  for (const auto& o : p.run_all()) ASSERT_EQ(o.exit_code, kExitOk) << o.stage;
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(*out_)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), *out_);
    ASSERT_TRUE(fs::exists(again / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(again / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20u);
}

TEST(Pipeline, MissingArtifactNamesTheStageToRun) {
  Pipeline p(replay_config(fresh_dir("replay_missing")));
  try {
    p.run("consistency");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingArtifact);
    EXPECT_EQ(exit_code_for(e.code()), kExitMissingArtifact);
    EXPECT_NE(std::string(e.what()).find("run `vecont fit` first"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, ArtifactsFromAnotherConfigAreRefused) {
  const auto out = fresh_dir("replay_stale");
  auto cfg = replay_config(out);
  cfg.corpus.synth_count = 500;
  Pipeline first(cfg);
  first.run("synth");
  first.run("ingest");
  first.run("fit");
  cfg.seed = 43;
  Pipeline second(cfg);
  try {
    second.run("index");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingArtifact);
    EXPECT_NE(std::string(e.what()).find("different config"), std::string::npos);
  }
}

TEST(Pipeline, SingleGenreLeavesWelchUndefined) {
  auto cfg = replay_config(fresh_dir("replay_single"));
  cfg.genres = {cfg.genres.front()};
  cfg.analysis.baseline_groups = 50;
  CountingTransport transport;
  Pipeline p(cfg, PipelineOptions{std::nullopt, &transport});
  for (const auto& o : p.run_all()) ASSERT_EQ(o.exit_code, kExitOk) << o.stage;
  const auto fig = read_json(cfg.out / "report" / "figures" / "fig04_centroid_distance.json");
  EXPECT_EQ(fig.at("series").at(0).at("bars").size(), 1u);
  const auto c = read_json(cfg.out / "consistency" / "consistency.json")
                     .at("report").at("comparisons").at("mean_centroid_distance");
  EXPECT_TRUE(c.at("p_value").is_null());
  EXPECT_FALSE(c.at("notes").empty());
  EXPECT_EQ(transport.calls.load(), 0);
}

TEST(Pipeline, ReplayWithoutCacheIsAConfigError) {
  auto cfg = replay_config(fresh_dir("replay_nocache"));
  cfg.llm.cache_path = fs::path(::testing::TempDir()) / "does_not_exist.jsonl";
  Pipeline p(cfg);
  p.run("synth");
  p.run("ingest");
  p.run("fit");
  try {
    p.run("extract");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_EQ(exit_code_for(e.code()), kExitValidation);
  }
}
