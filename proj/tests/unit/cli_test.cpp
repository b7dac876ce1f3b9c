#include <gtest/gtest.h>

#include <sstream>

#include "skillopt/cli/commands.hpp"
#include "skillopt/cli/config.hpp"
#include "skillopt/errors.hpp"
#include "skillopt/run_store.hpp"
#include "support/fixtures.hpp"

using namespace skillopt;
using namespace skillopt::cli;

namespace {

const char* kFlatScript = R"({"markers": ["RULE-α"], "rubric": [{"text": "R"}],
  "scoring": [{"contains_all": ["RULE-α"], "action": "label"}, {"action": "constant", "value": 0}],
  "diagnosis": [{"delta": "Restate each level."}]})";

/// Dataset, catalog, mock script and config in one scratch directory.
struct Workspace {
  fixture::TempDir dir{"skillopt-cli"};

  explicit Workspace(std::string_view script = fixture::rule_alpha_script_json(), json overrides = json::object()) {
    const auto a = fixture::make_item("1", std::string(fixture::kStem), 3);
    const auto b = fixture::make_item("2", "Name two structures inside a plant cell.", 3);
    fixture::write_text(dir / "data.tsv", fixture::to_tsv({{a, fixture::make_responses(a, {30, 30, 30, 30})},
                                                           {b, fixture::make_responses(b, {30, 30, 30, 30})}}));
    fixture::write_text(dir / "catalog.json", json{{"1", {{"stem", a.stem_text}, {"expert_rubric", "RULE-α key"}}},
                                                   {"2", {{"stem", b.stem_text}}}}
                                                  .dump());
    fixture::write_text(dir / "mock.json", script);
    json config{{"dataset_path", "data.tsv"},
                {"item_catalog", "catalog.json"},
                {"items", {"1", "2"}},
                {"seeds", {42}},
                {"batch_target", 20},
                {"patience", 2},
                {"output_root", "out"}};
    config.merge_patch(overrides);
    fixture::write_text(dir / "config.json", config.dump(2));
  }

  [[nodiscard]] std::string config() const { return (dir / "config.json").string(); }
  [[nodiscard]] std::string mock() const { return (dir / "mock.json").string(); }
  [[nodiscard]] fixture::fs::path out() const { return dir / "out"; }
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(RunConfig, TemperatureKeyIsRejected) {
  const json j{{"dataset_path", "d.tsv"},
               {"scorer", {{"endpoint_url", "http://x/v1"}, {"model_name", "m"}, {"temperature", 0.2}}}};
  try {
    parse_run_config(j, "/base");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("temperature"), std::string::npos);
  }
}

TEST(RunConfig, UnknownKeyIsRejected) {
  EXPECT_THROW(parse_run_config(json{{"dataset_path", "d.tsv"}, {"pateince", 3}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"dataset_path", "d.tsv"}, {"split", {{"tran", 0.6}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json::array()), ConfigError);
}

TEST(RunConfig, RelativePathsResolveAgainstConfigDir) {
  const auto c = parse_run_config(json{{"dataset_path", "data/x.tsv"}, {"output_root", "/abs/out"}}, "/cfg");
  EXPECT_EQ(c.dataset_path, fixture::fs::path("/cfg/data/x.tsv"));
  EXPECT_EQ(c.output_root, fixture::fs::path("/abs/out"));
}

TEST(RunConfig, DefaultsAndValidation) {
  const auto c = parse_run_config(json{{"dataset_path", "d.tsv"}, {"items", {"1"}}}, "/b");
  EXPECT_EQ(c.variants, std::vector<ScaffoldVariant>{ScaffoldVariant::weak});
  EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{42});
  EXPECT_EQ(c.patience, 3);
  EXPECT_NO_THROW(c.validate(false));
  EXPECT_THROW(c.validate(true), ConfigError);
  auto bad = c;
  bad.patience = 0;
  EXPECT_THROW(bad.validate(false), ConfigError);
  bad = c;
  bad.items.clear();
  EXPECT_THROW(bad.validate(false), ConfigError);
  bad = c;
  bad.variants = {ScaffoldVariant::custom};
  EXPECT_THROW(bad.validate(false), ConfigError);
}

TEST(RunConfig, SnapshotHoldsEnvVarNameNotKey) {
  ::setenv("SKILLOPT_TEST_KEY", "sk-secret-value", 1);
  const auto c = parse_run_config(json{{"dataset_path", "d.tsv"},
                                       {"scorer",
                                        {{"endpoint_url", "http://x/v1"},
                                         {"model_name", "m"},
                                         {"api_key_env_var", "SKILLOPT_TEST_KEY"}}}});
  const auto text = to_json(c).dump();
  EXPECT_NE(text.find("SKILLOPT_TEST_KEY"), std::string::npos);
  EXPECT_EQ(text.find("sk-secret-value"), std::string::npos);
}

TEST(SplitCsv, TrimsAndDropsEmpty) {
  EXPECT_EQ(split_csv(" 1, 2,,10 "), (std::vector<std::string>{"1", "2", "10"}));
  EXPECT_TRUE(split_csv("").empty());
}

TEST(ExitCodes, MapErrorKinds) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
  EXPECT_EQ(exit_code_for(InvalidArgument("x")), 2);
  EXPECT_EQ(exit_code_for(DataError("x")), 3);
  EXPECT_EQ(exit_code_for(CheckpointError("x")), 3);
  EXPECT_EQ(exit_code_for(DegenerateError("x")), 3);
  EXPECT_EQ(exit_code_for(ProviderError("x", 500)), 4);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"optimize"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  const auto missing = run({"ingest", "--config", "/nonexistent/config.json"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("/nonexistent/config.json"), std::string::npos);
}

TEST(Cli, MalformedDatasetIsDataError) {
  Workspace ws;
  fixture::write_text(ws.dir / "data.tsv", "Id\tEssaySet\tScore1\tScore2\tEssayText\n1\t1\tnotanumber\t0\ttext\n");
  const auto r = run({"ingest", "--config", ws.config()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, OptimizeBeforeIngestNamesTheFix) {
  Workspace ws;
  const auto r = run({"optimize", "--config", ws.config(), "--mock-script", ws.mock()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ingest"), std::string::npos) << r.err;
}

TEST(Cli, ProviderFailureExitsFour) {
  Workspace ws(R"({"rubric": [{"text": "R"}]})");
  ASSERT_EQ(run({"ingest", "--config", ws.config()}).code, 0);
  EXPECT_EQ(run({"optimize", "--config", ws.config(), "--mock-script", ws.mock(), "--items", "1"}).code, 4);
}

TEST(Cli, IngestIsDeterministic) {
  Workspace a;
  Workspace b;
  ASSERT_EQ(run({"ingest", "--config", a.config()}).code, 0);
  ASSERT_EQ(run({"ingest", "--config", b.config()}).code, 0);
  for (const auto* id : {"1", "2"}) {
    const auto rel = fixture::fs::path("splits") / (std::string("item_") + id) / "seed_42.json";
    EXPECT_EQ(fixture::read_text(a.out() / rel), fixture::read_text(b.out() / rel)) << id;
  }
  const auto m = json::parse(fixture::read_text(a.out() / "splits/item_1/seed_42.json"));
  const auto manifest = split_manifest_from_json(m);
  EXPECT_EQ(manifest.split.train.size() + manifest.split.val.size() + manifest.split.test.size(), 120u);
  EXPECT_EQ(manifest.item.stem_text, fixture::kStem);
  EXPECT_EQ(manifest.item.expert_rubric, "RULE-α key");
}

TEST(Cli, SeedOverrideChangesSplit) {
  Workspace ws;
  ASSERT_EQ(run({"ingest", "--config", ws.config(), "--seeds", "1,2"}).code, 0);
  EXPECT_NE(fixture::read_text(ws.out() / "splits/item_1/seed_1.json"),
            fixture::read_text(ws.out() / "splits/item_1/seed_2.json"));
  EXPECT_FALSE(fixture::fs::exists(ws.out() / "splits/item_1/seed_42.json"));
}

TEST(Cli, OptimizeInspectResumeEvaluate) {
  Workspace ws;
  ASSERT_EQ(run({"ingest", "--config", ws.config()}).code, 0);
  const auto opt = run({"optimize", "--config", ws.config(), "--mock-script", ws.mock()});
  ASSERT_EQ(opt.code, 0) << opt.err;
  const auto run_path = ws.out() / "runs/item_1/weak/seed_42";
  EXPECT_TRUE(fixture::fs::exists(run_path / "summary.json"));
  EXPECT_TRUE(fixture::fs::exists(run_path / "README.md"));
  EXPECT_TRUE(fixture::fs::exists(ws.out() / "runs/item_2/weak/seed_42/summary.json"));

  const auto manifest = json::parse(fixture::read_text(run_path / "manifest.json"));
  EXPECT_EQ(manifest.at("config").at("scorer").at("kind"), "mock");

  const auto again = run({"optimize", "--config", ws.config(), "--mock-script", ws.mock(), "--resume"});
  ASSERT_EQ(again.code, 0);
  EXPECT_NE(again.out.find("nothing to resume"), std::string::npos) << again.out;

  const auto inspect = run({"inspect", run_path.string()});
  ASSERT_EQ(inspect.code, 0) << inspect.err;
  EXPECT_NE(inspect.out.find("accepted"), std::string::npos);
  EXPECT_NE(inspect.out.find("augmentation:\nRULE-α"), std::string::npos) << inspect.out;
  EXPECT_NE(inspect.out.find("finished: early_stop"), std::string::npos) << inspect.out;

  const auto eval = run({"evaluate", "--config", ws.config(), "--mock-script", ws.mock()});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto csv = fixture::read_text(ws.out() / "eval/conditions.csv");
  EXPECT_NE(csv.find("1,expert,"), std::string::npos);
  EXPECT_EQ(csv.find("2,expert,"), std::string::npos);  // no expert rubric for item 2
  EXPECT_NE(csv.find("1,s_best,weak,42,1.000000,"), std::string::npos) << csv;
  EXPECT_TRUE(fixture::fs::exists(ws.out() / "eval/transfer/weak_seed42/transfer_gain_vs_s0.csv"));
  EXPECT_TRUE(fixture::fs::exists(ws.out() / "eval/summary.json"));
}

TEST(Cli, InspectShowsEmptyAugmentation) {
  Workspace ws(kFlatScript);
  ASSERT_EQ(run({"ingest", "--config", ws.config(), "--items", "1"}).code, 0);
  ASSERT_EQ(run({"optimize", "--config", ws.config(), "--mock-script", ws.mock(), "--items", "1"}).code, 0);
  const auto inspect = run({"inspect", (ws.out() / "runs/item_1/weak/seed_42").string()});
  ASSERT_EQ(inspect.code, 0);
  EXPECT_NE(inspect.out.find("augmentation: (empty)"), std::string::npos) << inspect.out;
  EXPECT_NE(inspect.out.find("rejected_no_improvement"), std::string::npos);
  // one row per iteration
  const auto summary = json::parse(fixture::read_text(ws.out() / "runs/item_1/weak/seed_42/summary.json"));
  std::size_t rows = 0;
  for (std::size_t pos = 0; (pos = inspect.out.find("rejected_no_improvement", pos)) != std::string::npos; ++pos) {
    ++rows;
  }
  EXPECT_EQ(rows, summary.at("iterations").get<std::size_t>());
}

TEST(Cli, InspectMissingRunFails) {
  fixture::TempDir dir;
  EXPECT_EQ(run({"inspect", (dir / "none").string()}).code, 3);
}

TEST(Cli, ResumeAfterKillMatchesStraightRun) {
  Workspace straight;
  Workspace killed;
  for (auto* ws : {&straight, &killed}) ASSERT_EQ(run({"ingest", "--config", ws->config(), "--items", "1"}).code, 0);
  auto config_of = [](const Workspace& ws) {
    auto c = load_run_config(ws.config());
    c.items = {"1"};
    return c;
  };
  std::ostringstream sink;
  {
    const auto c = config_of(straight);
    auto providers = make_providers(c, straight.mock());
    cmd_optimize(c, providers, false, sink);
  }
  const auto c = config_of(killed);
  auto base = make_providers(c, killed.mock());
  auto dying = base;
  dying.scorer = std::make_shared<fixture::KillAfterProvider>(base.scorer, 70);
  dying.diagnoser = dying.scorer;
  EXPECT_THROW(cmd_optimize(c, dying, false, sink), ProviderError);
  const auto dir = killed.out() / "runs/item_1/weak/seed_42";
  EXPECT_FALSE(fixture::fs::exists(dir / "summary.json"));
  cmd_optimize(c, base, true, sink);
  EXPECT_EQ(fixture::read_text(dir / "summary.json"),
            fixture::read_text(straight.out() / "runs/item_1/weak/seed_42/summary.json"));
}

TEST(Cli, ResumeWithChangedConfigIsDrift) {
  Workspace ws(kFlatScript);
  ASSERT_EQ(run({"ingest", "--config", ws.config(), "--items", "1"}).code, 0);
  auto c = load_run_config(ws.config());
  c.items = {"1"};
  auto providers = make_providers(c, ws.mock());
  std::ostringstream sink;
  auto dying = providers;
  dying.scorer = std::make_shared<fixture::KillAfterProvider>(providers.scorer, 70);
  dying.diagnoser = dying.scorer;
  EXPECT_THROW(cmd_optimize(c, dying, false, sink), ProviderError);
  c.patience = 5;
  EXPECT_THROW(cmd_optimize(c, providers, true, sink), CheckpointError);
}
