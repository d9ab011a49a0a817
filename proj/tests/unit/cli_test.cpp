#include <filesystem>
#include <map>
#include <sstream>

#include "doctest.h"
#include "hcc/checkpoint.hpp"
#include "hcc/cli.hpp"
#include "hcc/errors.hpp"
#include "hcc/metrics.hpp"
#include "json.hpp"

using namespace hcc;
namespace fs = std::filesystem;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](std::string_view name) -> std::optional<std::string> {
    auto it = vars.find(std::string(name));
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args, std::map<std::string, std::string> env = {}) {
  std::ostringstream out, err;
  Run r;
  r.code = run_command(args, out, err, env_of(std::move(env)));
  r.out = out.str();
  r.err = err.str();
  return r;
}

// A small config over the shipped corpus in a fresh directory.
fs::path write_config(const std::string& tag, nlohmann::json extra = nlohmann::json::object()) {
  const fs::path dir = fs::temp_directory_path() / ("hcc_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  nlohmann::json backbone = {{"layers", 1}, {"d_model", 8}, {"heads", 2}, {"ff_width", 16},
                             {"max_len", 64}};
  nlohmann::json cfg = {{"corpus", std::string(HCC_DATA_DIR) + "/toy_corpus.jsonl"},
                        {"output", "out"},
                        {"model", {{"encoder", backbone}, {"generator", backbone}}},
                        {"train", {{"epochs", {1, 1, 1, 1}}, {"batch_size", 64}}},
                        {"bench", {{"prompts", 2}, {"max_new", 2}}}};
  cfg.merge_patch(extra);
  write_file(dir / "cfg.json", cfg.dump(2));
  return dir;
}

}  // namespace

TEST_CASE("config defaults and relative paths") {
  const RunConfig c = parse_config(R"({"corpus": "c.jsonl", "output": "out"})", "/base");
  CHECK(c.corpus == fs::path("/base/c.jsonl"));
  CHECK(c.output == fs::path("/base/out"));
  CHECK(c.seed == 1234);
  CHECK(c.train.epochs == std::array<std::size_t, 4>{30, 30, 20, 20});
  CHECK(c.model.encoder.d_model == 64);
  const RunConfig abs = parse_config(R"({"corpus": "/data/c.jsonl", "output": "o"})", "/base");
  CHECK(abs.corpus == fs::path("/data/c.jsonl"));
}

TEST_CASE("config overrides") {
  const RunConfig c = parse_config(R"({
    "corpus": "c", "output": "o", "seed": 7,
    "split": {"ratios": [0.5, 0.25, 0.25]},
    "fusion": {"mode": "dynamic"},
    "train": {"optimizer": "momentum", "momentum": 0.5, "rates": [1, 2, 3, 4]},
    "metrics": {"robustness": {"noisy": 0.3}},
    "remote": {"url": "http://h:1", "timeout_ms": 250}
  })");
  CHECK(c.seed == 7);
  CHECK(c.split.valid == 0.25);
  CHECK(c.model.fusion == FusionMode::dynamic_gate);
  CHECK(c.train.optimizer == OptimizerKind::momentum);
  CHECK(c.train.rates[3] == 4.0);
  CHECK(c.robustness.noisy == 0.3);
  CHECK(c.robustness.incomplete == 0.2);
  CHECK(c.remote_timeout_ms == 250);
}

TEST_CASE("unknown keys are named by their path") {
  try {
    parse_config(R"({"corpus": "c", "output": "o", "fusoin": {"mode": "static"}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("'fusoin'") != std::string::npos);
  }
  try {
    parse_config(R"({"corpus": "c", "output": "o", "train": {"epoch": [1, 1, 1, 1]}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("'train.epoch'") != std::string::npos);
  }
}

TEST_CASE("invalid configurations") {
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"output": "o"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"corpus": 3, "output": "o"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"corpus": "c", "output": "o", "seed": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"corpus": "c", "output": "o", "split": {"ratios": [0.5, 0.5, 0.5]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"corpus": "c", "output": "o", "fusion": {"mode": "sum"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"corpus": "c", "output": "o", "train": {"optimizer": "adam"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"corpus": "c", "output": "o", "train": {"rates": [1, 2]}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"corpus": "c", "output": "o", "model": {"encoder": {"d_model": 10, "heads": 4}}})"),
      ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);
}

TEST_CASE("seed precedence: flag, then CC_SEED, then config") {
  const RunConfig c = parse_config(R"({"corpus": "c", "output": "o", "seed": 5})");
  CHECK(resolve_environment(c, std::nullopt, env_of({})).seed == 5);
  CHECK(resolve_environment(c, std::nullopt, env_of({{"CC_SEED", "7"}})).seed == 7);
  CHECK(resolve_environment(c, 9, env_of({{"CC_SEED", "7"}})).seed == 9);
  CHECK(resolve_environment(c, std::nullopt, env_of({{"CC_SEED", ""}})).seed == 5);
  CHECK_THROWS_AS(resolve_environment(c, std::nullopt, env_of({{"CC_SEED", "12x"}})), ConfigError);
}

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(run({}).code == exit_code::usage);
  CHECK(run({"frobnicate"}).code == exit_code::usage);
  CHECK(run({"train"}).code == exit_code::usage);
  CHECK(run({"complete", "--config", "x.json"}).code == exit_code::usage);
  CHECK(run({"complete", "--config", "x.json", "--prompt", "a", "--backend", "cloud"}).code ==
        exit_code::usage);
  CHECK(run({"--help"}).code == exit_code::ok);
}

TEST_CASE("data and config errors exit 2") {
  CHECK(run({"train", "--config", "/nonexistent/cfg.json"}).code == exit_code::data);
  const fs::path dir = write_config("bad", {{"fusoin", 1}});
  const Run r = run({"train", "--config", (dir / "cfg.json").string()});
  CHECK(r.code == exit_code::data);
  CHECK(r.err.find("fusoin") != std::string::npos);
  const fs::path ok = write_config("nockpt");
  CHECK(run({"eval", "--config", (ok / "cfg.json").string()}).code == exit_code::data);
  CHECK(run({"report", "--config", (ok / "cfg.json").string()}).code == exit_code::data);
  CHECK(run({"train", "--config", (ok / "cfg.json").string()}, {{"CC_SEED", "abc"}}).code ==
        exit_code::data);
  const fs::path missing = write_config("nocorpus", {{"corpus", "missing.jsonl"}});
  CHECK(run({"train", "--config", (missing / "cfg.json").string()}).code == exit_code::data);
}

TEST_CASE("remote backend errors exit 3, stub mode succeeds") {
  const fs::path dir = write_config("remote");
  const std::string cfg = (dir / "cfg.json").string();
  const Run stub = run({"complete", "--config", cfg, "--prompt", "def f():", "--backend", "remote"});
  CHECK(stub.code == exit_code::ok);
  CHECK_FALSE(stub.out.empty());
  const Run down = run({"complete", "--config", cfg, "--prompt", "x", "--backend", "remote"},
                       {{"CC_REMOTE_URL", "http://127.0.0.1:1"}});
  CHECK(down.code == exit_code::remote);
}

TEST_CASE("small pipeline through every subcommand") {
  const fs::path dir = write_config("pipeline");
  const std::string cfg = (dir / "cfg.json").string();
  CHECK(run({"train", "--config", cfg}).code == exit_code::ok);
  const std::string first = read_file(dir / "out" / kCheckpointFile);
  CHECK(run({"train", "--config", cfg}).code == exit_code::ok);
  CHECK(read_file(dir / "out" / kCheckpointFile) == first);
  CHECK(run({"train", "--config", cfg, "--seed", "99"}).code == exit_code::ok);
  CHECK(read_file(dir / "out" / kCheckpointFile) != first);
  CHECK(run({"train", "--config", cfg}).code == exit_code::ok);

  const Run eval = run({"eval", "--config", cfg});
  CHECK(eval.code == exit_code::ok);
  CHECK(eval.out.starts_with(report::kTable1Header));
  CHECK(run({"robust", "--config", cfg}).code == exit_code::ok);
  CHECK(run({"bench", "--config", cfg}).code == exit_code::ok);
  const Run rep = run({"report", "--config", cfg});
  CHECK(rep.code == exit_code::ok);
  for (const char* f : {report::kTable1File, report::kTable2File, report::kTable3File,
                        report::kTable4File, report::kFigure1File, report::kFigure2File,
                        report::kMetricsFile}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "out" / f));
  }
  for (int i = 0; i < 4; ++i) {
    const std::string log = read_file(dir / "out" / "logs" / ("train_phase" + std::to_string(i) + ".csv"));
    CHECK(log.starts_with("epoch,loss\n1,"));
  }
  const auto metrics = nlohmann::json::parse(read_file(dir / "out" / report::kMetricsFile));
  for (const char* section : {"training", "accuracy", "generation_quality", "evaluation",
                              "robustness", "performance"}) {
    CHECK(metrics.contains(section));
  }

  const Run local = run({"complete", "--config", cfg, "--prompt", "def add(a, b):", "--max-new", "3"});
  CHECK(local.code == exit_code::ok);
  CHECK(local.out.back() == '\n');
  const Run sampled = run({"complete", "--config", cfg, "--prompt", "x =", "--temperature", "0.8"});
  CHECK(sampled.code == exit_code::ok);
  CHECK(run({"complete", "--config", cfg, "--prompt", "x", "--temperature", "0"}).code ==
        exit_code::usage);
}
