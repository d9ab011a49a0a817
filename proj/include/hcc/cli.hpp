#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcc/corpus.hpp"
#include "hcc/model.hpp"
#include "hcc/remote.hpp"
#include "hcc/robustness.hpp"
#include "hcc/training.hpp"

namespace hcc {

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output;
  std::uint64_t seed = 1234;
  SplitRatios split;
  std::size_t vocab_max_size = 5000;
  std::size_t vocab_min_freq = 1;
  HybridConfig model;  // vocab sizes are filled in once the vocabulary exists
  TrainConfig train;
  std::size_t bleu_max_n = 4;
  RobustnessRates robustness;
  std::size_t bench_prompts = 8;
  std::size_t bench_max_new = 16;
  std::string remote_url;
  int remote_timeout_ms = 10000;
};

// Strict JSON schema. Relative paths resolve against `base_dir`. Errors:
// ConfigError (malformed JSON, bad type or value), SchemaError (unknown key,
// named by its dotted path).
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

struct EffectiveSettings {
  std::uint64_t seed = 0;
  RemoteBackend backend;
};

// Seed: --seed flag, then CC_SEED, then the config. ConfigError when CC_SEED
// is not an unsigned integer.
EffectiveSettings resolve_environment(const RunConfig& config, std::optional<std::uint64_t> flag_seed,
                                      const EnvLookup& env);

// Entry point of the `hcc` binary. Exit codes: 0 ok, 1 usage, 2 data or
// config, 3 remote backend, 4 internal.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                const EnvLookup& env);
int run_command(const std::vector<std::string>& args);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int data = 2;
inline constexpr int remote = 3;
inline constexpr int internal = 4;
}  // namespace exit_code

inline constexpr const char* kCheckpointFile = "model.hcc";

}  // namespace hcc
