#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hcc/completion.hpp"
#include "hcc/training.hpp"
#include "json.hpp"

namespace hcc {

enum class Scenario { normal, noisy, incomplete, abnormal };
inline constexpr std::array<Scenario, 4> kAllScenarios = {Scenario::normal, Scenario::noisy,
                                                          Scenario::incomplete, Scenario::abnormal};

std::string_view scenario_label(Scenario s) noexcept;  // "Normal Input", ...
std::string_view scenario_key(Scenario s) noexcept;    // "normal", ...

struct PerturbationSpec {
  Scenario scenario = Scenario::normal;
  double rate = 0.0;  // ignored for normal
  std::uint64_t seed = 0;
};

struct RobustnessRates {
  double noisy = 0.1;
  double incomplete = 0.2;
  double abnormal = 0.1;
};

// Replaces round(rate * n) distinct seeded positions with uniformly drawn
// non-reserved ids in [5, vocab_size).
std::vector<TokenId> perturb_noisy(std::span<const TokenId> tokens, double rate,
                                   std::uint64_t seed, std::size_t vocab_size);
// Drops the trailing ceil(rate * n) tokens.
std::vector<TokenId> perturb_incomplete(std::span<const TokenId> tokens, double rate);
// Inserts round(rate * n) UNK ids at seeded positions.
std::vector<TokenId> perturb_abnormal(std::span<const TokenId> tokens, double rate,
                                      std::uint64_t seed);

std::vector<TokenId> apply_perturbation(const PerturbationSpec& spec,
                                        std::span<const TokenId> tokens, std::size_t vocab_size);

// Fraction of pairs where the greedy prediction on the perturbed prefix equals
// the one on the clean prefix. ArgumentError on a length mismatch,
// EmptyEvaluationError on no pairs.
double recovery_ability(const NextTokenModel& model,
                        std::span<const std::vector<TokenId>> clean,
                        std::span<const std::vector<TokenId>> perturbed);

// (accuracy + recovery) / 2. ArgumentError outside [0, 1].
double stability_index(double accuracy, double recovery);

struct RobustnessRow {
  Scenario scenario = Scenario::normal;
  double rate = 0.0;
  double accuracy = 0.0;
  double recovery = 0.0;
  double stability = 0.0;
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;  // normal, noisy, incomplete, abnormal
  std::uint64_t seed = 0;
};

// Example i is perturbed with seed ^ i. Accuracy is against the original
// next token. EmptyEvaluationError for an empty test set.
RobustnessReport run_robustness_suite(const NextTokenModel& model, std::span<const Example> test,
                                      const RobustnessRates& rates, std::uint64_t seed,
                                      std::size_t vocab_size);

nlohmann::json to_json(const RobustnessReport& report);

}  // namespace hcc
