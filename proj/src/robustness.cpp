#include "hcc/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hcc/corpus.hpp"
#include "hcc/errors.hpp"
#include "hcc/metrics.hpp"

namespace hcc {

std::string_view scenario_label(Scenario s) noexcept {
  switch (s) {
    case Scenario::normal: return "Normal Input";
    case Scenario::noisy: return "Noisy Input";
    case Scenario::incomplete: return "Incomplete Input";
    case Scenario::abnormal: return "Abnormal Input";
  }
  return "";
}

std::string_view scenario_key(Scenario s) noexcept {
  switch (s) {
    case Scenario::normal: return "normal";
    case Scenario::noisy: return "noisy";
    case Scenario::incomplete: return "incomplete";
    case Scenario::abnormal: return "abnormal";
  }
  return "";
}

namespace {

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ArgumentError("perturbation rate " + std::to_string(rate) + " outside [0, 1]");
  }
}

std::size_t rounded_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

}  // namespace

std::vector<TokenId> perturb_noisy(std::span<const TokenId> tokens, double rate,
                                   std::uint64_t seed, std::size_t vocab_size) {
  check_rate(rate);
  std::vector<TokenId> out(tokens.begin(), tokens.end());
  const std::size_t k = std::min(out.size(), rounded_count(rate, out.size()));
  if (k == 0) return out;
  if (vocab_size <= static_cast<std::size_t>(special::count)) {
    throw ArgumentError("noisy perturbation needs at least one non-reserved token");
  }
  Rng rng(seed);
  std::vector<std::size_t> pos(out.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k entries become the sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pos.size() - 1);
    std::swap(pos[i], pos[pick(rng)]);
  }
  std::uniform_int_distribution<TokenId> token(special::count,
                                               static_cast<TokenId>(vocab_size - 1));
  for (std::size_t i = 0; i < k; ++i) out[pos[i]] = token(rng);
  return out;
}

std::vector<TokenId> perturb_incomplete(std::span<const TokenId> tokens, double rate) {
  check_rate(rate);
  const auto drop = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(tokens.size())));
  const std::size_t keep = tokens.size() - std::min(drop, tokens.size());
  return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(keep)};
}

std::vector<TokenId> perturb_abnormal(std::span<const TokenId> tokens, double rate,
                                      std::uint64_t seed) {
  check_rate(rate);
  std::vector<TokenId> out(tokens.begin(), tokens.end());
  const std::size_t k = rounded_count(rate, tokens.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> at(0, out.size());
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(at(rng)), special::unk);
  }
  return out;
}

std::vector<TokenId> apply_perturbation(const PerturbationSpec& spec,
                                        std::span<const TokenId> tokens, std::size_t vocab_size) {
  switch (spec.scenario) {
    case Scenario::normal: return {tokens.begin(), tokens.end()};
    case Scenario::noisy: return perturb_noisy(tokens, spec.rate, spec.seed, vocab_size);
    case Scenario::incomplete: return perturb_incomplete(tokens, spec.rate);
    case Scenario::abnormal: return perturb_abnormal(tokens, spec.rate, spec.seed);
  }
  return {tokens.begin(), tokens.end()};
}

double recovery_ability(const NextTokenModel& model,
                        std::span<const std::vector<TokenId>> clean,
                        std::span<const std::vector<TokenId>> perturbed) {
  if (clean.size() != perturbed.size()) {
    throw ArgumentError("recovery_ability: " + std::to_string(clean.size()) + " clean vs " +
                        std::to_string(perturbed.size()) + " perturbed prefixes");
  }
  if (clean.empty()) throw EmptyEvaluationError("recovery_ability over zero pairs");
  std::size_t same = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (model.predict(clean[i]) == model.predict(perturbed[i])) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(clean.size());
}

double stability_index(double accuracy, double recovery) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0) || !(recovery >= 0.0 && recovery <= 1.0)) {
    throw ArgumentError("stability_index inputs must lie in [0, 1]");
  }
  return (accuracy + recovery) / 2.0;
}

RobustnessReport run_robustness_suite(const NextTokenModel& model, std::span<const Example> test,
                                      const RobustnessRates& rates, std::uint64_t seed,
                                      std::size_t vocab_size) {
  if (test.empty()) throw EmptyEvaluationError("robustness suite needs a non-empty test set");
  RobustnessReport report;
  report.seed = seed;

  std::vector<std::vector<TokenId>> clean;
  clean.reserve(test.size());
  std::vector<TokenId> clean_pred;
  clean_pred.reserve(test.size());
  for (const Example& ex : test) {
    clean.push_back(ex.prefix);
    clean_pred.push_back(model.predict(ex.prefix));
  }

  for (Scenario s : kAllScenarios) {
    RobustnessRow row;
    row.scenario = s;
    row.rate = s == Scenario::noisy        ? rates.noisy
               : s == Scenario::incomplete ? rates.incomplete
               : s == Scenario::abnormal   ? rates.abnormal
                                           : 0.0;
    std::size_t correct = 0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const PerturbationSpec spec{s, row.rate, seed ^ static_cast<std::uint64_t>(i)};
      const TokenId pred = s == Scenario::normal
                               ? clean_pred[i]
                               : model.predict(apply_perturbation(spec, clean[i], vocab_size));
      if (pred == test[i].next) ++correct;
      if (pred == clean_pred[i]) ++same;
    }
    const auto n = static_cast<double>(test.size());
    row.accuracy = static_cast<double>(correct) / n;
    row.recovery = static_cast<double>(same) / n;
    row.stability = stability_index(row.accuracy, row.recovery);
    report.rows.push_back(row);
  }
  return report;
}

nlohmann::json to_json(const RobustnessReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const RobustnessRow& r : report.rows) {
    rows.push_back({{"scenario", std::string(scenario_label(r.scenario))},
                    {"key", std::string(scenario_key(r.scenario))},
                    {"rate", r.rate},
                    {"accuracy", r.accuracy},
                    {"recovery_ability", r.recovery},
                    {"stability_index", r.stability}});
  }
  return {{"seed", report.seed}, {"rows", rows}};
}

}  // namespace hcc
