#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hcc/model.hpp"

namespace hcc {

// (x_1..x_t, x_{t+1}) teacher-forcing pair.
struct Example {
  std::vector<TokenId> prefix;
  TokenId next = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

// BOS + ids + EOS.
std::vector<TokenId> training_sequence(std::span<const TokenId> ids);

// Every position t >= 1 of every sequence yields (x_{1:t}, x_{t+1}), with the
// prefix cut to its most recent `window` tokens. Sequence order, then position.
std::vector<Example> make_examples(std::span<const std::vector<TokenId>> sequences,
                                   std::size_t window);

struct TrainingBatch {
  std::vector<std::vector<TokenId>> prefixes;
  std::vector<TokenId> labels;
  std::vector<std::vector<double>> predictions;
};

// Mean cross-entropy. Throws ArgumentError on an empty or ragged batch.
double batch_loss(const TrainingBatch& batch);

enum class OptimizerKind { sgd, momentum };

std::string_view optimizer_name(OptimizerKind kind) noexcept;
OptimizerKind parse_optimizer(std::string_view name);

// Plain gradient descent, optionally with heavy-ball momentum. Velocity state
// is keyed by parameter name.
class Optimizer {
 public:
  explicit Optimizer(OptimizerKind kind = OptimizerKind::sgd, double momentum = 0.9)
      : kind_(kind), momentum_(momentum) {}

  // theta <- theta - rate * g (or the momentum update), then zero every grad.
  // Throws TrainingDivergenceError naming the first parameter with a
  // non-finite gradient; no parameter is modified in that case.
  void step(const ParameterRefs& params, double rate);

 private:
  OptimizerKind kind_;
  double momentum_;
  std::map<std::string, Tensor> velocity_;
};

enum class Phase : int { generator_pretrain = 0, encoder_finetune = 1, fusion_only = 2, joint = 3 };
inline constexpr std::array<Phase, 4> kAllPhases = {Phase::generator_pretrain,
                                                    Phase::encoder_finetune, Phase::fusion_only,
                                                    Phase::joint};

std::string_view phase_label(Phase p) noexcept;  // "P0".."P3"

// Ordered phases and the parameters each one may change.
class PhaseSchedule {
 public:
  static ParameterRefs trainable(HybridModel& model, Phase phase);
  // Everything in the model that `phase` must leave untouched.
  static ParameterRefs frozen(HybridModel& model, Phase phase);

  // Throws ScheduleError unless `phase` is the next one in order.
  void begin(Phase phase);
  void complete(Phase phase);
  std::vector<Phase> completed() const { return completed_; }
  std::optional<Phase> next() const;

 private:
  std::vector<Phase> completed_;
  std::optional<Phase> running_;
};

struct TrainConfig {
  std::uint64_t seed = 1234;
  std::size_t batch_size = 16;
  std::array<double, 4> rates = {0.1, 0.1, 0.05, 0.01};
  std::array<std::size_t, 4> epochs = {30, 30, 20, 20};
  OptimizerKind optimizer = OptimizerKind::sgd;
  double momentum = 0.9;
  std::size_t context_window = 64;

  void validate() const;
};

struct PhaseReport {
  Phase phase = Phase::generator_pretrain;
  std::size_t epochs = 0;
  std::vector<double> epoch_loss;      // mean training loss per epoch
  std::string trainable_digest;        // hash of the trainable set after the phase
};

using EpochCallback = std::function<void(Phase, std::size_t epoch, double loss)>;

// Runs one phase over `data`. Only the phase's trainable set changes.
// P2 starts by copying the encoder head into the shared head.
PhaseReport run_phase(Phase phase, PhaseSchedule& schedule, const TrainConfig& config,
                      HybridModel& model, std::span<const Example> data,
                      const EpochCallback& on_epoch = {});

// P0..P3 in order.
std::vector<PhaseReport> train_all(const TrainConfig& config, HybridModel& model,
                                   std::span<const Example> data,
                                   const EpochCallback& on_epoch = {});

// Fraction of examples whose argmax under `dist` matches the label.
double example_accuracy(std::span<const Example> data,
                        const std::function<std::vector<double>(std::span<const TokenId>)>& dist);

}  // namespace hcc
