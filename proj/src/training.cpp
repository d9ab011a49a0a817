#include "hcc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hcc/corpus.hpp"
#include "hcc/digest.hpp"
#include "hcc/errors.hpp"
#include "hcc/ops.hpp"

namespace hcc {

std::vector<TokenId> training_sequence(std::span<const TokenId> ids) {
  std::vector<TokenId> seq;
  seq.reserve(ids.size() + 2);
  seq.push_back(special::bos);
  seq.insert(seq.end(), ids.begin(), ids.end());
  seq.push_back(special::eos);
  return seq;
}

std::vector<Example> make_examples(std::span<const std::vector<TokenId>> sequences,
                                   std::size_t window) {
  if (window == 0) throw ArgumentError("context window must be positive");
  std::vector<Example> out;
  for (const auto& seq : sequences) {
    for (std::size_t t = 1; t < seq.size(); ++t) {
      const std::size_t start = t > window ? t - window : 0;
      out.push_back({std::vector<TokenId>(seq.begin() + static_cast<std::ptrdiff_t>(start),
                                          seq.begin() + static_cast<std::ptrdiff_t>(t)),
                     seq[t]});
    }
  }
  return out;
}

double batch_loss(const TrainingBatch& batch) {
  if (batch.labels.empty()) throw ArgumentError("batch_loss: empty batch");
  if (batch.labels.size() != batch.predictions.size() ||
      (!batch.prefixes.empty() && batch.prefixes.size() != batch.labels.size())) {
    throw ArgumentError("batch_loss: prefixes, labels and predictions differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    sum += cross_entropy(batch.predictions[i], static_cast<std::size_t>(batch.labels[i]));
  }
  return sum / static_cast<double>(batch.labels.size());
}

std::string_view optimizer_name(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::momentum ? "momentum" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "momentum") return OptimizerKind::momentum;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or momentum)");
}

void Optimizer::step(const ParameterRefs& params, double rate) {
  for (const Parameter* p : params) {
    if (!p->grad.all_finite()) {
      throw TrainingDivergenceError("non-finite gradient in parameter '" + p->name + "'");
    }
  }
  for (Parameter* p : params) {
    double* w = p->value.data();
    const double* g = p->grad.data();
    const std::size_t n = p->value.size();
    if (kind_ == OptimizerKind::momentum) {
      auto [it, fresh] = velocity_.try_emplace(p->name, p->value.shape(), 0.0);
      double* v = it->second.data();
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = momentum_ * v[i] + g[i];
        w[i] -= rate * v[i];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) w[i] -= rate * g[i];
    }
    p->zero_grad();
  }
}

std::string_view phase_label(Phase p) noexcept {
  switch (p) {
    case Phase::generator_pretrain: return "P0";
    case Phase::encoder_finetune: return "P1";
    case Phase::fusion_only: return "P2";
    case Phase::joint: return "P3";
  }
  return "P?";
}

ParameterRefs PhaseSchedule::trainable(HybridModel& model, Phase phase) {
  switch (phase) {
    case Phase::generator_pretrain: return model.generator_parameters();
    case Phase::encoder_finetune: {
      ParameterRefs out = model.encoder_parameters();
      const auto head = model.encoder_head_parameters();
      out.insert(out.end(), head.begin(), head.end());
      return out;
    }
    case Phase::fusion_only: {
      ParameterRefs out = model.fusion_parameters();
      const auto head = model.head_parameters();
      out.insert(out.end(), head.begin(), head.end());
      return out;
    }
    case Phase::joint: return model.parameters();
  }
  return {};
}

ParameterRefs PhaseSchedule::frozen(HybridModel& model, Phase phase) {
  const ParameterRefs active = trainable(model, phase);
  const std::set<const Parameter*> in(active.begin(), active.end());
  ParameterRefs out;
  for (Parameter* p : model.parameters()) {
    if (!in.contains(p)) out.push_back(p);
  }
  return out;
}

std::optional<Phase> PhaseSchedule::next() const {
  if (completed_.size() >= kAllPhases.size()) return std::nullopt;
  return kAllPhases[completed_.size()];
}

void PhaseSchedule::begin(Phase phase) {
  if (running_) {
    throw ScheduleError("phase " + std::string(phase_label(*running_)) + " is still running");
  }
  const auto expected = next();
  if (!expected || *expected != phase) {
    throw ScheduleError("phase " + std::string(phase_label(phase)) + " out of order; expected " +
                        (expected ? std::string(phase_label(*expected)) : "none"));
  }
  running_ = phase;
}

void PhaseSchedule::complete(Phase phase) {
  if (!running_ || *running_ != phase) {
    throw ScheduleError("phase " + std::string(phase_label(phase)) + " was not started");
  }
  completed_.push_back(phase);
  running_.reset();
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  for (double r : rates) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("train.rates must all be positive");
  }
  if (context_window == 0) throw ConfigError("train.context_window must be positive");
  if (optimizer == OptimizerKind::momentum && !(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("train.momentum must lie in [0, 1)");
  }
}

namespace {

void zero_all(HybridModel& model) {
  for (Parameter* p : model.parameters()) p->zero_grad();
}

struct CachedFeatures {
  std::vector<Tensor> code;
  std::vector<Tensor> gpt;
};

// Frozen backbone features for P2.
CachedFeatures backbone_features(const HybridModel& model, std::span<const Example> data) {
  CachedFeatures out;
  out.code.reserve(data.size());
  out.gpt.reserve(data.size());
  for (const Example& ex : data) {
    out.code.push_back(model.encoder().encode(ex.prefix).pooled);
    out.gpt.push_back(model.generator().forward(ex.prefix).first.f_gpt);
  }
  return out;
}

void copy_head(const PredictionHead& from, PredictionHead& to) {
  if (!from.weight.value.same_shape(to.weight.value)) {
    throw DimensionError("encoder head and shared head differ in shape");
  }
  to.weight.value = from.weight.value;
  to.bias.value = from.bias.value;
}

}  // namespace

PhaseReport run_phase(Phase phase, PhaseSchedule& schedule, const TrainConfig& config,
                      HybridModel& model, std::span<const Example> data,
                      const EpochCallback& on_epoch) {
  config.validate();
  schedule.begin(phase);

  const auto index = static_cast<std::size_t>(phase);
  const std::size_t epochs = config.epochs[index];
  const double rate = config.rates[index];
  const ParameterRefs params = PhaseSchedule::trainable(model, phase);

  PhaseReport report;
  report.phase = phase;
  report.epochs = epochs;

  // Shared head starts from the encoder head.
  if (phase == Phase::fusion_only) copy_head(model.encoder_head(), model.head());

  CachedFeatures cached;
  if (phase == Phase::fusion_only && epochs > 0) cached = backbone_features(model, data);

  Optimizer optimizer(config.optimizer, config.momentum);
  Rng rng(config.seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  zero_all(model);
  for (std::size_t epoch = 0; epoch < epochs && !data.empty(); ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const Example& ex = data[i];
        switch (phase) {
          case Phase::generator_pretrain:
            total += model.generator_only_loss_backward(ex.prefix, ex.next, scale);
            break;
          case Phase::encoder_finetune:
            total += model.encoder_only_loss_backward(ex.prefix, ex.next, scale);
            break;
          case Phase::fusion_only:
            total += model.fusion_loss_backward(cached.code[i].values(), cached.gpt[i].values(),
                                                ex.next, scale);
            break;
          case Phase::joint:
            total += model.hybrid_loss_backward(ex.prefix, ex.next, scale);
            break;
        }
      }
      optimizer.step(params, rate);
      zero_all(model);
    }
    const double mean = total / static_cast<double>(data.size());
    report.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(phase, epoch, mean);
  }

  report.trainable_digest = parameter_digest(params);
  schedule.complete(phase);
  return report;
}

std::vector<PhaseReport> train_all(const TrainConfig& config, HybridModel& model,
                                   std::span<const Example> data, const EpochCallback& on_epoch) {
  PhaseSchedule schedule;
  std::vector<PhaseReport> reports;
  for (Phase p : kAllPhases) reports.push_back(run_phase(p, schedule, config, model, data, on_epoch));
  return reports;
}

double example_accuracy(
    std::span<const Example> data,
    const std::function<std::vector<double>(std::span<const TokenId>)>& dist) {
  if (data.empty()) throw EmptyEvaluationError("no examples to score");
  std::size_t hits = 0;
  for (const Example& ex : data) {
    const auto p = dist(ex.prefix);
    const auto best = std::max_element(p.begin(), p.end()) - p.begin();
    if (best == ex.next) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace hcc
