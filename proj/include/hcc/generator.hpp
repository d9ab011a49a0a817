#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hcc/transformer.hpp"

namespace hcc {

// logits = W h + b with W [V x d_model].
struct PredictionHead {
  Parameter weight;
  Parameter bias;

  PredictionHead() = default;
  PredictionHead(const std::string& name, std::size_t vocab, std::size_t d_model, Rng& rng);

  std::size_t vocab_size() const noexcept { return weight.value.rows(); }
  std::size_t width() const noexcept { return weight.value.cols(); }

  std::vector<double> logits(std::span<const double> hidden) const;
  // Accumulates W/b gradients, returns d hidden.
  std::vector<double> backward(std::span<const double> hidden, std::span<const double> d_logits);
  void collect(ParameterRefs& out) { out.push_back(&weight); out.push_back(&bias); }
};

// softmax(W h + b). Throws DimensionError when widths disagree.
std::vector<double> next_token_distribution(std::span<const double> hidden,
                                            const PredictionHead& head);

struct GeneratorFeatures {
  Tensor f_gpt;  // [d_model], identical to the state's hidden vector
};

struct GeneratorState {
  std::vector<TokenId> prefix;
  Tensor hidden;  // h_t, top-layer feature at the last position
};

// Causal transformer with its own language-model head.
class Generator {
 public:
  struct Cache {
    TransformerStack::Cache stack;
    std::size_t length = 0;
  };

  Generator() = default;
  Generator(const GeneratorConfig& cfg, Rng& rng);

  const GeneratorConfig& config() const noexcept { return stack_.config(); }
  PredictionHead& lm_head() noexcept { return lm_head_; }
  const PredictionHead& lm_head() const noexcept { return lm_head_; }

  // Top-layer features at every position, [T x d_model].
  Tensor features(std::span<const TokenId> prefix, Cache* cache = nullptr) const;
  std::pair<GeneratorFeatures, GeneratorState> forward(std::span<const TokenId> prefix,
                                                       Cache* cache = nullptr) const;
  // Backpropagates gradients on every position's feature.
  void backward(const Cache& cache, const Tensor& d_features);
  // Backpropagates a gradient on h_t only.
  void backward_last(const Cache& cache, std::span<const double> d_hidden);

  void collect_backbone(ParameterRefs& out) { stack_.collect(out); }
  void collect(ParameterRefs& out) {
    stack_.collect(out);
    lm_head_.collect(out);
  }

 private:
  TransformerStack stack_;
  PredictionHead lm_head_;
};

}  // namespace hcc
