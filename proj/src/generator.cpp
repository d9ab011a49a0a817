#include "hcc/generator.hpp"

#include <algorithm>
#include <cmath>

#include "hcc/encoder.hpp"
#include "hcc/errors.hpp"
#include "hcc/kernels.hpp"

namespace hcc {

PredictionHead::PredictionHead(const std::string& name, std::size_t vocab, std::size_t d_model,
                               Rng& rng)
    : weight(name + ".weight",
             random_normal({vocab, d_model}, 1.0 / std::sqrt(static_cast<double>(d_model)), rng)),
      bias(name + ".bias", Tensor({vocab}, 0.0)) {}

std::vector<double> PredictionHead::logits(std::span<const double> hidden) const {
  if (hidden.size() != width()) {
    throw DimensionError("prediction head expects width " + std::to_string(width()) + ", got " +
                         std::to_string(hidden.size()));
  }
  std::vector<double> out(bias.value.values().begin(), bias.value.values().end());
  kernels::active().gemm_nt(hidden.data(), weight.value.data(), out.data(), 1, width(),
                            vocab_size());
  return out;
}

std::vector<double> PredictionHead::backward(std::span<const double> hidden,
                                             std::span<const double> d_logits) {
  const auto& k = kernels::active();
  k.gemm_tn(d_logits.data(), hidden.data(), weight.grad.data(), 1, vocab_size(), width());
  for (std::size_t v = 0; v < d_logits.size(); ++v) bias.grad[v] += d_logits[v];
  std::vector<double> dh(width(), 0.0);
  k.gemm_nn(d_logits.data(), weight.value.data(), dh.data(), 1, vocab_size(), width());
  return dh;
}

std::vector<double> next_token_distribution(std::span<const double> hidden,
                                            const PredictionHead& head) {
  return softmax(head.logits(hidden));
}

Generator::Generator(const GeneratorConfig& cfg, Rng& rng)
    : stack_("generator", cfg, rng), lm_head_("generator.lm_head", cfg.vocab_size, cfg.d_model, rng) {}

Tensor Generator::features(std::span<const TokenId> prefix, Cache* cache) const {
  const std::vector<TokenId> ids = prepare_prefix(prefix, config().max_len);
  const AttentionMask mask = AttentionMask::causal(ids.size());
  if (cache != nullptr) cache->length = ids.size();
  return stack_.forward(ids, &mask, cache ? &cache->stack : nullptr);
}

std::pair<GeneratorFeatures, GeneratorState> Generator::forward(std::span<const TokenId> prefix,
                                                                Cache* cache) const {
  const Tensor all = features(prefix, cache);
  const auto last = all.row(all.rows() - 1);
  GeneratorState state{prepare_prefix(prefix, config().max_len), Tensor::vector(last)};
  GeneratorFeatures feats{state.hidden};
  return {std::move(feats), std::move(state)};
}

void Generator::backward(const Cache& cache, const Tensor& d_features) {
  stack_.backward(cache.stack, d_features);
}

void Generator::backward_last(const Cache& cache, std::span<const double> d_hidden) {
  Tensor d_features({cache.length, config().d_model});
  std::copy(d_hidden.begin(), d_hidden.end(), d_features.row(cache.length - 1).begin());
  stack_.backward(cache.stack, d_features);
}

}  // namespace hcc
