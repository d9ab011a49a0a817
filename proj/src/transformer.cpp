#include "hcc/transformer.hpp"

#include "hcc/errors.hpp"

namespace hcc {

void BackboneConfig::validate() const {
  if (layers == 0 || d_model == 0 || heads == 0 || ff_width == 0 || max_len == 0 ||
      vocab_size == 0) {
    throw ArgumentError("backbone extents must all be positive");
  }
  if (d_model % heads != 0) {
    throw ArgumentError("d_model " + std::to_string(d_model) + " is not divisible by " +
                        std::to_string(heads) + " heads");
  }
}

TransformerLayer::TransformerLayer(const std::string& name, const BackboneConfig& cfg, Rng& rng)
    : norm1(name + ".norm1", cfg.d_model),
      attention(name + ".attn", cfg.d_model, cfg.heads, rng),
      norm2(name + ".norm2", cfg.d_model),
      ff_in(name + ".ff_in", cfg.d_model, cfg.ff_width, rng),
      ff_out(name + ".ff_out", cfg.ff_width, cfg.d_model, rng) {}

Tensor TransformerLayer::forward(const Tensor& x, const AttentionMask* mask, Cache* cache) const {
  LayerNormCache n1;
  Tensor h = attention.forward(norm1.forward(x, &n1), mask, cache ? &cache->attention : nullptr);
  add_inplace(h, x);

  LayerNormCache n2;
  Tensor ff_input = norm2.forward(h, &n2);
  Tensor ff_hidden = ff_in.forward(ff_input);
  Tensor ff_tanh;
  Tensor ff_act = gelu(ff_hidden, cache != nullptr ? &ff_tanh : nullptr);
  Tensor y = ff_out.forward(ff_act);
  add_inplace(y, h);

  if (cache != nullptr) {
    cache->norm1 = std::move(n1);
    cache->norm2 = std::move(n2);
    cache->ff_input = std::move(ff_input);
    cache->ff_hidden = std::move(ff_hidden);
    cache->ff_tanh = std::move(ff_tanh);
    cache->ff_act = std::move(ff_act);
  }
  return y;
}

Tensor TransformerLayer::backward(const Cache& cache, const Tensor& dy) {
  Tensor dact = ff_out.backward(cache.ff_act, dy);
  Tensor dhidden = gelu_backward(cache.ff_hidden, dact, &cache.ff_tanh);
  Tensor dff_input = ff_in.backward(cache.ff_input, dhidden);
  Tensor dh = norm2.backward(cache.norm2, dff_input);
  add_inplace(dh, dy);

  Tensor dnorm1 = attention.backward(cache.attention, dh);
  Tensor dx = norm1.backward(cache.norm1, dnorm1);
  add_inplace(dx, dh);
  return dx;
}

void TransformerLayer::collect(ParameterRefs& out) {
  norm1.collect(out);
  attention.collect(out);
  norm2.collect(out);
  ff_in.collect(out);
  ff_out.collect(out);
}

TransformerStack::TransformerStack(const std::string& name, const BackboneConfig& cfg, Rng& rng)
    : config_(cfg) {
  cfg.validate();
  tokens_ = Embedding(name + ".tokens", cfg.vocab_size, cfg.d_model, 1.0, rng);
  positions_ = Embedding(name + ".positions", cfg.max_len, cfg.d_model, 1.0, rng);
  layers_.reserve(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    layers_.emplace_back(name + ".layer" + std::to_string(l), cfg, rng);
  }
  final_norm_ = LayerNorm(name + ".final_norm", cfg.d_model);
}

Tensor TransformerStack::forward(std::span<const TokenId> ids, const AttentionMask* mask,
                                 Cache* cache) const {
  if (ids.empty() || ids.size() > config_.max_len) {
    throw DimensionError("sequence length " + std::to_string(ids.size()) + " outside [1, " +
                         std::to_string(config_.max_len) + "]");
  }
  Tensor x({ids.size(), config_.d_model});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0) throw DimensionError("negative token id " + std::to_string(ids[t]));
    tokens_.add_row_to(static_cast<std::size_t>(ids[t]), x.row(t));
    positions_.add_row_to(t, x.row(t));
  }
  if (cache != nullptr) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->layers.resize(layers_.size());
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = layers_[l].forward(x, mask, cache ? &cache->layers[l] : nullptr);
  }
  return final_norm_.forward(x, cache ? &cache->final_norm : nullptr);
}

void TransformerStack::backward(const Cache& cache, const Tensor& d_features) {
  Tensor dx = final_norm_.backward(cache.final_norm, d_features);
  for (std::size_t l = layers_.size(); l-- > 0;) dx = layers_[l].backward(cache.layers[l], dx);
  for (std::size_t t = 0; t < cache.ids.size(); ++t) {
    tokens_.accumulate(static_cast<std::size_t>(cache.ids[t]), dx.row(t));
    positions_.accumulate(t, dx.row(t));
  }
}

void TransformerStack::collect(ParameterRefs& out) {
  tokens_.collect(out);
  positions_.collect(out);
  for (auto& layer : layers_) layer.collect(out);
  final_norm_.collect(out);
}

std::vector<TokenId> truncate_to_recent(std::span<const TokenId> ids, std::size_t max_len) {
  if (ids.size() <= max_len) return {ids.begin(), ids.end()};
  return {ids.end() - static_cast<std::ptrdiff_t>(max_len), ids.end()};
}

}  // namespace hcc
