#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hcc/nn.hpp"

namespace hcc {

// Boolean [queries x keys] matrix; true means attention is allowed.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t queries, std::size_t keys, bool fill);

  static AttentionMask full(std::size_t t) { return {t, t, true}; }
  static AttentionMask causal(std::size_t t);
  // Keys whose id equals `pad` are hidden from every query.
  static AttentionMask key_padding(std::span<const TokenId> ids, TokenId pad);

  std::size_t queries() const noexcept { return queries_; }
  std::size_t keys() const noexcept { return keys_; }
  bool allowed(std::size_t q, std::size_t k) const noexcept { return bits_[q * keys_ + k] != 0; }
  void set(std::size_t q, std::size_t k, bool allow) noexcept { bits_[q * keys_ + k] = allow; }

 private:
  std::size_t queries_ = 0;
  std::size_t keys_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct AttentionOutput {
  Tensor output;   // [Tq x dv]
  Tensor weights;  // [Tq x Tk], rows are probability vectors or all zero
};

// softmax(Q K^T / sqrt(d)) V over allowed positions. A query whose keys are all
// masked receives zero weights and a zero output row.
AttentionOutput scaled_dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                             const AttentionMask* mask = nullptr);

struct AttentionGrads {
  Tensor dq;
  Tensor dk;
  Tensor dv;
};
AttentionGrads scaled_dot_product_attention_backward(const Tensor& q, const Tensor& k,
                                                     const Tensor& v, const Tensor& weights,
                                                     const Tensor& d_output);

// Head split, per-head attention, concat, output projection. Residual and
// normalization belong to the enclosing layer.
struct MultiHeadAttention {
  std::size_t heads = 1;
  Linear query;
  Linear key;
  Linear value;
  Linear output;

  struct Cache {
    Tensor input;
    Tensor q, k, v;
    std::vector<Tensor> weights;  // one [T x T] per head
    Tensor concat;
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, std::size_t d_model, std::size_t heads, Rng& rng);

  Tensor forward(const Tensor& x, const AttentionMask* mask, Cache* cache) const;
  Tensor backward(const Cache& cache, const Tensor& dy);
  void collect(ParameterRefs& out);
};

}  // namespace hcc
