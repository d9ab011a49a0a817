#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hcc/attention.hpp"
#include "hcc/nn.hpp"

namespace hcc {

// Extents shared by the context encoder and the generator.
struct BackboneConfig {
  std::size_t layers = 2;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t ff_width = 128;
  std::size_t max_len = 64;
  std::size_t vocab_size = 0;

  std::size_t head_width() const noexcept { return heads == 0 ? 0 : d_model / heads; }
  // Throws ArgumentError on a zero extent or d_model not divisible by heads.
  void validate() const;

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

using EncoderConfig = BackboneConfig;
using GeneratorConfig = BackboneConfig;

// Pre-norm block: h = x + MHA(LN1(x)); y = h + FFN(LN2(h)), FFN = W2 gelu(W1 .).
struct TransformerLayer {
  LayerNorm norm1;
  MultiHeadAttention attention;
  LayerNorm norm2;
  Linear ff_in;
  Linear ff_out;

  struct Cache {
    LayerNormCache norm1;
    MultiHeadAttention::Cache attention;
    LayerNormCache norm2;
    Tensor ff_input;   // LN2(h)
    Tensor ff_hidden;  // W1 LN2(h) + b1, before gelu
    Tensor ff_tanh;    // inner tanh of the gelu
    Tensor ff_act;     // gelu(ff_hidden)
  };

  TransformerLayer() = default;
  TransformerLayer(const std::string& name, const BackboneConfig& cfg, Rng& rng);

  Tensor forward(const Tensor& x, const AttentionMask* mask, Cache* cache) const;
  Tensor backward(const Cache& cache, const Tensor& dy);
  void collect(ParameterRefs& out);
};

// Token + learned position embeddings, a stack of layers and a final norm.
class TransformerStack {
 public:
  struct Cache {
    std::vector<TokenId> ids;
    std::vector<TransformerLayer::Cache> layers;
    LayerNormCache final_norm;
  };

  TransformerStack() = default;
  TransformerStack(const std::string& name, const BackboneConfig& cfg, Rng& rng);

  const BackboneConfig& config() const noexcept { return config_; }

  // Features [T x d_model] for ids (1 <= T <= max_len).
  Tensor forward(std::span<const TokenId> ids, const AttentionMask* mask, Cache* cache) const;
  void backward(const Cache& cache, const Tensor& d_features);
  void collect(ParameterRefs& out);

 private:
  BackboneConfig config_;
  Embedding tokens_;
  Embedding positions_;
  std::vector<TransformerLayer> layers_;
  LayerNorm final_norm_;
};

// Keeps the most recent `max_len` tokens.
std::vector<TokenId> truncate_to_recent(std::span<const TokenId> ids, std::size_t max_len);

}  // namespace hcc
