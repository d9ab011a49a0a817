#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hcc/transformer.hpp"

namespace hcc {

struct ContextFeatures {
  Tensor positions;  // [T x d_model]
  Tensor pooled;     // f_code, [d_model]
  std::size_t pooled_index = 0;
};

// Empty prefixes become a single BOS; long prefixes keep the most recent
// max_len tokens.
std::vector<TokenId> prepare_prefix(std::span<const TokenId> prefix, std::size_t max_len);

// Bidirectional transformer over the code prefix. PAD keys are masked and the
// pooled feature is taken at the last non-PAD position.
class ContextEncoder {
 public:
  struct Cache {
    TransformerStack::Cache stack;
    std::size_t pooled_index = 0;
    std::size_t length = 0;
  };

  ContextEncoder() = default;
  ContextEncoder(const EncoderConfig& cfg, Rng& rng);

  const EncoderConfig& config() const noexcept { return stack_.config(); }

  ContextFeatures encode(std::span<const TokenId> prefix, Cache* cache = nullptr) const;
  // Backpropagates a gradient on the pooled feature.
  void backward(const Cache& cache, std::span<const double> d_pooled);
  void collect(ParameterRefs& out) { stack_.collect(out); }

 private:
  TransformerStack stack_;
};

}  // namespace hcc
