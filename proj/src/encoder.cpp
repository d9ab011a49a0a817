#include "hcc/encoder.hpp"

#include <algorithm>

#include "hcc/corpus.hpp"

namespace hcc {

std::vector<TokenId> prepare_prefix(std::span<const TokenId> prefix, std::size_t max_len) {
  if (prefix.empty()) return {special::bos};
  return truncate_to_recent(prefix, max_len);
}

ContextEncoder::ContextEncoder(const EncoderConfig& cfg, Rng& rng) : stack_("encoder", cfg, rng) {}

ContextFeatures ContextEncoder::encode(std::span<const TokenId> prefix, Cache* cache) const {
  const std::vector<TokenId> ids = prepare_prefix(prefix, config().max_len);
  const AttentionMask mask = AttentionMask::key_padding(ids, special::pad);

  std::size_t pooled = ids.size() - 1;
  for (std::size_t t = ids.size(); t-- > 0;) {
    if (ids[t] != special::pad) {
      pooled = t;
      break;
    }
  }

  ContextFeatures out;
  out.positions = stack_.forward(ids, &mask, cache ? &cache->stack : nullptr);
  out.pooled = Tensor::vector(out.positions.row(pooled));
  out.pooled_index = pooled;
  if (cache != nullptr) {
    cache->pooled_index = pooled;
    cache->length = ids.size();
  }
  return out;
}

void ContextEncoder::backward(const Cache& cache, std::span<const double> d_pooled) {
  Tensor d_features({cache.length, config().d_model});
  std::copy(d_pooled.begin(), d_pooled.end(), d_features.row(cache.pooled_index).begin());
  stack_.backward(cache.stack, d_features);
}

}  // namespace hcc
