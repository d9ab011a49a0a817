#include "hcc/completion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hcc/corpus.hpp"
#include "hcc/errors.hpp"

namespace hcc {

TokenId NextTokenModel::predict(std::span<const TokenId> prefix) const {
  const auto p = distribution(prefix);
  return static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace {

TokenId sample(const std::vector<double>& probs, double temperature, Rng& rng) {
  std::vector<double> w(probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    w[i] = probs[i] > 0 ? std::exp(std::log(probs[i]) / temperature) : 0.0;
    total += w[i];
  }
  std::uniform_real_distribution<double> uni(0.0, total);
  double r = uni(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (r < w[i]) return static_cast<TokenId>(i);
    r -= w[i];
  }
  // Rounding left a sliver of mass past the end; take the last nonzero entry.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0) return static_cast<TokenId>(i);
  }
  return special::eos;
}

}  // namespace

std::vector<TokenId> generate(const NextTokenModel& model, std::span<const TokenId> prefix,
                              const GenerateOptions& options) {
  if (options.decoding == Decoding::temperature && !(options.temperature > 0.0)) {
    throw ArgumentError("sampling temperature must be positive");
  }
  Rng rng(options.seed);
  std::vector<TokenId> context(prefix.begin(), prefix.end());
  std::vector<TokenId> out;
  out.reserve(options.max_new);
  while (out.size() < options.max_new) {
    TokenId next;
    if (options.decoding == Decoding::greedy) {
      next = model.predict(context);
    } else {
      next = sample(model.distribution(context), options.temperature, rng);
    }
    out.push_back(next);
    context.push_back(next);
    if (options.stop_at_eos && next == special::eos) break;
  }
  return out;
}

std::size_t HybridPredictor::parameter_bytes() const { return model_.parameter_bytes(); }

std::size_t EncoderOnlyPredictor::parameter_bytes() const {
  return model_.encoder_only_parameter_bytes();
}

std::size_t GeneratorOnlyPredictor::parameter_bytes() const {
  return model_.generator_only_parameter_bytes();
}

BigramBaseline::BigramBaseline(std::size_t vocab_size,
                               std::span<const std::vector<TokenId>> sequences)
    : vocab_size_(vocab_size) {
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) ++counts_[seq[i]][seq[i + 1]];
  }
}

std::vector<double> BigramBaseline::distribution(std::span<const TokenId> prefix) const {
  const TokenId prev = prefix.empty() ? special::bos : prefix.back();
  std::vector<double> p(vocab_size_, 1.0);
  double total = static_cast<double>(vocab_size_);
  if (auto it = counts_.find(prev); it != counts_.end()) {
    for (const auto& [next, n] : it->second) {
      if (next >= 0 && static_cast<std::size_t>(next) < vocab_size_) {
        p[static_cast<std::size_t>(next)] += static_cast<double>(n);
        total += static_cast<double>(n);
      }
    }
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t BigramBaseline::parameter_bytes() const {
  std::size_t entries = 0;
  for (const auto& [prev, row] : counts_) entries += row.size();
  return entries * (sizeof(TokenId) * 2 + sizeof(std::size_t));
}

}  // namespace hcc
