#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hcc/errors.hpp"
#include "hcc/nn.hpp"

namespace hcc {

namespace special {
inline constexpr TokenId pad = 0;
inline constexpr TokenId unk = 1;
inline constexpr TokenId bos = 2;
inline constexpr TokenId eos = 3;
inline constexpr TokenId mask = 4;
inline constexpr TokenId count = 5;
}  // namespace special

class Vocabulary {
 public:
  // Only the five reserved tokens.
  Vocabulary();
  // Reserved tokens followed by `tokens` in id order. Throws VocabularyError
  // on duplicates or a token colliding with a reserved spelling.
  explicit Vocabulary(std::span<const std::string> tokens);

  std::size_t size() const noexcept { return id_to_token_.size(); }
  bool contains(std::string_view token) const;
  // UNK for out-of-vocabulary tokens.
  TokenId id(std::string_view token) const;
  // Throws VocabularyError for an unassigned id.
  const std::string& token(TokenId id) const;

  // Non-reserved tokens in id order.
  std::vector<std::string> learned_tokens() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

std::string_view reserved_spelling(TokenId id);

// Most frequent tokens first, ties in ascending lexicographic order; tokens
// below `min_freq` are dropped; the result holds at most `max_size` ids
// including the reserved ones. Throws ArgumentError when max_size <= 5.
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> samples, std::size_t max_size,
                            std::size_t min_freq = 1);

std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocabulary& vocab);
std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab);

struct TokenizedSample {
  std::string source;
  std::vector<std::string> tokens;
  std::vector<TokenId> ids;
};

TokenizedSample tokenize_sample(std::string source, const Vocabulary& vocab);

struct CodeSample {
  std::string code;
};

// JSONL, one object per line with a required string field "code".
std::vector<CodeSample> parse_corpus(std::string_view text);
std::vector<CodeSample> load_corpus(const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

// Throws ArgumentError on a negative ratio or a sum off 1 by more than 1e-9.
void validate_ratios(const SplitRatios& ratios);

template <class T>
struct CorpusSplit {
  std::vector<T> train;
  std::vector<T> valid;
  std::vector<T> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

// Shuffles with the seed, then cuts contiguous blocks of round(ratio * n) for
// train and valid; test takes the remainder.
template <class T>
CorpusSplit<T> split_corpus(std::span<const T> samples, const SplitRatios& ratios,
                            std::uint64_t seed) {
  validate_ratios(ratios);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = static_cast<double>(samples.size());
  const std::size_t n_train = std::min(samples.size(), static_cast<std::size_t>(std::llround(ratios.train * n)));
  const std::size_t n_valid =
      std::min(samples.size() - n_train, static_cast<std::size_t>(std::llround(ratios.valid * n)));

  CorpusSplit<T> out;
  out.seed = seed;
  out.ratios = ratios;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const T& s = samples[order[i]];
    if (i < n_train) {
      out.train.push_back(s);
    } else if (i < n_train + n_valid) {
      out.valid.push_back(s);
    } else {
      out.test.push_back(s);
    }
  }
  return out;
}

}  // namespace hcc
