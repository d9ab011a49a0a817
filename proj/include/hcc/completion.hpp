#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hcc/model.hpp"

namespace hcc {

// Anything that maps a prefix to a next-token distribution.
class NextTokenModel {
 public:
  virtual ~NextTokenModel() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> distribution(std::span<const TokenId> prefix) const = 0;
  // Bytes of parameter storage, for memory reporting.
  virtual std::size_t parameter_bytes() const = 0;

  // Greedy choice; ties go to the lowest id.
  TokenId predict(std::span<const TokenId> prefix) const;
};

enum class Decoding { greedy, temperature };

struct GenerateOptions {
  std::size_t max_new = 16;
  Decoding decoding = Decoding::greedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  bool stop_at_eos = true;
};

// Appends one token at a time; stops after EOS (which is included) or
// max_new tokens. Throws ArgumentError for temperature <= 0.
std::vector<TokenId> generate(const NextTokenModel& model, std::span<const TokenId> prefix,
                              const GenerateOptions& options);

// Views over a trained HybridModel. The model must outlive them.
class HybridPredictor final : public NextTokenModel {
 public:
  explicit HybridPredictor(const HybridModel& m, std::string label = "Hybrid Model")
      : model_(m), label_(std::move(label)) {}
  std::string name() const override { return label_; }
  std::vector<double> distribution(std::span<const TokenId> prefix) const override {
    return model_.hybrid_distribution(prefix);
  }
  std::size_t parameter_bytes() const override;

 private:
  const HybridModel& model_;
  std::string label_;
};

class EncoderOnlyPredictor final : public NextTokenModel {
 public:
  explicit EncoderOnlyPredictor(const HybridModel& m) : model_(m) {}
  std::string name() const override { return "Encoder"; }
  std::vector<double> distribution(std::span<const TokenId> prefix) const override {
    return model_.encoder_only_distribution(prefix);
  }
  std::size_t parameter_bytes() const override;

 private:
  const HybridModel& model_;
};

class GeneratorOnlyPredictor final : public NextTokenModel {
 public:
  explicit GeneratorOnlyPredictor(const HybridModel& m) : model_(m) {}
  std::string name() const override { return "Generator"; }
  std::vector<double> distribution(std::span<const TokenId> prefix) const override {
    return model_.generator_only_distribution(prefix);
  }
  std::size_t parameter_bytes() const override;

 private:
  const HybridModel& model_;
};

// Previous-token frequency model with add-one smoothing, the reference
// baseline in reports.
class BigramBaseline final : public NextTokenModel {
 public:
  BigramBaseline(std::size_t vocab_size, std::span<const std::vector<TokenId>> sequences);
  std::string name() const override { return "Baseline"; }
  std::vector<double> distribution(std::span<const TokenId> prefix) const override;
  std::size_t parameter_bytes() const override;

 private:
  std::size_t vocab_size_;
  std::map<TokenId, std::map<TokenId, std::size_t>> counts_;
};

}  // namespace hcc
