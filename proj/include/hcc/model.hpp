#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hcc/encoder.hpp"
#include "hcc/fusion.hpp"
#include "hcc/generator.hpp"

namespace hcc {

struct HybridConfig {
  EncoderConfig encoder;
  GeneratorConfig generator;
  FusionMode fusion = FusionMode::static_weight;

  // Both backbones share one vocabulary; widths may differ (adapter).
  void validate() const;
};

// softmax(W . fuse(f_code, f_gpt) + b) for one prefix.
std::vector<double> hybrid_next_token_distribution(std::span<const TokenId> prefix,
                                                   const ContextEncoder& encoder,
                                                   const Generator& generator,
                                                   const FusionLayer& fusion,
                                                   const PredictionHead& head);

// Encoder, generator (with its own LM head), fusion layer and the shared
// prediction head, plus the encoder's stage-one head that seeds the shared one.
class HybridModel {
 public:
  HybridModel() = default;
  HybridModel(const HybridConfig& cfg, std::uint64_t seed);

  const HybridConfig& config() const noexcept { return config_; }
  std::size_t vocab_size() const noexcept { return config_.encoder.vocab_size; }

  ContextEncoder& encoder() noexcept { return encoder_; }
  const ContextEncoder& encoder() const noexcept { return encoder_; }
  Generator& generator() noexcept { return generator_; }
  const Generator& generator() const noexcept { return generator_; }
  FusionLayer& fusion() noexcept { return fusion_; }
  const FusionLayer& fusion() const noexcept { return fusion_; }
  PredictionHead& head() noexcept { return head_; }
  const PredictionHead& head() const noexcept { return head_; }
  PredictionHead& encoder_head() noexcept { return encoder_head_; }
  const PredictionHead& encoder_head() const noexcept { return encoder_head_; }

  std::vector<double> hybrid_distribution(std::span<const TokenId> prefix) const;
  // Shared head applied to f_code alone / to f_gpt alone.
  std::vector<double> encoder_path_distribution(std::span<const TokenId> prefix) const;
  std::vector<double> generator_path_distribution(std::span<const TokenId> prefix) const;
  // Stage-specific single-backbone models.
  std::vector<double> encoder_only_distribution(std::span<const TokenId> prefix) const;
  std::vector<double> generator_only_distribution(std::span<const TokenId> prefix) const;

  // Cross-entropy of each path for one (prefix, label) example; gradients are
  // accumulated with the given scale (e.g. 1 / batch size).
  double hybrid_loss_backward(std::span<const TokenId> prefix, TokenId label, double scale);
  double encoder_only_loss_backward(std::span<const TokenId> prefix, TokenId label, double scale);
  double generator_only_loss_backward(std::span<const TokenId> prefix, TokenId label,
                                      double scale);
  // Fusion + shared head only, from precomputed backbone features.
  double fusion_loss_backward(std::span<const double> f_code, std::span<const double> f_gpt,
                              TokenId label, double scale);

  // Parameter groups. Names are unique across the model.
  ParameterRefs encoder_parameters();        // encoder backbone
  ParameterRefs encoder_head_parameters();   // stage-one head over f_code
  ParameterRefs generator_parameters();      // generator backbone + LM head
  ParameterRefs fusion_parameters();         // rho or (u, c) [+ adapter]
  ParameterRefs head_parameters();           // shared W, b
  ParameterRefs parameters();                // all of the above, in that order

  // Copy of every parameter value, keyed by position in parameters().
  std::vector<Tensor> snapshot();

  std::size_t parameter_bytes() const;
  std::size_t encoder_only_parameter_bytes() const;
  std::size_t generator_only_parameter_bytes() const;

 private:
  HybridConfig config_;
  ContextEncoder encoder_;
  PredictionHead encoder_head_;
  Generator generator_;
  FusionLayer fusion_;
  PredictionHead head_;
};

}  // namespace hcc
