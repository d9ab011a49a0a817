#include "hcc/model.hpp"

#include "hcc/errors.hpp"

namespace hcc {

void HybridConfig::validate() const {
  encoder.validate();
  generator.validate();
  if (encoder.vocab_size != generator.vocab_size) {
    throw ArgumentError("encoder and generator vocabularies differ (" +
                        std::to_string(encoder.vocab_size) + " vs " +
                        std::to_string(generator.vocab_size) + ")");
  }
}

std::vector<double> hybrid_next_token_distribution(std::span<const TokenId> prefix,
                                                   const ContextEncoder& encoder,
                                                   const Generator& generator,
                                                   const FusionLayer& fusion,
                                                   const PredictionHead& head) {
  const ContextFeatures ctx = encoder.encode(prefix);
  const auto [gen, state] = generator.forward(prefix);
  const FusedFeatures fused = fusion.forward(ctx.pooled.values(), gen.f_gpt.values());
  return next_token_distribution(fused.fused.values(), head);
}

HybridModel::HybridModel(const HybridConfig& cfg, std::uint64_t seed) : config_(cfg) {
  cfg.validate();
  Rng rng(seed);
  encoder_ = ContextEncoder(cfg.encoder, rng);
  encoder_head_ = PredictionHead("encoder_head", cfg.encoder.vocab_size, cfg.encoder.d_model, rng);
  generator_ = Generator(cfg.generator, rng);
  fusion_ = FusionLayer(cfg.fusion, cfg.encoder.d_model, cfg.generator.d_model, rng);
  head_ = PredictionHead("head", cfg.encoder.vocab_size, cfg.encoder.d_model, rng);
}

std::vector<double> HybridModel::hybrid_distribution(std::span<const TokenId> prefix) const {
  return hybrid_next_token_distribution(prefix, encoder_, generator_, fusion_, head_);
}

std::vector<double> HybridModel::encoder_path_distribution(std::span<const TokenId> prefix) const {
  return next_token_distribution(encoder_.encode(prefix).pooled.values(), head_);
}

std::vector<double> HybridModel::generator_path_distribution(
    std::span<const TokenId> prefix) const {
  const auto [gen, state] = generator_.forward(prefix);
  return next_token_distribution(fusion_.adapt(gen.f_gpt.values()), head_);
}

std::vector<double> HybridModel::encoder_only_distribution(std::span<const TokenId> prefix) const {
  return next_token_distribution(encoder_.encode(prefix).pooled.values(), encoder_head_);
}

std::vector<double> HybridModel::generator_only_distribution(
    std::span<const TokenId> prefix) const {
  const auto [gen, state] = generator_.forward(prefix);
  return next_token_distribution(gen.f_gpt.values(), generator_.lm_head());
}

namespace {

std::vector<double> scaled(std::vector<double> v, double s) {
  for (double& x : v) x *= s;
  return v;
}

}  // namespace

double HybridModel::hybrid_loss_backward(std::span<const TokenId> prefix, TokenId label,
                                         double scale) {
  ContextEncoder::Cache enc_cache;
  Generator::Cache gen_cache;
  FusionLayer::Cache fusion_cache;
  const ContextFeatures ctx = encoder_.encode(prefix, &enc_cache);
  const auto [gen, state] = generator_.forward(prefix, &gen_cache);
  const FusedFeatures fused = fusion_.forward(ctx.pooled.values(), gen.f_gpt.values(), &fusion_cache);

  const auto probs = next_token_distribution(fused.fused.values(), head_);
  const auto idx = static_cast<std::size_t>(label);
  const double loss = cross_entropy(probs, idx);
  const auto d_logits = scaled(cross_entropy_logits_grad(probs, idx), scale);

  const auto d_fused = head_.backward(fused.fused.values(), d_logits);
  const auto g = fusion_.backward(fusion_cache, d_fused);
  encoder_.backward(enc_cache, g.d_code);
  generator_.backward_last(gen_cache, g.d_gpt);
  return loss;
}

double HybridModel::encoder_only_loss_backward(std::span<const TokenId> prefix, TokenId label,
                                               double scale) {
  ContextEncoder::Cache cache;
  const ContextFeatures ctx = encoder_.encode(prefix, &cache);
  const auto probs = next_token_distribution(ctx.pooled.values(), encoder_head_);
  const auto idx = static_cast<std::size_t>(label);
  const double loss = cross_entropy(probs, idx);
  const auto d_logits = scaled(cross_entropy_logits_grad(probs, idx), scale);
  encoder_.backward(cache, encoder_head_.backward(ctx.pooled.values(), d_logits));
  return loss;
}

double HybridModel::generator_only_loss_backward(std::span<const TokenId> prefix, TokenId label,
                                                 double scale) {
  Generator::Cache cache;
  const auto [gen, state] = generator_.forward(prefix, &cache);
  auto& lm = generator_.lm_head();
  const auto probs = next_token_distribution(gen.f_gpt.values(), lm);
  const auto idx = static_cast<std::size_t>(label);
  const double loss = cross_entropy(probs, idx);
  const auto d_logits = scaled(cross_entropy_logits_grad(probs, idx), scale);
  generator_.backward_last(cache, lm.backward(gen.f_gpt.values(), d_logits));
  return loss;
}

double HybridModel::fusion_loss_backward(std::span<const double> f_code,
                                         std::span<const double> f_gpt, TokenId label,
                                         double scale) {
  FusionLayer::Cache cache;
  const FusedFeatures fused = fusion_.forward(f_code, f_gpt, &cache);
  const auto probs = next_token_distribution(fused.fused.values(), head_);
  const auto idx = static_cast<std::size_t>(label);
  const double loss = cross_entropy(probs, idx);
  const auto d_logits = scaled(cross_entropy_logits_grad(probs, idx), scale);
  fusion_.backward(cache, head_.backward(fused.fused.values(), d_logits));
  return loss;
}

ParameterRefs HybridModel::encoder_parameters() {
  ParameterRefs out;
  encoder_.collect(out);
  return out;
}

ParameterRefs HybridModel::encoder_head_parameters() {
  ParameterRefs out;
  encoder_head_.collect(out);
  return out;
}

ParameterRefs HybridModel::generator_parameters() {
  ParameterRefs out;
  generator_.collect(out);
  return out;
}

ParameterRefs HybridModel::fusion_parameters() {
  ParameterRefs out;
  fusion_.collect(out);
  return out;
}

ParameterRefs HybridModel::head_parameters() {
  ParameterRefs out;
  head_.collect(out);
  return out;
}

ParameterRefs HybridModel::parameters() {
  ParameterRefs out = encoder_parameters();
  const auto append = [&out](const ParameterRefs& more) { out.insert(out.end(), more.begin(), more.end()); };
  append(encoder_head_parameters());
  append(generator_parameters());
  append(fusion_parameters());
  append(head_parameters());
  return out;
}

std::vector<Tensor> HybridModel::snapshot() {
  std::vector<Tensor> out;
  for (Parameter* p : parameters()) out.push_back(p->value);
  return out;
}

namespace {
std::size_t bytes_of(const ParameterRefs& refs) {
  std::size_t n = 0;
  for (const Parameter* p : refs) n += p->value.bytes();
  return n;
}
}  // namespace

// Parameter collection hands out mutable pointers; only sizes are read here.
std::size_t HybridModel::parameter_bytes() const {
  return bytes_of(const_cast<HybridModel*>(this)->parameters());
}

std::size_t HybridModel::encoder_only_parameter_bytes() const {
  auto* self = const_cast<HybridModel*>(this);
  return bytes_of(self->encoder_parameters()) + bytes_of(self->encoder_head_parameters());
}

std::size_t HybridModel::generator_only_parameter_bytes() const {
  return bytes_of(const_cast<HybridModel*>(this)->generator_parameters());
}

}  // namespace hcc
