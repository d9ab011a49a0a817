#include "hcc/fusion.hpp"

#include <cmath>
#include <string>

#include "hcc/errors.hpp"
#include "hcc/kernels.hpp"

namespace hcc {

std::string_view fusion_mode_name(FusionMode mode) noexcept {
  return mode == FusionMode::static_weight ? "static" : "dynamic";
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "static") return FusionMode::static_weight;
  if (name == "dynamic") return FusionMode::dynamic_gate;
  throw ArgumentError("unknown fusion mode '" + std::string(name) + "'");
}

double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void require_equal_widths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("fusion: f_code width " + std::to_string(a) + " vs f_gpt width " +
                         std::to_string(b) + " and no adapter configured");
  }
}

FusedFeatures convex_combination(std::span<const double> f_code, std::span<const double> f_gpt,
                                 double alpha) {
  FusedFeatures out{Tensor({f_code.size()}), alpha};
  const double beta = 1.0 - alpha;
  for (std::size_t i = 0; i < f_code.size(); ++i) {
    out.fused[i] = alpha * f_code[i] + beta * f_gpt[i];
  }
  return out;
}

double gate_logit(std::span<const double> f_code, std::span<const double> f_gpt,
                  const GateParams& gate) {
  const std::size_t d = f_code.size();
  if (gate.u.value.size() != 2 * d) {
    throw DimensionError("fusion gate expects 2 x " + std::to_string(gate.u.value.size() / 2) +
                         " features, got 2 x " + std::to_string(d));
  }
  const auto& k = kernels::active();
  return k.dot(gate.u.value.data(), f_code.data(), d) +
         k.dot(gate.u.value.data() + d, f_gpt.data(), d) + gate.c.value[0];
}

}  // namespace

FusedFeatures fuse_static(std::span<const double> f_code, std::span<const double> f_gpt,
                          const FusionWeight& weight) {
  require_equal_widths(f_code.size(), f_gpt.size());
  return convex_combination(f_code, f_gpt, weight.alpha());
}

FusedFeatures fuse_dynamic(std::span<const double> f_code, std::span<const double> f_gpt,
                           const GateParams& gate) {
  require_equal_widths(f_code.size(), f_gpt.size());
  return convex_combination(f_code, f_gpt, logistic(gate_logit(f_code, f_gpt, gate)));
}

FusionLayer::FusionLayer(FusionMode mode, std::size_t encoder_width, std::size_t generator_width,
                         Rng& rng)
    : mode_(mode), gate_(encoder_width) {
  if (encoder_width != generator_width) {
    adapter_.emplace("fusion.adapter", generator_width, encoder_width, rng);
  }
}

std::vector<double> FusionLayer::adapt(std::span<const double> f_gpt) const {
  if (!adapter_) return {f_gpt.begin(), f_gpt.end()};
  const Tensor mapped = adapter_->forward(Tensor::vector(f_gpt));
  return {mapped.values().begin(), mapped.values().end()};
}

FusedFeatures FusionLayer::forward(std::span<const double> f_code, std::span<const double> f_gpt,
                                   Cache* cache) const {
  std::vector<double> gpt = adapt(f_gpt);
  FusedFeatures out = mode_ == FusionMode::static_weight ? fuse_static(f_code, gpt, weight_)
                                                         : fuse_dynamic(f_code, gpt, gate_);
  if (cache != nullptr) {
    cache->f_code.assign(f_code.begin(), f_code.end());
    cache->f_gpt_raw.assign(f_gpt.begin(), f_gpt.end());
    cache->f_gpt = std::move(gpt);
    cache->alpha = out.alpha;
  }
  return out;
}

FusionLayer::InputGrads FusionLayer::backward(const Cache& cache, std::span<const double> d_fused) {
  const std::size_t d = cache.f_code.size();
  const double alpha = cache.alpha;
  InputGrads g{std::vector<double>(d), std::vector<double>(d)};
  double d_alpha = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    g.d_code[i] = alpha * d_fused[i];
    g.d_gpt[i] = (1.0 - alpha) * d_fused[i];
    d_alpha += d_fused[i] * (cache.f_code[i] - cache.f_gpt[i]);
  }
  const double d_logit = d_alpha * alpha * (1.0 - alpha);
  if (mode_ == FusionMode::static_weight) {
    weight_.rho.grad[0] += d_logit;
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      gate_.u.grad[i] += d_logit * cache.f_code[i];
      gate_.u.grad[d + i] += d_logit * cache.f_gpt[i];
      g.d_code[i] += d_logit * gate_.u.value[i];
      g.d_gpt[i] += d_logit * gate_.u.value[d + i];
    }
    gate_.c.grad[0] += d_logit;
  }
  if (adapter_) {
    const Tensor dx = adapter_->backward(Tensor::vector(cache.f_gpt_raw), Tensor::vector(g.d_gpt));
    g.d_gpt.assign(dx.values().begin(), dx.values().end());
  }
  return g;
}

void FusionLayer::collect(ParameterRefs& out) {
  if (mode_ == FusionMode::static_weight) {
    out.push_back(&weight_.rho);
  } else {
    out.push_back(&gate_.u);
    out.push_back(&gate_.c);
  }
  if (adapter_) adapter_->collect(out);
}

}  // namespace hcc
