#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hcc/nn.hpp"

namespace hcc {

enum class FusionMode { static_weight, dynamic_gate };

std::string_view fusion_mode_name(FusionMode mode) noexcept;  // "static" / "dynamic"
FusionMode parse_fusion_mode(std::string_view name);          // throws ArgumentError

double logistic(double x) noexcept;

// alpha = logistic(rho); rho starts at 0 (alpha = 0.5).
struct FusionWeight {
  Parameter rho{"fusion.rho", Tensor({1}, 0.0)};

  double alpha() const noexcept { return logistic(rho.value[0]); }
  void set_rho(double v) noexcept { rho.value[0] = v; }
};

// alpha(context) = logistic(u . [f_code ; f_gpt] + c), one scalar per prediction.
struct GateParams {
  Parameter u;
  Parameter c{"fusion.gate.c", Tensor({1}, 0.0)};

  GateParams() = default;
  explicit GateParams(std::size_t d_model) : u("fusion.gate.u", Tensor({2 * d_model}, 0.0)) {}
};

struct FusedFeatures {
  Tensor fused;  // [d_model]
  double alpha = 0.5;
};

// alpha * f_code + (1 - alpha) * f_gpt. Throws DimensionError on unequal widths.
FusedFeatures fuse_static(std::span<const double> f_code, std::span<const double> f_gpt,
                          const FusionWeight& weight);
FusedFeatures fuse_dynamic(std::span<const double> f_code, std::span<const double> f_gpt,
                           const GateParams& gate);

// The configured fusion op plus an optional learned adapter that maps f_gpt to
// the encoder width when the two backbones differ.
class FusionLayer {
 public:
  struct Cache {
    std::vector<double> f_code;
    std::vector<double> f_gpt_raw;  // before the adapter
    std::vector<double> f_gpt;      // after the adapter
    double alpha = 0.5;
  };
  struct InputGrads {
    std::vector<double> d_code;
    std::vector<double> d_gpt;  // w.r.t. the raw generator feature
  };

  FusionLayer() = default;
  FusionLayer(FusionMode mode, std::size_t encoder_width, std::size_t generator_width, Rng& rng);

  FusionMode mode() const noexcept { return mode_; }
  bool has_adapter() const noexcept { return adapter_.has_value(); }
  FusionWeight& weight() noexcept { return weight_; }
  const FusionWeight& weight() const noexcept { return weight_; }
  GateParams& gate() noexcept { return gate_; }
  const GateParams& gate() const noexcept { return gate_; }

  // f_gpt mapped to the encoder width (identity without an adapter).
  std::vector<double> adapt(std::span<const double> f_gpt) const;

  FusedFeatures forward(std::span<const double> f_code, std::span<const double> f_gpt,
                        Cache* cache = nullptr) const;
  InputGrads backward(const Cache& cache, std::span<const double> d_fused);
  // Parameters of the active mode (rho, or u and c) plus the adapter.
  void collect(ParameterRefs& out);

 private:
  FusionMode mode_ = FusionMode::static_weight;
  FusionWeight weight_;
  GateParams gate_;
  std::optional<Linear> adapter_;
};

}  // namespace hcc
