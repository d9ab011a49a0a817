#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hcc/model.hpp"
#include "hcc/tensor.hpp"

namespace testutil {

inline hcc::Tensor random_tensor(hcc::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  hcc::Tensor t(std::move(shape));
  for (double& v : t.values()) v = n(rng);
  return t;
}

inline double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// 1 layer per backbone, d_model 8, 2 heads, V = 16.
inline hcc::HybridConfig tiny_config(hcc::FusionMode mode = hcc::FusionMode::static_weight) {
  hcc::HybridConfig c;
  for (hcc::BackboneConfig* b : {&c.encoder, &c.generator}) {
    b->layers = 1;
    b->d_model = 8;
    b->heads = 2;
    b->ff_width = 16;
    b->max_len = 16;
    b->vocab_size = 16;
  }
  c.fusion = mode;
  return c;
}

}  // namespace testutil
