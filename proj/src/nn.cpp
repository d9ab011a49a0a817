#include "hcc/nn.hpp"

#include <cmath>

#include "hcc/errors.hpp"
#include "hcc/kernels.hpp"

namespace hcc {

Tensor random_normal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(name + ".weight", random_normal({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
      bias(name + ".bias", Tensor({out}, 0.0)) {}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = matmul(x, weight.value);
  add_row_inplace(y, bias.value);
  return y;
}

Tensor Linear::backward(const Tensor& x, const Tensor& dy) {
  if (dy.cols() != out_features() || dy.rows() != x.rows()) {
    throw DimensionError("linear backward: gradient " + shape_string(dy.shape()) +
                         " for input " + shape_string(x.shape()));
  }
  const auto& k = kernels::active();
  k.gemm_tn(x.data(), dy.data(), weight.grad.data(), x.rows(), x.cols(), dy.cols());
  accumulate_column_sums(dy, bias.grad);
  Tensor dx(x.shape());
  k.gemm_nt(dy.data(), weight.value.data(), dx.data(), dy.rows(), dy.cols(), in_features());
  return dx;
}

LayerNorm::LayerNorm(const std::string& name, std::size_t width)
    : gain(name + ".gain", Tensor({width}, 1.0)), bias(name + ".bias", Tensor({width}, 0.0)) {}

Tensor LayerNorm::forward(const Tensor& x, LayerNormCache* cache) const {
  return layer_norm_rows(x, gain.value, bias.value, eps, cache);
}

Tensor LayerNorm::backward(const LayerNormCache& cache, const Tensor& dy) {
  LayerNormGrads g = layer_norm_rows_backward(cache, gain.value, dy);
  add_inplace(gain.grad, g.dgain);
  add_inplace(bias.grad, g.dbias);
  return std::move(g.dx);
}

Embedding::Embedding(const std::string& name, std::size_t count, std::size_t width, double stddev,
                     Rng& rng)
    : table(name, random_normal({count, width}, stddev, rng)) {}

void Embedding::add_row_to(std::size_t index, std::span<double> dst) const {
  if (index >= count()) {
    throw DimensionError("embedding index " + std::to_string(index) + " out of range for " +
                         std::to_string(count()) + " rows");
  }
  kernels::active().axpy(1.0, table.value.row(index).data(), dst.data(), width());
}

void Embedding::accumulate(std::size_t index, std::span<const double> grad) {
  kernels::active().axpy(1.0, grad.data(), table.grad.row(index).data(), width());
}

}  // namespace hcc
