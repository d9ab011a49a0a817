#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "hcc/ops.hpp"
#include "hcc/tensor.hpp"

namespace hcc {

using TokenId = std::int32_t;
using Rng = std::mt19937_64;

// Normal(0, stddev) fill, used for every weight initialization.
Tensor random_normal(Shape shape, double stddev, Rng& rng);

// y = x * weight + bias, weight [in x out].
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  std::size_t in_features() const noexcept { return weight.value.rows(); }
  std::size_t out_features() const noexcept { return weight.value.cols(); }

  Tensor forward(const Tensor& x) const;
  // Accumulates weight/bias gradients and returns dx.
  Tensor backward(const Tensor& x, const Tensor& dy);
  void collect(ParameterRefs& out) { out.push_back(&weight); out.push_back(&bias); }
};

struct LayerNorm {
  Parameter gain;
  Parameter bias;
  double eps = 1e-5;

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t width);

  Tensor forward(const Tensor& x, LayerNormCache* cache) const;
  Tensor backward(const LayerNormCache& cache, const Tensor& dy);
  void collect(ParameterRefs& out) { out.push_back(&gain); out.push_back(&bias); }
};

// Row lookup table [count x width].
struct Embedding {
  Parameter table;

  Embedding() = default;
  Embedding(const std::string& name, std::size_t count, std::size_t width, double stddev, Rng& rng);

  std::size_t count() const noexcept { return table.value.rows(); }
  std::size_t width() const noexcept { return table.value.cols(); }

  // Adds row `index` to `dst`.
  void add_row_to(std::size_t index, std::span<double> dst) const;
  // Accumulates `grad` into row `index` of the table gradient.
  void accumulate(std::size_t index, std::span<const double> grad);
  void collect(ParameterRefs& out) { out.push_back(&table); }
};

}  // namespace hcc
