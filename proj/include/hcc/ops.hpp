#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hcc/tensor.hpp"

namespace hcc {

// Lower bound applied to probabilities before taking a logarithm.
inline constexpr double kLogFloor = 1e-12;

// -- matrix products ---------------------------------------------------------

// [m x k] * [k x n]. Rank-1 operands are treated as a single row.
Tensor matmul(const Tensor& a, const Tensor& b);
// [m x k] * [n x k]^T
Tensor matmul_transposed(const Tensor& a, const Tensor& b);

struct MatmulGrads {
  Tensor da;
  Tensor db;
};
MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dc);

// -- elementwise / row-wise ---------------------------------------------------

void add_inplace(Tensor& y, const Tensor& x);          // y += x, same shape
void add_row_inplace(Tensor& y, const Tensor& bias);   // y[r, :] += bias
void accumulate_column_sums(const Tensor& dy, Tensor& dbias);  // dbias += sum_r dy[r, :]

// Numerically stable softmax of one row (max subtraction).
std::vector<double> softmax(std::span<const double> logits);
Tensor softmax_rows(const Tensor& x);
// dx given y = softmax_rows(x) and dy.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy);

struct LayerNormCache {
  Tensor normalized;            // (x - mean) * inv_std, per row
  std::vector<double> inv_std;  // one per row
};

// Row-wise normalization followed by gain/bias. `cache` may be null.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                       LayerNormCache* cache = nullptr);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

struct LayerNormGrads {
  Tensor dx;
  Tensor dgain;
  Tensor dbias;
};
LayerNormGrads layer_norm_rows_backward(const LayerNormCache& cache, const Tensor& gain,
                                        const Tensor& dy);

// tanh approximation. `tanh_out` optionally receives the inner tanh values,
// which gelu_backward can reuse instead of recomputing.
Tensor gelu(const Tensor& x, Tensor* tanh_out = nullptr);
Tensor gelu_backward(const Tensor& x, const Tensor& dy, const Tensor* tanh_in = nullptr);

// -- loss --------------------------------------------------------------------

// -ln(max(probs[label], kLogFloor)). Throws LabelError for an out-of-range
// label and ArgumentError when probs is not normalized within 1e-6.
double cross_entropy(std::span<const double> probs, std::size_t label);

// d loss / d logits for loss = cross_entropy(softmax(logits), label).
// Zero where the floor is active, since the loss is then constant.
std::vector<double> cross_entropy_logits_grad(std::span<const double> probs, std::size_t label);

// -- gradient checking -------------------------------------------------------

struct GradientCheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  struct PerParameter {
    std::string name;
    double max_relative_error = 0.0;
  };
  std::vector<PerParameter> parameters;
  std::vector<GradientCheckEntry> flagged;  // entries above tolerance
  double max_relative_error = 0.0;

  bool passed() const noexcept { return flagged.empty(); }
};

// Scalar-valued function of the parameters. `loss_and_grad` accumulates
// analytic gradients into each Parameter::grad (the checker zeroes them first)
// and returns the loss; `loss` only evaluates.
struct Differentiable {
  ParameterRefs parameters;
  std::function<double()> loss;
  std::function<double()> loss_and_grad;
};

// Compares analytic gradients with central differences
// (f(theta + eps) - f(theta - eps)) / (2 eps), entry by entry. The relative
// error is |a - n| / max(|a| + |n|, 1e-6). Throws DeterminismError when two
// evaluations at the same point disagree.
GradientCheckReport check_gradients(const Differentiable& fn, double eps, double tol);

}  // namespace hcc
