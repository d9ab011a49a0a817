#include "hcc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hcc/errors.hpp"
#include "hcc/kernels.hpp"

namespace hcc {

namespace {

Shape result_shape(const Tensor& a, std::size_t n) {
  if (a.rank() == 1) return {n};
  return {a.rows(), n};
}

void require_matrix_like(const Tensor& t, const char* op) {
  if (t.rank() != 1 && t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a vector or matrix, got " +
                         shape_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix_like(a, "matmul");
  if (b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  Tensor c(result_shape(a, b.cols()));
  kernels::active().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  require_matrix_like(a, "matmul_transposed");
  require_matrix_like(b, "matmul_transposed");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_transposed: cannot multiply " + shape_string(a.shape()) +
                         " by transpose of " + shape_string(b.shape()));
  }
  Tensor c(result_shape(a, b.rows()));
  kernels::active().gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
  return c;
}

MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dc) {
  if (dc.rows() != a.rows() || dc.cols() != b.cols()) {
    throw DimensionError("matmul_backward: gradient " + shape_string(dc.shape()) +
                         " does not match product of " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  MatmulGrads g{Tensor(a.shape()), Tensor(b.shape())};
  const auto& k = kernels::active();
  // da = dc * b^T, db = a^T * dc
  k.gemm_nt(dc.data(), b.data(), g.da.data(), dc.rows(), dc.cols(), b.rows());
  k.gemm_tn(a.data(), dc.data(), g.db.data(), a.rows(), a.cols(), dc.cols());
  return g;
}

void add_inplace(Tensor& y, const Tensor& x) {
  if (y.size() != x.size()) {
    throw DimensionError("add: shape " + shape_string(y.shape()) + " vs " + shape_string(x.shape()));
  }
  kernels::active().axpy(1.0, x.data(), y.data(), y.size());
}

void add_row_inplace(Tensor& y, const Tensor& bias) {
  if (bias.size() != y.cols()) {
    throw DimensionError("add_row: bias " + shape_string(bias.shape()) + " vs rows of " +
                         shape_string(y.shape()));
  }
  for (std::size_t r = 0; r < y.rows(); ++r) {
    kernels::active().axpy(1.0, bias.data(), y.row(r).data(), y.cols());
  }
}

void accumulate_column_sums(const Tensor& dy, Tensor& dbias) {
  if (dbias.size() != dy.cols()) {
    throw DimensionError("column_sums: " + shape_string(dbias.shape()) + " vs " +
                         shape_string(dy.shape()));
  }
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const auto row = dy.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) dbias[c] += row[c];
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto p = softmax(x.row(r));
    std::copy(p.begin(), p.end(), y.row(r).begin());
  }
  return y;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx(y.shape());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const auto yr = y.row(r);
    const auto gr = dy.row(r);
    double inner = 0.0;
    for (std::size_t c = 0; c < yr.size(); ++c) inner += yr[c] * gr[c];
    auto out = dx.row(r);
    for (std::size_t c = 0; c < yr.size(); ++c) out[c] = yr[c] * (gr[c] - inner);
  }
  return dx;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                       LayerNormCache* cache) {
  const std::size_t d = x.cols();
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm: input " + shape_string(x.shape()) + " with gain " +
                         shape_string(gain.shape()) + " and bias " + shape_string(bias.shape()));
  }
  Tensor y(x.shape());
  Tensor normalized(x.shape());
  std::vector<double> inv_stds(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    inv_stds[r] = inv_std;
    auto nrow = normalized.row(r);
    auto yrow = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      nrow[c] = (row[c] - mean) * inv_std;
      yrow[c] = nrow[c] * gain[c] + bias[c];
    }
  }
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_stds);
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  return layer_norm_rows(x, gain, bias, eps, nullptr);
}

LayerNormGrads layer_norm_rows_backward(const LayerNormCache& cache, const Tensor& gain,
                                        const Tensor& dy) {
  const Tensor& xhat = cache.normalized;
  const std::size_t d = xhat.cols();
  const double inv_d = 1.0 / static_cast<double>(d);
  LayerNormGrads g{Tensor(xhat.shape()), Tensor(gain.shape()), Tensor(gain.shape())};
  for (std::size_t r = 0; r < xhat.rows(); ++r) {
    const auto nrow = xhat.row(r);
    const auto grow = dy.row(r);
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double dxhat = grow[c] * gain[c];
      mean_dxhat += dxhat;
      mean_dxhat_xhat += dxhat * nrow[c];
      g.dgain[c] += grow[c] * nrow[c];
      g.dbias[c] += grow[c];
    }
    mean_dxhat *= inv_d;
    mean_dxhat_xhat *= inv_d;
    auto out = g.dx.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double dxhat = grow[c] * gain[c];
      out[c] = cache.inv_std[r] * (dxhat - mean_dxhat - nrow[c] * mean_dxhat_xhat);
    }
  }
  return g;
}

namespace {
constexpr double kGeluCoef = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
}  // namespace

namespace {
double gelu_tanh(double v) { return std::tanh(kSqrt2OverPi * (v + kGeluCoef * v * v * v)); }
}  // namespace

Tensor gelu(const Tensor& x, Tensor* tanh_out) {
  Tensor y(x.shape());
  if (tanh_out != nullptr) *tanh_out = Tensor(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double t = gelu_tanh(v);
    if (tanh_out != nullptr) (*tanh_out)[i] = t;
    y[i] = 0.5 * v * (1.0 + t);
  }
  return y;
}

Tensor gelu_backward(const Tensor& x, const Tensor& dy, const Tensor* tanh_in) {
  if (!dy.same_shape(x) || (tanh_in != nullptr && !tanh_in->same_shape(x))) {
    throw DimensionError("gelu backward: shapes differ");
  }
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double t = tanh_in != nullptr ? (*tanh_in)[i] : gelu_tanh(v);
    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoef * v * v);
    dx[i] = dy[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
  }
  return dx;
}

namespace {
void validate_distribution(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw LabelError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ArgumentError("cross_entropy: probabilities sum to " + std::to_string(sum));
  }
}
}  // namespace

double cross_entropy(std::span<const double> probs, std::size_t label) {
  validate_distribution(probs, label);
  return -std::log(std::max(probs[label], kLogFloor));
}

std::vector<double> cross_entropy_logits_grad(std::span<const double> probs, std::size_t label) {
  validate_distribution(probs, label);
  std::vector<double> g(probs.size(), 0.0);
  if (probs[label] <= kLogFloor) return g;
  std::copy(probs.begin(), probs.end(), g.begin());
  g[label] -= 1.0;
  return g;
}

GradientCheckReport check_gradients(const Differentiable& fn, double eps, double tol) {
  const double first = fn.loss();
  const double second = fn.loss();
  if (first != second) {
    throw DeterminismError("function under gradient check is not deterministic");
  }
  for (Parameter* p : fn.parameters) p->zero_grad();
  fn.loss_and_grad();

  GradientCheckReport report;
  for (Parameter* p : fn.parameters) {
    GradientCheckReport::PerParameter per{p->name, 0.0};
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double plus = fn.loss();
      p->value[i] = saved - eps;
      const double minus = fn.loss();
      p->value[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
      const double rel = std::abs(analytic - numeric) / denom;
      per.max_relative_error = std::max(per.max_relative_error, rel);
      if (rel > tol) report.flagged.push_back({p->name, i, analytic, numeric, rel});
    }
    report.max_relative_error = std::max(report.max_relative_error, per.max_relative_error);
    report.parameters.push_back(per);
  }
  return report;
}

}  // namespace hcc
