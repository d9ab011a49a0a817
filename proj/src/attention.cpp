#include "hcc/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hcc/errors.hpp"
#include "hcc/kernels.hpp"

namespace hcc {

AttentionMask::AttentionMask(std::size_t queries, std::size_t keys, bool fill)
    : queries_(queries), keys_(keys), bits_(queries * keys, fill ? 1 : 0) {}

AttentionMask AttentionMask::causal(std::size_t t) {
  AttentionMask m(t, t, false);
  for (std::size_t q = 0; q < t; ++q) {
    for (std::size_t k = 0; k <= q; ++k) m.set(q, k, true);
  }
  return m;
}

AttentionMask AttentionMask::key_padding(std::span<const TokenId> ids, TokenId pad) {
  AttentionMask m(ids.size(), ids.size(), true);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] != pad) continue;
    for (std::size_t q = 0; q < ids.size(); ++q) m.set(q, k, false);
  }
  return m;
}

AttentionOutput scaled_dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                             const AttentionMask* mask) {
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw DimensionError("attention: Q " + shape_string(q.shape()) + ", K " +
                         shape_string(k.shape()) + ", V " + shape_string(v.shape()));
  }
  const std::size_t tq = q.rows();
  const std::size_t tk = k.rows();
  if (mask != nullptr && (mask->queries() != tq || mask->keys() != tk)) {
    throw DimensionError("attention: mask " + std::to_string(mask->queries()) + "x" +
                         std::to_string(mask->keys()) + " for scores " + std::to_string(tq) +
                         "x" + std::to_string(tk));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const auto& kern = kernels::active();

  AttentionOutput out{Tensor({tq, v.cols()}), Tensor({tq, tk})};
  std::vector<double> scores(tk);
  for (std::size_t i = 0; i < tq; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tk; ++j) {
      if (mask != nullptr && !mask->allowed(i, j)) continue;
      scores[j] = kern.dot(q.row(i).data(), k.row(j).data(), q.cols()) * scale;
      mx = std::max(mx, scores[j]);
    }
    auto w = out.weights.row(i);
    if (mx == -std::numeric_limits<double>::infinity()) continue;  // fully masked
    double sum = 0.0;
    for (std::size_t j = 0; j < tk; ++j) {
      if (mask != nullptr && !mask->allowed(i, j)) continue;
      w[j] = std::exp(scores[j] - mx);
      sum += w[j];
    }
    for (std::size_t j = 0; j < tk; ++j) w[j] /= sum;
  }
  kern.gemm_nn(out.weights.data(), v.data(), out.output.data(), tq, tk, v.cols());
  return out;
}

AttentionGrads scaled_dot_product_attention_backward(const Tensor& q, const Tensor& k,
                                                     const Tensor& v, const Tensor& weights,
                                                     const Tensor& d_output) {
  const std::size_t tq = q.rows();
  const std::size_t tk = k.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const auto& kern = kernels::active();

  AttentionGrads g{Tensor(q.shape()), Tensor(k.shape()), Tensor(v.shape())};
  Tensor dweights({tq, tk});
  kern.gemm_nt(d_output.data(), v.data(), dweights.data(), tq, d_output.cols(), tk);
  kern.gemm_tn(weights.data(), d_output.data(), g.dv.data(), tq, tk, d_output.cols());

  Tensor dscores({tq, tk});
  for (std::size_t i = 0; i < tq; ++i) {
    const auto w = weights.row(i);
    const auto dw = dweights.row(i);
    const double inner = kern.dot(w.data(), dw.data(), tk);
    auto ds = dscores.row(i);
    for (std::size_t j = 0; j < tk; ++j) ds[j] = w[j] * (dw[j] - inner) * scale;
  }
  kern.gemm_nn(dscores.data(), k.data(), g.dq.data(), tq, tk, k.cols());
  kern.gemm_tn(dscores.data(), q.data(), g.dk.data(), tq, tk, q.cols());
  return g;
}

MultiHeadAttention::MultiHeadAttention(const std::string& name, std::size_t d_model,
                                       std::size_t h, Rng& rng)
    : heads(h),
      query(name + ".query", d_model, d_model, rng),
      key(name + ".key", d_model, d_model, rng),
      value(name + ".value", d_model, d_model, rng),
      output(name + ".output", d_model, d_model, rng) {
  if (h == 0 || d_model % h != 0) {
    throw ArgumentError("d_model " + std::to_string(d_model) + " is not divisible by " +
                        std::to_string(h) + " heads");
  }
}

namespace {

Tensor slice_columns(const Tensor& x, std::size_t begin, std::size_t width) {
  Tensor out({x.rows(), width});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto src = x.row(r).subspan(begin, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void write_columns(Tensor& dst, const Tensor& src, std::size_t begin) {
  for (std::size_t r = 0; r < src.rows(); ++r) {
    const auto row = src.row(r);
    std::copy(row.begin(), row.end(), dst.row(r).begin() + static_cast<std::ptrdiff_t>(begin));
  }
}

}  // namespace

Tensor MultiHeadAttention::forward(const Tensor& x, const AttentionMask* mask, Cache* cache) const {
  const std::size_t width = x.cols() / heads;
  Tensor q = query.forward(x);
  Tensor k = key.forward(x);
  Tensor v = value.forward(x);
  Tensor concat({x.rows(), x.cols()});
  std::vector<Tensor> weights;
  weights.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    AttentionOutput o = scaled_dot_product_attention(
        slice_columns(q, h * width, width), slice_columns(k, h * width, width),
        slice_columns(v, h * width, width), mask);
    write_columns(concat, o.output, h * width);
    weights.push_back(std::move(o.weights));
  }
  Tensor y = output.forward(concat);
  if (cache != nullptr) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->weights = std::move(weights);
    cache->concat = std::move(concat);
  }
  return y;
}

Tensor MultiHeadAttention::backward(const Cache& cache, const Tensor& dy) {
  const std::size_t width = cache.input.cols() / heads;
  Tensor dconcat = output.backward(cache.concat, dy);
  Tensor dq(cache.q.shape());
  Tensor dk(cache.k.shape());
  Tensor dv(cache.v.shape());
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t begin = h * width;
    AttentionGrads g = scaled_dot_product_attention_backward(
        slice_columns(cache.q, begin, width), slice_columns(cache.k, begin, width),
        slice_columns(cache.v, begin, width), cache.weights[h],
        slice_columns(dconcat, begin, width));
    write_columns(dq, g.dq, begin);
    write_columns(dk, g.dk, begin);
    write_columns(dv, g.dv, begin);
  }
  Tensor dx = query.backward(cache.input, dq);
  add_inplace(dx, key.backward(cache.input, dk));
  add_inplace(dx, value.backward(cache.input, dv));
  return dx;
}

void MultiHeadAttention::collect(ParameterRefs& out) {
  query.collect(out);
  key.collect(out);
  value.collect(out);
  output.collect(out);
}

}  // namespace hcc
