#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "hcc/attention.hpp"
#include "hcc/model.hpp"
#include "hcc/ops.hpp"

using namespace hcc;

namespace {

constexpr double kEps = 1e-4;
constexpr double kTol = 1e-4;

void require_pass(const GradientCheckReport& r) {
  for (const auto& f : r.flagged) {
    MESSAGE(f.parameter << "[" << f.index << "] analytic " << f.analytic << " numeric "
                        << f.numeric);
  }
  CHECK(r.passed());
  CHECK(r.max_relative_error < kTol);
}

// Weighted sum with fixed random coefficients turns a tensor output into a scalar.
struct Projection {
  Tensor w;
  double operator()(const Tensor& y) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  }
};

}  // namespace

TEST_CASE("linear layer gradients") {
  Rng rng(1);
  Linear lin("lin", 5, 3, rng);
  std::mt19937_64 r(2);
  Parameter x("x", testutil::random_tensor({4, 5}, r));
  const Projection proj{testutil::random_tensor({4, 3}, r)};
  Differentiable fn;
  fn.parameters = {&lin.weight, &lin.bias, &x};
  fn.loss = [&] { return proj(lin.forward(x.value)); };
  fn.loss_and_grad = [&] {
    const Tensor y = lin.forward(x.value);
    const Tensor dx = lin.backward(x.value, proj.w);
    add_inplace(x.grad, dx);
    return proj(y);
  };
  require_pass(check_gradients(fn, kEps, kTol));
}

TEST_CASE("layer norm gradients") {
  std::mt19937_64 r(3);
  LayerNorm ln("ln", 6);
  ln.gain.value = testutil::random_tensor({6}, r);
  ln.bias.value = testutil::random_tensor({6}, r);
  Parameter x("x", testutil::random_tensor({3, 6}, r));
  const Projection proj{testutil::random_tensor({3, 6}, r)};
  Differentiable fn;
  fn.parameters = {&ln.gain, &ln.bias, &x};
  fn.loss = [&] { return proj(ln.forward(x.value, nullptr)); };
  fn.loss_and_grad = [&] {
    LayerNormCache cache;
    const Tensor y = ln.forward(x.value, &cache);
    add_inplace(x.grad, ln.backward(cache, proj.w));
    return proj(y);
  };
  require_pass(check_gradients(fn, kEps, kTol));
}

TEST_CASE("softmax and gelu gradients") {
  std::mt19937_64 r(4);
  Parameter x("x", testutil::random_tensor({3, 5}, r));
  const Projection proj{testutil::random_tensor({3, 5}, r)};
  Differentiable sm;
  sm.parameters = {&x};
  sm.loss = [&] { return proj(softmax_rows(x.value)); };
  sm.loss_and_grad = [&] {
    const Tensor y = softmax_rows(x.value);
    add_inplace(x.grad, softmax_rows_backward(y, proj.w));
    return proj(y);
  };
  require_pass(check_gradients(sm, kEps, kTol));

  Differentiable g;
  g.parameters = {&x};
  g.loss = [&] { return proj(gelu(x.value)); };
  g.loss_and_grad = [&] {
    Tensor th;
    const Tensor y = gelu(x.value, &th);
    add_inplace(x.grad, gelu_backward(x.value, proj.w, &th));
    return proj(y);
  };
  require_pass(check_gradients(g, kEps, kTol));
}

TEST_CASE("scaled dot-product attention gradients, causal") {
  std::mt19937_64 r(5);
  Parameter q("q", testutil::random_tensor({4, 3}, r));
  Parameter k("k", testutil::random_tensor({4, 3}, r));
  Parameter v("v", testutil::random_tensor({4, 2}, r));
  const Projection proj{testutil::random_tensor({4, 2}, r)};
  const AttentionMask mask = AttentionMask::causal(4);
  Differentiable fn;
  fn.parameters = {&q, &k, &v};
  fn.loss = [&] { return proj(scaled_dot_product_attention(q.value, k.value, v.value, &mask).output); };
  fn.loss_and_grad = [&] {
    const auto out = scaled_dot_product_attention(q.value, k.value, v.value, &mask);
    const auto g = scaled_dot_product_attention_backward(q.value, k.value, v.value, out.weights, proj.w);
    add_inplace(q.grad, g.dq);
    add_inplace(k.grad, g.dk);
    add_inplace(v.grad, g.dv);
    return proj(out.output);
  };
  require_pass(check_gradients(fn, kEps, kTol));
}

TEST_CASE("transformer layer gradients") {
  Rng rng(6);
  BackboneConfig cfg = testutil::tiny_config().encoder;
  TransformerLayer layer("layer", cfg, rng);
  std::mt19937_64 r(7);
  Parameter x("x", testutil::random_tensor({5, 8}, r));
  const Projection proj{testutil::random_tensor({5, 8}, r)};
  const AttentionMask mask = AttentionMask::causal(5);
  Differentiable fn;
  layer.collect(fn.parameters);
  fn.parameters.push_back(&x);
  fn.loss = [&] { return proj(layer.forward(x.value, &mask, nullptr)); };
  fn.loss_and_grad = [&] {
    TransformerLayer::Cache cache;
    const Tensor y = layer.forward(x.value, &mask, &cache);
    add_inplace(x.grad, layer.backward(cache, proj.w));
    return proj(y);
  };
  require_pass(check_gradients(fn, kEps, kTol));
}

TEST_CASE("hybrid model gradients, every parameter") {
  for (FusionMode mode : {FusionMode::static_weight, FusionMode::dynamic_gate}) {
    CAPTURE(fusion_mode_name(mode));
    HybridModel model(testutil::tiny_config(mode), 42);
    if (mode == FusionMode::dynamic_gate) {
      std::mt19937_64 r(8);
      model.fusion().gate().u.value = testutil::random_tensor({16}, r, 0.3);
    }
    const std::vector<TokenId> prefix = {2, 7, 9, 5, 11};
    const TokenId label = 6;
    Differentiable fn;
    fn.parameters = model.parameters();
    fn.loss = [&] { return -std::log(model.hybrid_distribution(prefix)[label]); };
    fn.loss_and_grad = [&] { return model.hybrid_loss_backward(prefix, label, 1.0); };
    const auto report = check_gradients(fn, kEps, kTol);
    require_pass(report);
    CHECK(report.parameters.size() == fn.parameters.size());
  }
}

TEST_CASE("single-backbone paths and fusion-only gradients") {
  HybridModel model(testutil::tiny_config(), 43);
  const std::vector<TokenId> prefix = {2, 9, 4, 13};
  const TokenId label = 10;

  Differentiable enc;
  enc.parameters = model.encoder_parameters();
  for (Parameter* p : model.encoder_head_parameters()) enc.parameters.push_back(p);
  enc.loss = [&] { return -std::log(model.encoder_only_distribution(prefix)[label]); };
  enc.loss_and_grad = [&] { return model.encoder_only_loss_backward(prefix, label, 1.0); };
  require_pass(check_gradients(enc, kEps, kTol));

  Differentiable gen;
  gen.parameters = model.generator_parameters();
  gen.loss = [&] { return -std::log(model.generator_only_distribution(prefix)[label]); };
  gen.loss_and_grad = [&] { return model.generator_only_loss_backward(prefix, label, 1.0); };
  require_pass(check_gradients(gen, kEps, kTol));

  const auto f_code = model.encoder().encode(prefix).pooled;
  const auto [gf, state] = model.generator().forward(prefix);
  Differentiable fus;
  fus.parameters = model.fusion_parameters();
  for (Parameter* p : model.head_parameters()) fus.parameters.push_back(p);
  fus.loss = [&] {
    const auto fused = model.fusion().forward(f_code.values(), gf.f_gpt.values());
    return -std::log(next_token_distribution(fused.fused.values(), model.head())[label]);
  };
  fus.loss_and_grad = [&] {
    return model.fusion_loss_backward(f_code.values(), gf.f_gpt.values(), label, 1.0);
  };
  require_pass(check_gradients(fus, kEps, kTol));
}

TEST_CASE("loss scale multiplies gradients") {
  HybridModel a(testutil::tiny_config(), 44);
  HybridModel b(testutil::tiny_config(), 44);
  const std::vector<TokenId> prefix = {2, 5, 6};
  a.hybrid_loss_backward(prefix, 7, 1.0);
  b.hybrid_loss_backward(prefix, 7, 0.25);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t j = 0; j < pa[i]->grad.size(); ++j) {
      CHECK(pb[i]->grad[j] == doctest::Approx(0.25 * pa[i]->grad[j]).epsilon(1e-12));
    }
  }
}
