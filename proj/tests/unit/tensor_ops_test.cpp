#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "hcc/errors.hpp"
#include "hcc/kernels.hpp"
#include "hcc/ops.hpp"

using namespace hcc;

TEST_CASE("tensor shapes and rows") {
  Tensor v = Tensor::vector({1, 2, 3});
  CHECK(v.rows() == 1);
  CHECK(v.cols() == 3);
  Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rows() == 2);
  CHECK(m.at(1, 2) == 6);
  CHECK(m.row(1)[0] == 4);
  CHECK(shape_string(m.shape()) == "[2x3]");
  Tensor z({2, 2}, 1.5);
  z.fill(0.0);
  CHECK(z == Tensor({2, 2}, 0.0));
  z[0] = std::nan("");
  CHECK_FALSE(z.all_finite());
}

TEST_CASE("matmul against hand values") {
  const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor b = Tensor::matrix(2, 2, {5, 6, 7, 8});
  const Tensor c = matmul(a, b);
  CHECK(c == Tensor::matrix(2, 2, {19, 22, 43, 50}));
  const Tensor ct = matmul_transposed(a, b);
  CHECK(ct == Tensor::matrix(2, 2, {17, 23, 39, 53}));
  CHECK_THROWS_AS(matmul(a, Tensor::matrix(3, 1, {1, 2, 3})), DimensionError);
}

TEST_CASE("matmul backward matches explicit transposes") {
  std::mt19937_64 rng(3);
  const Tensor a = testutil::random_tensor({3, 4}, rng);
  const Tensor b = testutil::random_tensor({4, 5}, rng);
  const Tensor dc = testutil::random_tensor({3, 5}, rng);
  const auto g = matmul_backward(a, b, dc);
  // da = dc b^T, db = a^T dc, computed by loops
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) s += dc.at(i, j) * b.at(k, j);
      CHECK(g.da.at(i, k) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += a.at(i, k) * dc.at(i, j);
      CHECK(g.db.at(k, j) == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax is stable and normalized") {
  const auto p = softmax(std::vector<double>{1e4, 0.0, -1e4});
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(std::abs(testutil::sum(p) - 1.0) < 1e-12);
  const auto q = softmax(std::vector<double>{0.0, std::log(3.0)});
  CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("layer norm output has zero mean, unit variance") {
  std::mt19937_64 rng(5);
  const Tensor x = testutil::random_tensor({3, 6}, rng, 4.0);
  const Tensor y = layer_norm(x, Tensor({6}, 1.0), Tensor({6}, 0.0), 1e-12);
  for (std::size_t r = 0; r < 3; ++r) {
    double mean = 0.0, var = 0.0;
    for (double v : y.row(r)) mean += v;
    mean /= 6;
    for (double v : y.row(r)) var += (v - mean) * (v - mean);
    var /= 6;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("gelu reference points and tanh cache") {
  const Tensor x = Tensor::vector({-3.0, -0.5, 0.0, 0.5, 3.0});
  Tensor th;
  const Tensor y = gelu(x, &th);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double ref = 0.5 * v * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (v + 0.044715 * v * v * v)));
    CHECK(y[i] == doctest::Approx(ref).epsilon(1e-15));
  }
  const Tensor dy({5}, 1.0);
  CHECK(gelu_backward(x, dy, &th) == gelu_backward(x, dy));
  CHECK_THROWS_AS(gelu_backward(x, Tensor({4}, 1.0)), DimensionError);
}

TEST_CASE("cross entropy and its logits gradient") {
  const std::vector<double> p = {0.25, 0.25, 0.25, 0.25};
  CHECK(cross_entropy(p, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cross_entropy(p, 4), LabelError);
  CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5, 0.6}, 0), ArgumentError);
  const auto g = cross_entropy_logits_grad(p, 1);
  CHECK(g[1] == doctest::Approx(-0.75));
  CHECK(g[0] == doctest::Approx(0.25));
  // floored probability: constant loss, zero gradient
  const std::vector<double> q = {1.0, 0.0};
  CHECK(cross_entropy(q, 1) == doctest::Approx(-std::log(kLogFloor)));
  const auto gq = cross_entropy_logits_grad(q, 1);
  CHECK(gq[0] == 0.0);
  CHECK(gq[1] == 0.0);
}

TEST_CASE("gradient checker flags a wrong gradient") {
  Parameter w("w", Tensor::vector({0.3, -0.7}));
  Differentiable fn;
  fn.parameters = {&w};
  fn.loss = [&] { return w.value[0] * w.value[0] + 3.0 * w.value[1]; };
  fn.loss_and_grad = [&] {
    w.grad[0] += 2.0 * w.value[0];
    w.grad[1] += 2.0;  // should be 3
    return fn.loss();
  };
  const auto report = check_gradients(fn, 1e-4, 1e-4);
  CHECK_FALSE(report.passed());
  REQUIRE(report.flagged.size() == 1);
  CHECK(report.flagged[0].index == 1);
}

// -- kernels -----------------------------------------------------------------

TEST_CASE("kernel variants agree") {
  const auto isas = kernels::available();
  REQUIRE_FALSE(isas.empty());
  const kernels::KernelSet& ref = kernels::scalar_set();
  const kernels::KernelSet* simd = kernels::avx2_set();
  if (simd == nullptr || !kernels::cpu_supports(kernels::Isa::avx2)) {
    MESSAGE("AVX2 not available; only the scalar kernels ran");
    return;
  }
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t m : {1u, 3u, 7u}) {
    for (std::size_t k : {1u, 4u, 5u, 13u, 64u}) {
      for (std::size_t nn : {1u, 2u, 5u, 8u, 17u}) {
        std::vector<double> a(m * k), b(k * nn), bt(nn * k), am(m * nn);
        for (auto* v : {&a, &b, &bt, &am}) {
          for (double& x : *v) x = n(rng);
        }
        std::vector<double> c1(m * nn, 0.5), c2(m * nn, 0.5);
        ref.gemm_nn(a.data(), b.data(), c1.data(), m, k, nn);
        simd->gemm_nn(a.data(), b.data(), c2.data(), m, k, nn);
        CHECK(testutil::max_abs_diff(c1, c2) < 1e-12);

        std::fill(c1.begin(), c1.end(), 0.0);
        std::fill(c2.begin(), c2.end(), 0.0);
        ref.gemm_nt(a.data(), bt.data(), c1.data(), m, k, nn);
        simd->gemm_nt(a.data(), bt.data(), c2.data(), m, k, nn);
        CHECK(testutil::max_abs_diff(c1, c2) < 1e-12);

        std::vector<double> d1(k * nn, 0.0), d2(k * nn, 0.0);
        ref.gemm_tn(a.data(), am.data(), d1.data(), m, k, nn);
        simd->gemm_tn(a.data(), am.data(), d2.data(), m, k, nn);
        CHECK(testutil::max_abs_diff(d1, d2) < 1e-12);
      }
      std::vector<double> x(m * k);
      for (double& v : x) v = n(rng);
      const double r = ref.dot(x.data(), x.data(), x.size());
      const double s = simd->dot(x.data(), x.data(), x.size());
      CHECK(std::abs(r - s) <= 1e-12 * std::max(1.0, std::abs(r)));
      std::vector<double> y1(x.size(), 1.0), y2(x.size(), 1.0);
      ref.axpy(0.3, x.data(), y1.data(), x.size());
      simd->axpy(0.3, x.data(), y2.data(), x.size());
      CHECK(testutil::max_abs_diff(y1, y2) < 1e-15);
    }
  }
}

TEST_CASE("single row equals the same row of a larger product") {
  std::mt19937_64 rng(2);
  const Tensor a = testutil::random_tensor({6, 37}, rng);
  const Tensor b = testutil::random_tensor({37, 9}, rng);
  const Tensor full = matmul(a, b);
  for (std::size_t r = 0; r < 6; ++r) {
    Tensor one({1, 37});
    std::copy(a.row(r).begin(), a.row(r).end(), one.values().begin());
    const Tensor part = matmul(one, b);
    for (std::size_t c = 0; c < 9; ++c) CHECK(part.at(0, c) == full.at(r, c));
  }
}

TEST_CASE("kernel selection") {
  const auto before = kernels::active().isa;
  kernels::select(kernels::Isa::scalar);
  CHECK(kernels::active().isa == kernels::Isa::scalar);
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
  if (!kernels::cpu_supports(kernels::Isa::avx2)) {
    CHECK_THROWS_AS(kernels::select(kernels::Isa::avx2), ArgumentError);
  }
  kernels::select(before);
}
