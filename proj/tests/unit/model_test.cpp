#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "hcc/attention.hpp"
#include "hcc/completion.hpp"
#include "hcc/corpus.hpp"
#include "hcc/errors.hpp"
#include "hcc/model.hpp"

using namespace hcc;

TEST_CASE("attention masks") {
  const auto causal = AttentionMask::causal(3);
  CHECK(causal.allowed(2, 0));
  CHECK_FALSE(causal.allowed(0, 1));
  const std::vector<TokenId> ids = {5, 0, 7};
  const auto pad = AttentionMask::key_padding(ids, 0);
  CHECK(pad.allowed(1, 0));
  CHECK_FALSE(pad.allowed(0, 1));
}

TEST_CASE("attention with uniform scores averages the values") {
  const Tensor q({2, 2}, 0.0);
  const Tensor k = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor v = Tensor::matrix(2, 1, {1.0, 3.0});
  const auto out = scaled_dot_product_attention(q, k, v);
  CHECK(out.output.at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(out.weights.at(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("fully masked query gets zero weights and output") {
  std::mt19937_64 r(1);
  const Tensor q = testutil::random_tensor({2, 3}, r);
  const Tensor k = testutil::random_tensor({2, 3}, r);
  const Tensor v = testutil::random_tensor({2, 3}, r);
  AttentionMask mask(2, 2, true);
  mask.set(0, 0, false);
  mask.set(0, 1, false);
  const auto out = scaled_dot_product_attention(q, k, v, &mask);
  for (std::size_t c = 0; c < 3; ++c) CHECK(out.output.at(0, c) == 0.0);
  CHECK(out.weights.at(0, 0) == 0.0);
  CHECK(out.weights.at(1, 0) + out.weights.at(1, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(scaled_dot_product_attention(q, k, testutil::random_tensor({3, 3}, r)),
                  DimensionError);
}

TEST_CASE("backbone config validation") {
  BackboneConfig c = testutil::tiny_config().encoder;
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.heads = 0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("generator is causal") {
  HybridModel model(testutil::tiny_config(), 7);
  const std::vector<TokenId> seq = {2, 6, 9, 12, 5, 7};
  const Tensor full = model.generator().features(seq);
  for (std::size_t t = 1; t <= seq.size(); ++t) {
    const Tensor part = model.generator().features(std::span(seq).first(t));
    CHECK(testutil::max_abs_diff(part.row(t - 1), full.row(t - 1)) < 1e-12);
  }
  const auto [f, state] = model.generator().forward(seq);
  CHECK(f.f_gpt == state.hidden);
  CHECK(testutil::max_abs_diff(f.f_gpt.values(), full.row(seq.size() - 1)) == 0.0);
}

TEST_CASE("encoder ignores trailing padding and handles empty prefixes") {
  HybridModel model(testutil::tiny_config(), 8);
  const std::vector<TokenId> a = {2, 6, 9};
  const std::vector<TokenId> b = {2, 6, 9, special::pad, special::pad};
  const auto fa = model.encoder().encode(a);
  const auto fb = model.encoder().encode(b);
  CHECK(fb.pooled_index == 2);
  CHECK(testutil::max_abs_diff(fa.pooled.values(), fb.pooled.values()) < 1e-12);
  const auto empty = model.encoder().encode({});
  const std::vector<TokenId> bos = {special::bos};
  CHECK(empty.pooled == model.encoder().encode(bos).pooled);
}

TEST_CASE("long prefixes keep the most recent tokens") {
  const std::vector<TokenId> ids = {1, 2, 3, 4, 5};
  CHECK(truncate_to_recent(ids, 3) == std::vector<TokenId>{3, 4, 5});
  CHECK(prepare_prefix({}, 4) == std::vector<TokenId>{special::bos});
  HybridModel model(testutil::tiny_config(), 9);
  std::vector<TokenId> longp(40, 7);
  const auto p = model.hybrid_distribution(longp);
  CHECK(std::abs(testutil::sum(p) - 1.0) < 1e-12);
}

TEST_CASE("static fusion arithmetic") {
  FusionWeight w;
  CHECK(w.alpha() == 0.5);
  const std::vector<double> code = {2, 0};
  const std::vector<double> gpt = {0, 2};
  const auto f = fuse_static(code, gpt, w);
  CHECK(f.fused[0] == 1.0);
  CHECK(f.fused[1] == 1.0);
  CHECK_THROWS_AS(fuse_static(code, std::vector<double>{1.0}, w), DimensionError);
  w.set_rho(40.0);
  CHECK(fuse_static(code, gpt, w).fused[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(-800.0) >= 0.0);
}

TEST_CASE("dynamic gate starts at one half") {
  GateParams g(2);
  const std::vector<double> code = {2, 0};
  const std::vector<double> gpt = {0, 2};
  const auto f = fuse_dynamic(code, gpt, g);
  CHECK(f.alpha == 0.5);
  CHECK(f.fused[0] == 1.0);
  g.u.value = Tensor::vector({1, 0, 0, 0});
  CHECK(fuse_dynamic(code, gpt, g).alpha == doctest::Approx(logistic(2.0)));
}

TEST_CASE("fusion mode names") {
  CHECK(parse_fusion_mode("static") == FusionMode::static_weight);
  CHECK(parse_fusion_mode("dynamic") == FusionMode::dynamic_gate);
  CHECK(fusion_mode_name(FusionMode::dynamic_gate) == "dynamic");
  CHECK_THROWS_AS(parse_fusion_mode("fusoin"), ArgumentError);
}

TEST_CASE("fusion boundaries select one path") {
  HybridModel model(testutil::tiny_config(), 10);
  const std::vector<TokenId> prefix = {2, 8, 11};
  model.fusion().weight().set_rho(40.0);
  const auto hi = model.hybrid_distribution(prefix);
  const auto enc = model.encoder_path_distribution(prefix);
  CHECK(testutil::max_abs_diff(hi, enc) < 1e-9);
  model.fusion().weight().set_rho(-40.0);
  const auto lo = model.hybrid_distribution(prefix);
  const auto gen = model.generator_path_distribution(prefix);
  CHECK(testutil::max_abs_diff(lo, gen) < 1e-9);
}

TEST_CASE("adapter appears when widths differ") {
  HybridConfig c = testutil::tiny_config();
  c.generator.d_model = 12;
  c.generator.heads = 3;
  HybridModel model(c, 11);
  CHECK(model.fusion().has_adapter());
  const std::vector<TokenId> prefix = {2, 3};
  CHECK(std::abs(testutil::sum(model.hybrid_distribution(prefix)) - 1.0) < 1e-12);
  HybridConfig bad = testutil::tiny_config();
  bad.generator.vocab_size = 17;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("parameter groups are disjoint and uniquely named") {
  HybridModel model(testutil::tiny_config(FusionMode::dynamic_gate), 12);
  std::set<std::string> names;
  std::size_t bytes = 0;
  for (Parameter* p : model.parameters()) {
    CHECK(names.insert(p->name).second);
    bytes += p->value.bytes();
  }
  CHECK(bytes == model.parameter_bytes());
  CHECK(names.contains("fusion.gate.u"));
  CHECK_FALSE(names.contains("fusion.rho"));
  CHECK(model.parameters().size() ==
        model.encoder_parameters().size() + model.encoder_head_parameters().size() +
            model.generator_parameters().size() + model.fusion_parameters().size() +
            model.head_parameters().size());
}

TEST_CASE("same seed, same model") {
  HybridModel a(testutil::tiny_config(), 5);
  HybridModel b(testutil::tiny_config(), 5);
  HybridModel c(testutil::tiny_config(), 6);
  CHECK(a.snapshot() == b.snapshot());
  CHECK(a.snapshot() != c.snapshot());
}

namespace {

// Always puts its mass on `target`, EOS after `eos_after` calls of context growth.
class Scripted final : public NextTokenModel {
 public:
  Scripted(std::size_t vocab, std::size_t eos_at) : vocab_(vocab), eos_at_(eos_at) {}
  std::string name() const override { return "scripted"; }
  std::vector<double> distribution(std::span<const TokenId> prefix) const override {
    std::vector<double> p(vocab_, 0.0);
    p[prefix.size() >= eos_at_ ? special::eos : 7] = 1.0;
    return p;
  }
  std::size_t parameter_bytes() const override { return 0; }

 private:
  std::size_t vocab_;
  std::size_t eos_at_;
};

class Flat final : public NextTokenModel {
 public:
  std::string name() const override { return "flat"; }
  std::vector<double> distribution(std::span<const TokenId>) const override {
    return std::vector<double>(10, 0.1);
  }
  std::size_t parameter_bytes() const override { return 0; }
};

}  // namespace

TEST_CASE("greedy generation stops after EOS") {
  const Scripted m(10, 4);
  const std::vector<TokenId> prompt = {2, 5};
  GenerateOptions o;
  o.max_new = 10;
  CHECK(generate(m, prompt, o) == std::vector<TokenId>{7, 7, special::eos});
  o.stop_at_eos = false;
  CHECK(generate(m, prompt, o).size() == 10);
  o.max_new = 1;
  CHECK(generate(m, prompt, o) == std::vector<TokenId>{7});
}

TEST_CASE("ties go to the lowest id; sampling is seeded") {
  const Flat m;
  const std::vector<TokenId> prompt = {2};
  CHECK(m.predict(prompt) == 0);
  GenerateOptions o;
  o.decoding = Decoding::temperature;
  o.temperature = 0.7;
  o.seed = 99;
  CHECK(generate(m, prompt, o) == generate(m, prompt, o));
  o.temperature = 0.0;
  CHECK_THROWS_AS(generate(m, prompt, o), ArgumentError);
}

TEST_CASE("bigram baseline counts with add-one smoothing") {
  const std::vector<std::vector<TokenId>> seqs = {{2, 5, 6, 3}, {2, 5, 5, 3}};
  const BigramBaseline b(8, seqs);
  const std::vector<TokenId> prefix = {2, 5};
  const auto p = b.distribution(prefix);
  // after 5: 6 once, 5 once, 3 once; 3 + 8 in the denominator
  CHECK(p[6] == doctest::Approx(2.0 / 11.0));
  CHECK(p[0] == doctest::Approx(1.0 / 11.0));
  CHECK(std::abs(testutil::sum(p) - 1.0) < 1e-12);
}
