#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fusion.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cw;

namespace {

FusionModel zero_model(std::size_t hidden = 8) {
  FusionModel m = init_fusion_model(0, hidden);
  for (double& v : m.w_part.data) v = 0.0;
  for (double& v : m.w_proj.data) v = 0.0;
  for (double& v : m.w_hid.data) v = 0.0;
  for (double& v : m.w_out) v = 0.0;
  return m;
}

}  // namespace

TEST_CASE("zero bundle and zero parameters give logit 0 and p = 0.5") {
  const FusionModel m = zero_model();
  const EmbeddingBundle b = zero_bundle("z");
  const ForwardTrace t = forward(m, b);
  CHECK(t.logit == 0.0);
  CHECK(t.prob == 0.5);
}

TEST_CASE("an all-false mask reduces the projection to its bias") {
  Rng rng(21);
  const FusionModel m = testutil::random_model(21);
  EmbeddingBundle b = testutil::random_bundle(rng, 0, "nomask");
  const ForwardTrace t = forward(m, b);
  for (std::size_t i = 0; i < kCatDim; ++i) CHECK(t.mean_act[i] == 0.0);
  CHECK(t.projection == m.b_proj);
}

TEST_CASE("forward matches the straight-line oracle to 1e-12") {
  Rng rng(1234);
  for (int round = 0; round < 25; ++round) {
    const FusionModel m = testutil::random_model(1000 + round, 16 + round % 3);
    const EmbeddingBundle b = testutil::random_bundle(rng, rng.below(kMaxTriples + 1));
    const ForwardTrace t = forward(m, b);
    const double expected_logit = oracles::forward_logit(m, b);
    CHECK(std::abs(t.logit - expected_logit) <= 1e-12 * std::max(1.0, std::abs(expected_logit)));
    CHECK(std::abs(t.prob - oracles::forward_prob(m, b)) <= 1e-12);
    CHECK(t.prob > 0.0);
    CHECK(t.prob < 1.0);
  }
}

TEST_CASE("loss is binary cross-entropy with clamping") {
  const FusionModel m = zero_model();
  const EmbeddingBundle b = zero_bundle("z");
  CHECK(loss(m, b, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(loss(m, b, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  // A strongly confident model drives the loss to the clamp floor,
  // -log(1 - 1e-12) ~ 1e-12.
  FusionModel confident = zero_model();
  confident.b_out = 40.0;
  CHECK(loss(confident, b, 1) < 1.1e-12);
  CHECK(loss(confident, b, 1) >= 0.0);

  // Batch mean over two p = 0.5 samples with labels 0 and 1: ln 2.
  const std::vector<EmbeddingBundle> bundles = {b, b};
  const std::vector<int> labels = {0, 1};
  CHECK(mean_loss(m, bundles, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("backward: analytic head gradient at zero parameters") {
  const FusionModel m = zero_model();
  const EmbeddingBundle b = zero_bundle("z");
  const FusionGradients g = backward(m, b, 1);
  CHECK(g.b_out == doctest::Approx(-0.5).epsilon(1e-15));  // p - y
}

TEST_CASE("backward matches central finite differences on sampled coordinates") {
  Rng rng(99);
  for (int round = 0; round < 2; ++round) {
    FusionModel m = testutil::random_model(50 + round, 12);
    EmbeddingBundle b = testutil::random_bundle(rng, 2 + round);
    const int label = round % 2;
    const FusionGradients g = backward(m, b, label);
    const auto loss_fn = [&] { return loss(m, b, label); };

    double worst = 0.0;
    auto check_block = [&](std::vector<double>& params, const std::vector<double>& grads,
                           std::size_t samples) {
      for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t idx = rng.below(params.size());
        const double numeric = oracles::central_difference(loss_fn, params[idx]);
        worst = std::max(worst, oracles::gradient_mismatch(grads[idx], numeric));
      }
    };
    check_block(m.w_part.data, g.w_part.data, 12);
    check_block(m.b_part, g.b_part, 6);
    check_block(m.w_proj.data, g.w_proj.data, 12);
    check_block(m.b_proj, g.b_proj, 6);
    check_block(m.w_hid.data, g.w_hid.data, 12);
    check_block(m.b_hid, g.b_hid, 6);
    check_block(m.w_out, g.w_out, 6);
    const double numeric_bias = oracles::central_difference(loss_fn, m.b_out);
    worst = std::max(worst, oracles::gradient_mismatch(g.b_out, numeric_bias));

    // Inputs too: sentence vector and a valid triple slot.
    check_block(b.sentence_vec, g.inputs.sentence, 8);
    for (std::size_t s = 0; s < 8; ++s) {
      const std::size_t idx = rng.below(kPartsPerTriple * kPartDim);
      const double numeric = oracles::central_difference(loss_fn, b.triple_parts[idx]);
      worst = std::max(worst, oracles::gradient_mismatch(g.inputs.triple_parts[idx], numeric));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("masked slots receive exactly zero input gradient") {
  Rng rng(5);
  const FusionModel m = testutil::random_model(5);
  EmbeddingBundle b = testutil::random_bundle(rng, 2);
  // Plant nonzero values in a masked slot; the mask must still gate them.
  for (double& v : b.part(3, 0)) v = 0.7;
  const FusionGradients g = backward(m, b, 1);
  for (std::size_t p = 0; p < kPartsPerTriple; ++p) {
    const std::size_t offset = (3 * kPartsPerTriple + p) * kPartDim;
    for (std::size_t c = 0; c < kPartDim; ++c) {
      CHECK(g.inputs.triple_parts[offset + c] == 0.0);
    }
  }
}

TEST_CASE("init is seed-deterministic with Glorot bounds") {
  const FusionModel a = init_fusion_model(77, 256);
  const FusionModel b = init_fusion_model(77, 256);
  const FusionModel c = init_fusion_model(78, 256);
  CHECK(a.w_part.data == b.w_part.data);
  CHECK(a.w_hid.data == b.w_hid.data);
  CHECK(a.w_out == b.w_out);
  CHECK(a.w_part.data != c.w_part.data);

  CHECK(a.w_hid.rows == 256);
  CHECK(a.w_hid.cols == kConcatDim);
  CHECK(a.w_proj.rows == kSentenceDim);
  CHECK(a.w_proj.cols == kCatDim);

  const double bound_part = std::sqrt(6.0 / (kPartDim + kPartDim));
  for (double v : a.w_part.data) {
    CHECK(std::abs(v) <= bound_part);
  }
  for (double v : a.b_part) CHECK(v == 0.0);
  CHECK(a.b_out == 0.0);
}

TEST_CASE("permuting valid triples leaves the forward output unchanged") {
  Rng rng(31);
  const FusionModel m = testutil::random_model(31);
  EmbeddingBundle b = testutil::random_bundle(rng, 3);
  const double base = forward(m, b).logit;

  EmbeddingBundle permuted = b;
  // Rotate slots 0 <- 1 <- 2 <- 0.
  for (std::size_t p = 0; p < kPartsPerTriple; ++p) {
    std::copy(b.part(1, p).begin(), b.part(1, p).end(), permuted.part(0, p).begin());
    std::copy(b.part(2, p).begin(), b.part(2, p).end(), permuted.part(1, p).begin());
    std::copy(b.part(0, p).begin(), b.part(0, p).end(), permuted.part(2, p).begin());
  }
  CHECK(std::abs(forward(m, permuted).logit - base) < 1e-12);
}

TEST_CASE("duplicating one triple k times preserves the component means") {
  Rng rng(33);
  const FusionModel m = testutil::random_model(33);
  EmbeddingBundle one = testutil::random_bundle(rng, 1);
  const double base = forward(m, one).logit;
  for (std::size_t copies = 2; copies <= kMaxTriples; ++copies) {
    EmbeddingBundle duplicated = one;
    for (std::size_t i = 1; i < copies; ++i) {
      duplicated.mask[i] = true;
      for (std::size_t p = 0; p < kPartsPerTriple; ++p) {
        std::copy(one.part(0, p).begin(), one.part(0, p).end(),
                  duplicated.part(i, p).begin());
      }
    }
    CHECK(std::abs(forward(m, duplicated).logit - base) <
          1e-12 * std::max(1.0, std::abs(base)));
  }
}

TEST_CASE("subject, predicate and object share the part layer") {
  Rng rng(35);
  const FusionModel m = testutil::random_model(35);
  EmbeddingBundle b = zero_bundle("shared");
  b.mask[0] = true;
  b.mask[1] = true;
  Vector v(kPartDim);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  // The same vector as triple 0's subject and triple 1's object.
  std::copy(v.begin(), v.end(), b.part(0, 0).begin());
  std::copy(v.begin(), v.end(), b.part(1, 2).begin());

  const ForwardTrace t = forward(m, b);
  const std::size_t subject_offset = (0 * kPartsPerTriple + 0) * kPartDim;
  const std::size_t object_offset = (1 * kPartsPerTriple + 2) * kPartDim;
  for (std::size_t c = 0; c < kPartDim; ++c) {
    CHECK(t.part_act[subject_offset + c] == t.part_act[object_offset + c]);
  }
}

TEST_CASE("integrated gradients in linear-surrogate mode equals grad x (input - baseline)") {
  Rng rng(41);
  const FusionModel m = testutil::random_model(41, 16);
  const EmbeddingBundle b = testutil::random_bundle(rng, 2, "ig");
  const EmbeddingBundle base = zero_baseline_of(b);
  const ForwardMode linear{.linear_surrogate = true};

  const Attribution a = integrated_gradients(m, b, base, 8, linear);
  const InputGradients g = logit_input_gradients(m, b, linear);
  for (std::size_t i = 0; i < kSentenceDim; ++i) {
    CHECK(a.sentence[i] ==
          doctest::Approx((b.sentence_vec[i] - base.sentence_vec[i]) * g.sentence[i])
              .epsilon(1e-12));
  }
  // Exact completeness in the affine case.
  CHECK(a.total == doctest::Approx(a.logit_input - a.logit_baseline).epsilon(1e-12));
}

TEST_CASE("integrated gradients completeness within 1e-3 at 512 steps") {
  Rng rng(43);
  for (int round = 0; round < 3; ++round) {
    const FusionModel m = testutil::random_model(500 + round, 16);
    const EmbeddingBundle b = testutil::realistic_bundle(rng, 1 + rng.below(kMaxTriples));
    const Attribution a = integrated_gradients(m, b, zero_baseline_of(b), 512);
    CHECK(std::abs(a.total - (a.logit_input - a.logit_baseline)) < 1e-3);
  }
}

TEST_CASE("integrated gradients: masked slots get zero attribution") {
  Rng rng(47);
  const FusionModel m = testutil::random_model(47);
  const EmbeddingBundle b = testutil::random_bundle(rng, 2);
  const Attribution a = integrated_gradients(m, b, zero_baseline_of(b), 16);
  CHECK(a.per_triple[2] == 0.0);
  CHECK(a.per_triple[3] == 0.0);

  // Per-triple aggregates are the sums over their slots.
  double slot0 = 0.0;
  for (std::size_t j = 0; j < kCatDim; ++j) slot0 += a.triple_parts[j];
  CHECK(a.per_triple[0] == doctest::Approx(slot0).epsilon(1e-12));
}

TEST_CASE("integrated gradients validates its inputs") {
  Rng rng(49);
  const FusionModel m = testutil::random_model(49);
  const EmbeddingBundle b = testutil::random_bundle(rng, 2);
  CHECK_THROWS_AS(integrated_gradients(m, b, zero_baseline_of(b), 0), Error);

  EmbeddingBundle wrong_mask = zero_baseline_of(b);
  wrong_mask.mask[3] = true;
  CHECK_THROWS_AS(integrated_gradients(m, b, wrong_mask, 8), Error);
}

TEST_CASE("model files round-trip bit-exactly and reject corruption") {
  const FusionModel m = testutil::random_model(61, 24);
  testutil::TempDir tmp("model");
  save_model(m, tmp.file("model.cwfm"));

  const FusionModel loaded = load_model(tmp.file("model.cwfm"));
  CHECK(loaded.hidden == m.hidden);
  CHECK(loaded.init_seed == m.init_seed);
  CHECK(loaded.init_scale == m.init_scale);
  CHECK(loaded.w_part.data == m.w_part.data);
  CHECK(loaded.w_out == m.w_out);
  CHECK(loaded.b_out == m.b_out);

  // Same forward output to the last bit on a fixed bundle.
  Rng rng(61);
  const EmbeddingBundle b = testutil::random_bundle(rng, 2);
  CHECK(forward(loaded, b).logit == forward(m, b).logit);

  // Load then re-save: byte-identical file.
  save_model(loaded, tmp.file("resaved.cwfm"));
  CHECK(testutil::read_file(tmp.file("resaved.cwfm")) ==
        testutil::read_file(tmp.file("model.cwfm")));

  std::string bytes = testutil::read_file(tmp.file("model.cwfm"));
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  testutil::write_file(tmp.file("bad_magic.cwfm"), bad_magic);
  try {
    load_model(tmp.file("bad_magic.cwfm"));
    FAIL("expected a model-format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ModelFormat);
  }

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  testutil::write_file(tmp.file("flipped.cwfm"), flipped);
  CHECK_THROWS_AS(load_model(tmp.file("flipped.cwfm")), Error);

  CHECK_THROWS_AS(load_model(tmp.file("nope.cwfm")), Error);
  try {
    load_model(tmp.file("nope.cwfm"));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingModel);
  }
}

TEST_CASE("padding-inclusive mean is exposed as an ablation mode") {
  Rng rng(67);
  const FusionModel m = testutil::random_model(67);
  const EmbeddingBundle b = testutil::random_bundle(rng, 2);
  const ForwardMode padded{.linear_surrogate = false, .padding_inclusive_mean = true};
  const double default_logit = forward(m, b).logit;
  const double padded_logit = forward(m, b, padded).logit;
  // With empty slots contributing relu(b_part), the two modes differ.
  CHECK(default_logit != padded_logit);

  // With all four slots valid the modes coincide.
  const EmbeddingBundle full = testutil::random_bundle(rng, kMaxTriples);
  CHECK(forward(m, full).logit == forward(m, full, padded).logit);
}
