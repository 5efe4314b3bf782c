// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/mask_net.hpp"

#include <doctest.h>

#include <random>

#include "test_helpers.hpp"

using lgmsep::cd;
using lgmsep::MaskNetConfig;
using lgmsep::MaskNetParams;
using lgmsep::MaskSet;
using lgmsep::ScmParams;
using lgmsep::SmallMat;
using lgmsep::Spectrogram;

namespace {

MaskNetConfig small_cfg(int bins) {
  MaskNetConfig cfg;
  cfg.num_sources = 2;
  cfg.reverb_taps = 1;
  cfg.num_bins = bins;
  cfg.hidden = {16, 16};
  return cfg;
}

}  // namespace

TEST_SUITE("mask_net") {
  TEST_CASE("initialization is deterministic per seed with zero biases") {
    const MaskNetConfig cfg = small_cfg(5);
    const int feat_dim = 15;
    const MaskNetParams a = lgmsep::init_mask_net(cfg, feat_dim, 3);
    const MaskNetParams b = lgmsep::init_mask_net(cfg, feat_dim, 3);
    const MaskNetParams c = lgmsep::init_mask_net(cfg, feat_dim, 4);
    REQUIRE(a.weights.size() == 4);  // two hidden, two heads
    CHECK(a.weights[0] == b.weights[0]);
    CHECK(a.weights[0] != c.weights[0]);
    for (const auto& bias : a.biases) CHECK(bias.norm() == 0.0);
    CHECK(a.weights[0].rows() == feat_dim * 5);  // context +-2
    CHECK(a.mask_head().cols() == 5 * cfg.mask_categories());
    CHECK(a.var_head().cols() == 5 * 2);
    CHECK(a.num_parameters() > 0);
  }

  TEST_CASE("forward masks form a simplex and variances follow the scale") {
    std::mt19937_64 rng(101);
    const MaskNetConfig cfg = small_cfg(5);
    const Spectrogram spec = testutil::rand_spec(2, 9, 5, rng);
    const auto feats = lgmsep::extract_features(spec);
    const MaskNetParams params = lgmsep::init_mask_net(cfg, feats.dim(), 5);
    const auto scale = spec.mean_band_power();

    const MaskSet masks = lgmsep::net_forward(feats, params, cfg, scale);
    CHECK(masks.num_frames == 9);
    CHECK(masks.num_bins == 5);
    const int cats = cfg.mask_categories();
    for (int l = 0; l < 9; ++l)
      for (int k = 0; k < 5; ++k) {
        double sum = 0.0;
        for (int c = 0; c < cats; ++c) {
          const double m = masks.mask(l, k, c);
          CHECK(m >= 0.0);
          CHECK(m <= 1.0);
          sum += m;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (int i = 0; i < 2; ++i) CHECK(masks.var(i, l, k) > 0.0);
      }

    // zero weights put every logit at zero: uniform masks, v_q = band scale
    MaskNetParams zeroed = params;
    zeroed.set_zero();
    const MaskSet flat = lgmsep::net_forward(feats, zeroed, cfg, scale);
    for (int l = 0; l < 9; ++l)
      for (int k = 0; k < 5; ++k) {
        for (int c = 0; c < cats; ++c)
          CHECK(flat.mask(l, k, c) == doctest::Approx(1.0 / cats));
        for (int i = 0; i < 2; ++i)
          CHECK(flat.var(i, l, k) ==
                doctest::Approx(scale[static_cast<size_t>(k)]));
      }
  }

  TEST_CASE("non-finite weights are reported with the layer") {
    std::mt19937_64 rng(102);
    const MaskNetConfig cfg = small_cfg(4);
    const Spectrogram spec = testutil::rand_spec(2, 7, 4, rng);
    const auto feats = lgmsep::extract_features(spec);
    MaskNetParams params = lgmsep::init_mask_net(cfg, feats.dim(), 6);
    params.weights[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(
        lgmsep::net_forward(feats, params, cfg, spec.mean_band_power()),
        lgmsep::NumericError);
  }

  TEST_CASE("masks_to_scm: the weighted-mean hand case") {
    // one mic, one source, no reverb; |x|^2 = {1, 3} with masks 0.5
    Spectrogram spec;
    spec.num_channels = 1;
    spec.num_frames = 2;
    spec.num_bins = 1;
    spec.frame_size = 4;
    spec.hop = 1;
    spec.data = {cd(1.0, 0.0), cd(0.0, std::sqrt(3.0))};

    MaskSet masks;
    masks.num_sources = 1;
    masks.reverb_taps = 0;
    masks.num_frames = 2;
    masks.num_bins = 1;
    masks.m.assign(2 * 1 * 2, 0.5);  // two categories: direct + noise
    masks.v_q.assign(2, 1.0);

    const ScmParams p = lgmsep::masks_to_scm(spec, masks);
    CHECK(p.R_at(0, 0)(0, 0).real() == doctest::Approx(2.0));
    CHECK(p.Rn_at(0)(0, 0).real() == doctest::Approx(2.0));
    CHECK(p.v_at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(p.v_at(0, 1, 0) == doctest::Approx(1.0));
  }

  TEST_CASE("masks_to_scm produces hermitian psd blocks and keeps v_q") {
    std::mt19937_64 rng(103);
    const MaskNetConfig cfg = small_cfg(4);
    const Spectrogram spec = testutil::rand_spec(2, 8, 4, rng);
    const auto feats = lgmsep::extract_features(spec);
    const MaskNetParams params = lgmsep::init_mask_net(cfg, feats.dim(), 7);
    const MaskSet masks =
        lgmsep::net_forward(feats, params, cfg, spec.mean_band_power());
    int fallbacks = -1;
    const ScmParams p = lgmsep::masks_to_scm(spec, masks, &fallbacks);
    CHECK(fallbacks == 0);  // softmax masks are strictly positive
    CHECK(p.num_sources == 2);
    CHECK(p.reverb_taps == 1);
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 4; ++k) {
        CHECK((p.R_at(i, k) - p.R_at(i, k).adjoint()).norm() <
              1e-12 * p.R_at(i, k).norm());
        CHECK(lgmsep::min_eigenvalue(p.R_at(i, k)) >= -1e-12);
        for (int l = 0; l < 8; ++l)
          CHECK(p.v_at(i, l, k) == masks.var(i, l, k));
      }
  }

  TEST_CASE("infer_and_refine returns a finite posterior of the right shape") {
    std::mt19937_64 rng(104);
    const MaskNetConfig cfg = small_cfg(5);
    const Spectrogram spec = testutil::rand_spec(2, 14, 5, rng);
    const auto feats = lgmsep::extract_features(spec);
    const MaskNetParams params = lgmsep::init_mask_net(cfg, feats.dim(), 8);

    const auto res = lgmsep::infer_and_refine(spec, params, cfg, 2);
    CHECK(res.posterior.num_sources == 2);
    CHECK(res.posterior.num_frames == 14);
    CHECK(res.posterior.num_bins == 5);
    for (const auto& z : res.posterior.mu) CHECK(std::isfinite(z.real()));
    for (const auto& z : res.posterior.V) CHECK(std::isfinite(z.real()));
    // the refined parameters still describe the same geometry
    CHECK(res.params.num_sources == 2);
    CHECK(res.params.reverb_taps == 1);
  }
}
