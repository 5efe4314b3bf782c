// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/wpe.hpp"

#include <doctest.h>

#include <random>

#include "test_helpers.hpp"

using lgmsep::cd;
using lgmsep::Spectrogram;

namespace {

// x_l = s_l + echo * s_{l - lag} per channel, one lag per channel.
Spectrogram echoed_spec(int mics, int frames, int bins, double echo,
                        const std::vector<int>& lags, uint64_t seed,
                        Spectrogram* dry_out = nullptr) {
  std::mt19937_64 rng(seed);
  Spectrogram dry = testutil::rand_spec(mics, frames, bins, rng);
  Spectrogram wet = dry;
  for (int k = 0; k < bins; ++k)
    for (int l = 0; l < frames; ++l)
      for (int m = 0; m < mics; ++m) {
        const int lag = lags[static_cast<size_t>(m)];
        wet.at(l, k, m) =
            dry.at(l, k, m) +
            (l >= lag ? echo * dry.at(l - lag, k, m) : cd(0.0));
      }
  if (dry_out) *dry_out = dry;
  return wet;
}

// One shared white source observed at every mic with a per-channel echo lag:
// x_{l,m} = s_l + echo * s_{l - lags[m]}. With coprime lags the echo part is
// an exact finite-tap function of the past observations, so prediction can
// cancel it completely. dry_out carries s on every channel.
Spectrogram shared_source_echo(int mics, int frames, int bins, double echo,
                               const std::vector<int>& lags, uint64_t seed,
                               Spectrogram* dry_out = nullptr) {
  std::mt19937_64 rng(seed);
  Spectrogram s = testutil::rand_spec(1, frames, bins, rng);
  Spectrogram wet = testutil::rand_spec(mics, frames, bins, rng);
  Spectrogram dry = wet;
  for (int k = 0; k < bins; ++k)
    for (int l = 0; l < frames; ++l)
      for (int m = 0; m < mics; ++m) {
        const int lag = lags[static_cast<size_t>(m)];
        dry.at(l, k, m) = s.at(l, k, 0);
        wet.at(l, k, m) =
            s.at(l, k, 0) +
            (l >= lag ? echo * s.at(l - lag, k, 0) : cd(0.0));
      }
  if (dry_out) *dry_out = dry;
  return wet;
}

double tail_energy(const Spectrogram& processed, const Spectrogram& dry) {
  double acc = 0.0;
  for (size_t i = 0; i < processed.data.size(); ++i)
    acc += std::norm(processed.data[i] - dry.data[i]);
  return acc;
}

}  // namespace

TEST_SUITE("wpe") {
  TEST_CASE("objective is non-increasing across iterations") {
    const Spectrogram spec =
        echoed_spec(2, 120, 6, 0.7, {2, 3}, 72);
    const auto fit = lgmsep::wpe_fit(spec, 2, 16, 6);
    REQUIRE(fit.objective.size() == 6);
    for (size_t i = 1; i < fit.objective.size(); ++i)
      CHECK(fit.objective[i] <=
            fit.objective[i - 1] + 1e-8 * std::abs(fit.objective[i - 1]));
  }

  TEST_CASE("white input passes through nearly unchanged") {
    // temporally uncorrelated frames leave nothing to predict, so the change
    // is only least-squares overfit, about regressor_dim / num_frames
    std::mt19937_64 rng(73);
    const Spectrogram spec = testutil::rand_spec(2, 4000, 4, rng);
    const Spectrogram out = lgmsep::wpe_dereverberate(spec, 2, 8, 3);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < spec.data.size(); ++i) {
      num += std::norm(out.data[i] - spec.data[i]);
      den += std::norm(spec.data[i]);
    }
    CHECK(num / den < 0.01);
  }

  TEST_CASE("constructed two-channel echo is cancelled by at least 20 dB") {
    // coprime echo lags make the tail an exact finite-tap prediction of the
    // past mixture, so the fit is limited only by estimation noise
    Spectrogram dry;
    const Spectrogram wet =
        shared_source_echo(2, 6000, 4, 0.8, {2, 3}, 74, &dry);
    const double before = tail_energy(wet, dry);
    const Spectrogram out = lgmsep::wpe_dereverberate(wet, 2, 16, 3);
    const double after = tail_energy(out, dry);
    CHECK(10.0 * std::log10(before / after) >= 20.0);
  }

  TEST_CASE("apply with a zero filter is the identity") {
    std::mt19937_64 rng(75);
    const Spectrogram spec = testutil::rand_spec(2, 40, 4, rng);
    lgmsep::WpeFilter f;
    f.num_channels = 2;
    f.num_bins = 4;
    f.delay = 2;
    f.taps = 16;
    f.w.assign(4, Eigen::MatrixXcd::Zero(2, f.regressor_dim()));
    const Spectrogram out = lgmsep::wpe_apply(spec, f);
    for (size_t i = 0; i < spec.data.size(); ++i)
      CHECK(out.data[i] == spec.data[i]);
    CHECK(out.kind == lgmsep::SpecKind::dereverberated);
  }

  TEST_CASE("apply matches the scalar hand computation") {
    // one channel, one regressor frame at lag 2: x~_l = x_l - w x_{l-2}
    Spectrogram spec;
    spec.num_channels = 1;
    spec.num_frames = 3;
    spec.num_bins = 1;
    spec.frame_size = 4;
    spec.hop = 1;
    spec.data = {cd(1.0, 0.0), cd(2.0, 1.0), cd(-1.0, 0.5)};

    lgmsep::WpeFilter f;
    f.num_channels = 1;
    f.num_bins = 1;
    f.delay = 2;
    f.taps = 3;
    f.w.assign(1, Eigen::MatrixXcd::Constant(1, 1, cd(0.5, 0.0)));

    const Spectrogram out = lgmsep::wpe_apply(spec, f);
    CHECK(out.at(0, 0, 0) == spec.at(0, 0, 0));  // zero-padded history
    CHECK(out.at(1, 0, 0) == spec.at(1, 0, 0));
    CHECK(std::abs(out.at(2, 0, 0) -
                   (spec.at(2, 0, 0) - cd(0.5) * spec.at(0, 0, 0))) < 1e-15);
  }

  TEST_CASE("apply is linear in the input") {
    std::mt19937_64 rng(76);
    const Spectrogram a = testutil::rand_spec(2, 60, 3, rng);
    Spectrogram b = testutil::rand_spec(2, 60, 3, rng);
    const auto fit = lgmsep::wpe_fit(a, 2, 8, 2);
    Spectrogram mix = a;
    for (size_t i = 0; i < mix.data.size(); ++i)
      mix.data[i] = 1.5 * a.data[i] - 0.25 * b.data[i];
    const Spectrogram oa = lgmsep::wpe_apply(a, fit.filter);
    const Spectrogram ob = lgmsep::wpe_apply(b, fit.filter);
    const Spectrogram om = lgmsep::wpe_apply(mix, fit.filter);
    for (size_t i = 0; i < om.data.size(); ++i)
      CHECK(std::abs(om.data[i] - (1.5 * oa.data[i] - 0.25 * ob.data[i])) <
            1e-12);
  }

  TEST_CASE("frequencies are processed independently") {
    const Spectrogram spec = echoed_spec(2, 100, 4, 0.6, {2, 2}, 77);
    // permute bins, fit, and compare against fitting in place
    std::vector<int> perm = {2, 0, 3, 1};
    Spectrogram shuffled = spec;
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 100; ++l)
        for (int m = 0; m < 2; ++m)
          shuffled.at(l, perm[static_cast<size_t>(k)], m) = spec.at(l, k, m);
    const auto direct = lgmsep::wpe_fit(spec, 2, 8, 3);
    const auto mixed = lgmsep::wpe_fit(shuffled, 2, 8, 3);
    for (int k = 0; k < 4; ++k) {
      const auto& a = direct.filter.w[static_cast<size_t>(k)];
      const auto& b = mixed.filter.w[static_cast<size_t>(perm[static_cast<size_t>(k)])];
      CHECK((a - b).norm() == 0.0);
    }
  }

  TEST_CASE("shape mismatch in apply is rejected") {
    std::mt19937_64 rng(78);
    const Spectrogram spec = testutil::rand_spec(2, 40, 4, rng);
    const auto fit = lgmsep::wpe_fit(spec, 2, 8, 1);
    const Spectrogram other = testutil::rand_spec(2, 40, 5, rng);
    CHECK_THROWS_AS(lgmsep::wpe_apply(other, fit.filter), lgmsep::UsageError);
  }

  TEST_CASE("too short input is rejected") {
    std::mt19937_64 rng(79);
    const Spectrogram spec = testutil::rand_spec(2, 10, 3, rng);
    CHECK_THROWS_AS(lgmsep::wpe_fit(spec, 2, 16, 2), lgmsep::UsageError);
  }
}
