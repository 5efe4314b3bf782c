// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/lgm.hpp"

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "test_helpers.hpp"

using lgmsep::cd;
using lgmsep::GaussianPosterior;
using lgmsep::ScmParams;
using lgmsep::SmallMat;
using lgmsep::SmallVec;
using lgmsep::Spectrogram;

namespace {

// Mixture covariance assembled from the raw parameter arrays with oracle
// arithmetic: sum of v R, delayed-variance H terms, and R_n.
oracle::Mat oracle_mixture_cov(const ScmParams& p, int l, int k) {
  const int n = p.num_mics;
  oracle::Mat s;
  s.n = n;
  for (int i = 0; i < p.num_sources; ++i) {
    const double v = p.v_at(i, l, k);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) s.at(r, c) += v * p.R_at(i, k)(r, c);
    for (int d = 0; d < p.reverb_taps; ++d) {
      const int src = l - (d + 1);
      if (src < 0) continue;
      const double vd = p.v_at(i, src, k);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) s.at(r, c) += vd * p.H_at(i, d, k)(r, c);
    }
  }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) s.at(r, c) += p.Rn_at(k)(r, c);
  return s;
}

double oracle_loglik(const Spectrogram& spec, const ScmParams& p) {
  double acc = 0.0;
  for (int k = 0; k < p.num_bins; ++k)
    for (int l = 0; l < p.num_frames; ++l) {
      oracle::Vec x{};
      for (int m = 0; m < p.num_mics; ++m) x[static_cast<size_t>(m)] = spec.at(l, k, m);
      acc += oracle::gauss_loglik(x, oracle_mixture_cov(p, l, k), p.num_mics);
    }
  return acc;
}

// Scalar single-component parameters used by the fixed-point cases.
ScmParams scalar_params(int frames, double v0) {
  ScmParams p;
  p.resize(1, frames, 1, 1, 0);
  for (auto& x : p.v) x = v0;
  p.R_at(0, 0)(0, 0) = 1.0;
  p.Rn_at(0)(0, 0) = 0.0;
  return p;
}

}  // namespace

TEST_SUITE("lgm") {
  TEST_CASE("assemble_scm scalar hand case") {
    // v_{l-1} = 2, v_l = 3, R = 1, H(lag 1) = 0.5, R_n = 0.1
    ScmParams p;
    p.resize(1, 2, 1, 1, 1);
    p.v_at(0, 0, 0) = 2.0;
    p.v_at(0, 1, 0) = 3.0;
    p.R_at(0, 0)(0, 0) = 1.0;
    p.H_at(0, 0, 0)(0, 0) = 0.5;
    p.Rn_at(0)(0, 0) = 0.1;
    const SmallMat s = lgmsep::assemble_scm(p, 1, 0);
    CHECK(s(0, 0).real() == doctest::Approx(4.1));
    CHECK(s(0, 0).imag() == doctest::Approx(0.0));
    // at l = 0 the lag-1 term has no source frame yet
    const SmallMat s0 = lgmsep::assemble_scm(p, 0, 0);
    CHECK(s0(0, 0).real() == doctest::Approx(2.1));
  }

  TEST_CASE("assemble_scm is hermitian and matches the oracle sum") {
    std::mt19937_64 rng(81);
    const ScmParams p = testutil::rand_params(2, 6, 4, 3, 2, rng);
    for (int l = 0; l < 6; ++l)
      for (int k = 0; k < 4; ++k) {
        const SmallMat s = lgmsep::assemble_scm(p, l, k);
        CHECK((s - s.adjoint()).norm() <= 1e-12 * s.norm());
        CHECK(oracle::frob_diff(testutil::to_oracle(s),
                                oracle_mixture_cov(p, l, k)) <
              1e-12 * s.norm());
      }
  }

  TEST_CASE("mwf: single source, no reverb, no noise is the identity filter") {
    std::mt19937_64 rng(82);
    ScmParams p;
    p.resize(1, 3, 2, 2, 0);
    for (auto& x : p.v) x = 1.3;
    for (int k = 0; k < 2; ++k) {
      p.R_at(0, k) = testutil::rand_psd(2, rng);
      p.Rn_at(k).setZero();
    }
    const SmallVec x = testutil::rand_cvec(2, rng);
    SmallVec mu;
    SmallMat v;
    lgmsep::mwf_posterior(x, p, 0, 1, 0, &mu, &v);
    CHECK((mu - x).norm() < 1e-10 * x.norm());
    CHECK(v.norm() < 1e-10);
  }

  TEST_CASE("mwf: scalar half-half split") {
    // v = 1, R = 1, mixture covariance 2 -> W = 0.5, V = 0.5
    ScmParams p;
    p.resize(1, 1, 1, 1, 0);
    p.v[0] = 1.0;
    p.R_at(0, 0)(0, 0) = 1.0;
    p.Rn_at(0)(0, 0) = 1.0;
    SmallVec x(1);
    x(0) = cd(0.6, -0.2);
    SmallVec mu;
    SmallMat v;
    lgmsep::mwf_posterior(x, p, 0, 0, 0, &mu, &v);
    CHECK(std::abs(mu(0) - cd(0.3, -0.1)) < 1e-14);
    CHECK(std::abs(v(0, 0) - cd(0.5, 0.0)) < 1e-14);
  }

  TEST_CASE("mwf matches the explicit-inverse oracle") {
    std::mt19937_64 rng(83);
    for (int mics : {2, 3}) {
      for (int trial = 0; trial < 60; ++trial) {
        const ScmParams p = testutil::rand_params(2, 5, 3, mics, 1, rng);
        const SmallVec x = testutil::rand_cvec(mics, rng);
        const int l = 2, k = 1;
        for (int i = 0; i < 2; ++i) {
          SmallVec mu;
          SmallMat v;
          lgmsep::mwf_posterior(x, p, i, l, k, &mu, &v);

          oracle::Mat comp;
          comp.n = mics;
          for (int r = 0; r < mics; ++r)
            for (int c = 0; c < mics; ++c)
              comp.at(r, c) = p.v_at(i, l, k) * p.R_at(i, k)(r, c);
          const oracle::WienerOut ref = oracle::wiener(
              comp, oracle_mixture_cov(p, l, k), testutil::to_oracle(x), mics);

          double mu_err = 0.0;
          for (int m = 0; m < mics; ++m)
            mu_err = std::max(mu_err,
                              std::abs(mu(m) - ref.mu[static_cast<size_t>(m)]));
          CHECK(mu_err <= 1e-10 * std::max(1.0, x.norm()));
          CHECK(oracle::frob_diff(testutil::to_oracle(v), ref.V) <=
                1e-10 * std::max(1.0, oracle::frob(ref.V)));
        }
      }
    }
  }

  TEST_CASE("component wiener filters sum to the identity") {
    std::mt19937_64 rng(84);
    const ScmParams p = testutil::rand_params(2, 6, 3, 3, 2, rng);
    const Spectrogram spec = testutil::rand_spec(3, 6, 3, rng);
    for (int l = 0; l < 6; ++l)
      for (int k = 0; k < 3; ++k) {
        const auto mom =
            lgmsep::e_step_moments(spec.bin_vec(l, k), p, l, k);
        SmallMat sum = SmallMat::Zero(3, 3);
        for (const auto& w : mom.wiener) sum += w;
        CHECK((sum - SmallMat::Identity(3, 3)).norm() < 1e-10);
      }
  }

  TEST_CASE("log likelihood matches the oracle") {
    std::mt19937_64 rng(85);
    const ScmParams p = testutil::rand_params(2, 8, 5, 2, 1, rng);
    const Spectrogram spec = testutil::rand_spec(2, 8, 5, rng);
    const double got = lgmsep::log_likelihood(spec, p);
    const double ref = oracle_loglik(spec, p);
    CHECK(got == doctest::Approx(ref).epsilon(1e-10));
  }

  TEST_CASE("single-component em lands on the variance fixed point") {
    std::mt19937_64 rng(86);
    const Spectrogram spec = testutil::rand_spec(1, 12, 1, rng);
    ScmParams p = scalar_params(12, 1.0);
    const ScmParams next = lgmsep::em_iterate(spec, p);
    for (int l = 0; l < 12; ++l) {
      const double target = std::norm(spec.at(l, 0, 0));
      CHECK(next.v_at(0, l, 0) == doctest::Approx(target).epsilon(1e-12));
    }
    CHECK(next.R_at(0, 0)(0, 0).real() == doctest::Approx(1.0));
    // a second sweep from the fixed point stays put
    const ScmParams again = lgmsep::em_iterate(spec, next);
    for (int l = 0; l < 12; ++l)
      CHECK(again.v_at(0, l, 0) ==
            doctest::Approx(next.v_at(0, l, 0)).epsilon(1e-10));
  }

  TEST_CASE("em is monotone in the speech+noise configuration") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
      std::mt19937_64 rng(1000 + seed);
      const ScmParams truth = testutil::rand_params(2, 30, 4, 2, 0, rng);
      const Spectrogram spec = testutil::sample_from_model(truth, rng);
      ScmParams p = testutil::rand_params(2, 30, 4, 2, 0, rng);
      double prev = oracle_loglik(spec, p);
      for (int it = 0; it < 10; ++it) {
        p = lgmsep::em_iterate(spec, p);
        const double cur = oracle_loglik(spec, p);
        CHECK(cur >= prev - 1e-8 * std::abs(prev));
        prev = cur;
      }
    }
  }

  TEST_CASE("em with reverberation terms improves the likelihood overall") {
    for (uint64_t seed = 0; seed < 4; ++seed) {
      std::mt19937_64 rng(2000 + seed);
      const ScmParams truth = testutil::rand_params(2, 30, 3, 2, 2, rng);
      const Spectrogram spec = testutil::sample_from_model(truth, rng);
      ScmParams p = testutil::rand_params(2, 30, 3, 2, 2, rng);
      const double first = oracle_loglik(spec, p);
      for (int it = 0; it < 10; ++it) p = lgmsep::em_iterate(spec, p);
      CHECK(oracle_loglik(spec, p) >= first);
    }
  }

  TEST_CASE("em copies parameters of an all-silent frequency band") {
    std::mt19937_64 rng(87);
    Spectrogram spec = testutil::rand_spec(2, 10, 3, rng);
    for (int l = 0; l < 10; ++l)
      for (int m = 0; m < 2; ++m) spec.at(l, 1, m) = 0.0;
    const ScmParams p = testutil::rand_params(2, 10, 3, 2, 1, rng);
    const ScmParams next = lgmsep::em_iterate(spec, p);
    for (int i = 0; i < 2; ++i) {
      CHECK((next.R_at(i, 1) - p.R_at(i, 1)).norm() == 0.0);
      for (int l = 0; l < 10; ++l)
        CHECK(next.v_at(i, l, 1) == p.v_at(i, l, 1));
    }
    CHECK((next.Rn_at(1) - p.Rn_at(1)).norm() == 0.0);
    // the healthy bands still update
    CHECK((next.R_at(0, 0) - p.R_at(0, 0)).norm() > 0.0);
  }

  TEST_CASE("posterior field is zero wherever the model is silent") {
    ScmParams p;
    p.resize(1, 3, 2, 2, 0);
    for (auto& x : p.v) x = 0.0;
    for (int k = 0; k < 2; ++k) {
      p.R_at(0, k) = SmallMat::Identity(2, 2);
      p.Rn_at(k).setZero();
    }
    std::mt19937_64 rng(88);
    const Spectrogram spec = testutil::rand_spec(2, 3, 2, rng);
    const GaussianPosterior post = lgmsep::posterior_field(spec, p);
    for (int l = 0; l < 3; ++l)
      for (int k = 0; k < 2; ++k) {
        CHECK(post.mu_at(0, l, k).norm() == 0.0);
        CHECK(post.V_at(0, l, k).norm() == 0.0);
      }
  }

  TEST_CASE("permutation: identical envelopes give the identity map") {
    std::mt19937_64 rng(89);
    ScmParams p = testutil::rand_params(2, 20, 5, 2, 0, rng);
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 5; ++k)
        for (int l = 0; l < 20; ++l)
          p.v_at(i, l, k) = (i == 0 ? 1.0 + l : 40.0 - l);
    const auto map = lgmsep::solve_permutation(p);
    for (int k = 0; k < 5; ++k) {
      CHECK(map.perm[static_cast<size_t>(k)][0] == 0);
      CHECK(map.perm[static_cast<size_t>(k)][1] == 1);
    }
  }

  TEST_CASE("permutation: a constructed swap is recovered") {
    std::mt19937_64 rng(90);
    const int frames = 40, bins = 7;
    ScmParams p = testutil::rand_params(2, frames, bins, 2, 0, rng);
    // disjoint on/off envelopes; bins 2 and 5 store the sources swapped.
    // bin 0 carries extra power so it anchors the slot labels.
    auto env = [&](int src, int l) {
      const bool active = (src == 0) ? l < frames / 2 : l >= frames / 2;
      return active ? 10.0 : 0.01;
    };
    for (int k = 0; k < bins; ++k) {
      const bool swapped = (k == 2 || k == 5);
      const double boost = (k == 0) ? 1.5 : 1.0;
      for (int l = 0; l < frames; ++l) {
        p.v_at(0, l, k) = boost * env(swapped ? 1 : 0, l);
        p.v_at(1, l, k) = boost * env(swapped ? 0 : 1, l);
      }
    }
    const auto map = lgmsep::solve_permutation(p);
    for (int k = 0; k < bins; ++k) {
      const bool swapped = (k == 2 || k == 5);
      CHECK(map.perm[static_cast<size_t>(k)][0] == (swapped ? 1 : 0));
      CHECK(map.perm[static_cast<size_t>(k)][1] == (swapped ? 0 : 1));
    }

    // applying the map actually moves v (and leaves it aligned)
    ScmParams aligned = p;
    lgmsep::apply_permutation(map, &aligned);
    for (int k = 0; k < bins; ++k) {
      const double boost = (k == 0) ? 1.5 : 1.0;
      for (int l = 0; l < frames; ++l) {
        CHECK(aligned.v_at(0, l, k) == doctest::Approx(boost * env(0, l)));
        CHECK(aligned.v_at(1, l, k) == doctest::Approx(boost * env(1, l)));
      }
    }
  }

  TEST_CASE("permutation: single source maps to itself") {
    std::mt19937_64 rng(91);
    const ScmParams p = testutil::rand_params(1, 15, 4, 2, 1, rng);
    const auto map = lgmsep::solve_permutation(p);
    for (int k = 0; k < 4; ++k) CHECK(map.perm[static_cast<size_t>(k)][0] == 0);
  }

  TEST_CASE("permutation result is stable under global relabeling") {
    std::mt19937_64 rng(92);
    ScmParams p = testutil::rand_params(3, 30, 6, 2, 1, rng);
    // strongly structured envelopes so the alignment is unambiguous
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 6; ++k)
        for (int l = 0; l < 30; ++l)
          p.v_at(i, l, k) = (l / 10 == i) ? 5.0 : 0.02;

    ScmParams relabeled = p;  // global swap of sources 0 and 2
    const int sigma[3] = {2, 1, 0};
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 6; ++k) {
        relabeled.R_at(i, k) = p.R_at(sigma[i], k);
        relabeled.H_at(i, 0, k) = p.H_at(sigma[i], 0, k);
        for (int l = 0; l < 30; ++l)
          relabeled.v_at(i, l, k) = p.v_at(sigma[i], l, k);
      }
    }

    ScmParams a = p, b = relabeled;
    lgmsep::apply_permutation(lgmsep::solve_permutation(p), &a);
    lgmsep::apply_permutation(lgmsep::solve_permutation(relabeled), &b);

    // the aligned fields agree up to one global source relabeling; the
    // envelopes are distinct over frames, so matching them fixes rho
    std::vector<int> rho(3, -1);
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) {
        bool all_equal = true;
        for (int l = 0; l < 30 && all_equal; ++l)
          all_equal = b.v_at(s, l, 0) == a.v_at(t, l, 0);
        if (all_equal) rho[static_cast<size_t>(s)] = t;
      }
    for (int s = 0; s < 3; ++s) REQUIRE(rho[static_cast<size_t>(s)] >= 0);
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < 6; ++k)
        for (int l = 0; l < 30; ++l)
          CHECK(b.v_at(s, l, k) ==
                a.v_at(rho[static_cast<size_t>(s)], l, k));
  }

  TEST_CASE("init_params is deterministic and sanely scaled") {
    std::mt19937_64 rng(93);
    const Spectrogram spec = testutil::rand_spec(2, 20, 4, rng);
    lgmsep::PcsgConfig cfg;
    cfg.num_sources = 2;
    cfg.reverb_taps = 1;
    cfg.seed = 7;
    const ScmParams a = lgmsep::init_params(spec, cfg);
    const ScmParams b = lgmsep::init_params(spec, cfg);
    CHECK(a.v == b.v);
    CHECK(a.R == b.R);
    CHECK(a.H == b.H);
    CHECK(a.R_n == b.R_n);

    for (int l = 0; l < 20; ++l)
      for (int k = 0; k < 4; ++k) {
        const double expect = spec.bin_vec(l, k).squaredNorm() / (2.0 * 2.0);
        CHECK(a.v_at(0, l, k) == doctest::Approx(expect));
        CHECK(a.v_at(1, l, k) == doctest::Approx(expect));
      }
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 4; ++k) {
        CHECK(lgmsep::min_eigenvalue(a.R_at(i, k)) > 0.0);
        CHECK((a.R_at(i, k) - SmallMat::Identity(2, 2)).norm() < 1.0);
      }

    lgmsep::PcsgConfig other = cfg;
    other.seed = 8;
    const ScmParams c = lgmsep::init_params(spec, other);
    CHECK(a.R != c.R);
  }

  TEST_CASE("pcsg on silence returns an all-zero posterior") {
    Spectrogram spec;
    spec.num_channels = 2;
    spec.num_frames = 25;
    spec.num_bins = 3;
    spec.frame_size = 4;
    spec.hop = 1;
    spec.kind = lgmsep::SpecKind::dereverberated;
    spec.data.assign(static_cast<size_t>(2) * 25 * 3, cd(0.0));
    lgmsep::PcsgConfig cfg;
    cfg.em_iters = 3;
    const auto res = lgmsep::pcsg_separate(spec, cfg);
    for (const auto& z : res.posterior.mu) CHECK(z == cd(0.0));
  }

  TEST_CASE("posterior_mean_spec copies one source out of the field") {
    std::mt19937_64 rng(94);
    GaussianPosterior post;
    post.resize(2, 4, 3, 2);
    for (auto& z : post.mu) z = testutil::rand_c(rng);
    const Spectrogram geom = testutil::rand_spec(2, 4, 3, rng);
    const Spectrogram out = lgmsep::posterior_mean_spec(post, 1, geom);
    CHECK(out.kind == lgmsep::SpecKind::source_image);
    CHECK(out.frame_size == geom.frame_size);
    for (int l = 0; l < 4; ++l)
      for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 2; ++m)
          CHECK(out.at(l, k, m) == post.mu_at(1, l, k)(m));
  }
}
