// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Sanity checks of the brute-force reference computations themselves, on
// closed-form cases. Everything downstream leans on these.

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "test_helpers.hpp"

using oracle::cd;

TEST_SUITE("oracles") {
  TEST_CASE("adjugate inverse reproduces identity") {
    std::mt19937_64 rng(11);
    for (int n = 1; n <= 3; ++n) {
      for (int trial = 0; trial < 20; ++trial) {
        const oracle::Mat a = testutil::to_oracle(testutil::rand_psd(n, rng));
        const oracle::Mat prod = oracle::mul(a, oracle::inverse(a));
        CHECK(oracle::frob_diff(prod, oracle::identity(n)) < 1e-12 * n);
      }
    }
  }

  TEST_CASE("closed-form eigenvalues: hand cases") {
    oracle::Mat d2;
    d2.n = 2;
    d2.at(0, 0) = 3.0;
    d2.at(1, 1) = 7.0;
    auto ev2 = oracle::hermitian_eigvals(d2);
    CHECK(ev2[0] == doctest::Approx(3.0));
    CHECK(ev2[1] == doctest::Approx(7.0));

    // [[2, i], [-i, 2]] has eigenvalues 1 and 3
    oracle::Mat h2;
    h2.n = 2;
    h2.at(0, 0) = 2.0;
    h2.at(1, 1) = 2.0;
    h2.at(0, 1) = cd(0.0, 1.0);
    h2.at(1, 0) = cd(0.0, -1.0);
    ev2 = oracle::hermitian_eigvals(h2);
    CHECK(ev2[0] == doctest::Approx(1.0));
    CHECK(ev2[1] == doctest::Approx(3.0));

    oracle::Mat d3;
    d3.n = 3;
    d3.at(0, 0) = 5.0;
    d3.at(1, 1) = -1.0;
    d3.at(2, 2) = 2.0;
    auto ev3 = oracle::hermitian_eigvals(d3);
    CHECK(ev3[0] == doctest::Approx(-1.0));
    CHECK(ev3[1] == doctest::Approx(2.0));
    CHECK(ev3[2] == doctest::Approx(5.0));
  }

  TEST_CASE("eigenvalues satisfy trace and determinant identities") {
    std::mt19937_64 rng(12);
    for (int n = 2; n <= 3; ++n) {
      for (int trial = 0; trial < 50; ++trial) {
        const oracle::Mat a = testutil::to_oracle(testutil::rand_psd(n, rng));
        const auto ev = oracle::hermitian_eigvals(a);
        double tr = 0.0, dt = 1.0;
        for (int i = 0; i < n; ++i) {
          tr += ev[static_cast<size_t>(i)];
          dt *= ev[static_cast<size_t>(i)];
        }
        double tr_ref = 0.0;
        for (int i = 0; i < n; ++i) tr_ref += a.at(i, i).real();
        CHECK(tr == doctest::Approx(tr_ref).epsilon(1e-12));
        CHECK(dt == doctest::Approx(oracle::det(a).real()).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("dense solver inverts a known system") {
    std::vector<std::vector<double>> a = {{4.0, 1.0}, {1.0, 3.0}};
    std::vector<double> b = {1.0, 2.0};
    const auto x = oracle::solve_dense(a, b);
    CHECK(x[0] == doctest::Approx(1.0 / 11.0));
    CHECK(x[1] == doctest::Approx(7.0 / 11.0));
  }

  TEST_CASE("naive dft of an impulse is flat") {
    std::vector<cd> x(8, 0.0);
    x[0] = 1.0;
    const auto y = oracle::naive_dft(x);
    for (const auto& v : y) {
      CHECK(v.real() == doctest::Approx(1.0));
      CHECK(v.imag() == doctest::Approx(0.0));
    }
  }

  TEST_CASE("projection scores: estimate equal to one reference") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> refs(2, std::vector<double>(300));
    for (auto& r : refs)
      for (auto& v : r) v = g(rng);
    const oracle::ProjScores sc = oracle::projection_scores({refs[0]}, refs, 4);
    CHECK(sc.sdr[0][0] == doctest::Approx(100.0));  // own span, capped
    CHECK(sc.sdr[1][0] < 0.0);                      // wrong reference
  }
}
