// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Times the production (OpenMP-parallel) kernels against the serial
// reference implementations on identical inputs and reports the largest
// result difference alongside the speedup.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgmsep/lgm.hpp"
#include "lgmsep/parallel.hpp"
#include "lgmsep/reference.hpp"
#include "lgmsep/tf_signal.hpp"
#include "lgmsep/wpe.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point a, clock_type::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

lgmsep::Spectrogram random_spec(int mics, int frames, int bins,
                                uint64_t seed) {
  lgmsep::Spectrogram spec;
  spec.num_channels = mics;
  spec.num_frames = frames;
  spec.num_bins = bins;
  spec.frame_size = 2 * (bins - 1);
  spec.hop = spec.frame_size / 4;
  spec.data.resize(static_cast<size_t>(mics) * frames * bins);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& z : spec.data) z = lgmsep::cd(g(rng), g(rng));
  return spec;
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  double max_diff = 0.0;
};

void print_rows(const std::vector<Row>& rows, int threads) {
  std::printf("%-28s %12s %12s %9s %11s\n", "kernel", "serial ms",
              "parallel ms", "speedup", "max |diff|");
  for (const auto& r : rows)
    std::printf("%-28s %12.1f %12.1f %8.2fx %11.2e\n", r.name.c_str(),
                r.serial_ms, r.parallel_ms, r.serial_ms / r.parallel_ms,
                r.max_diff);
  std::printf("(parallel runs used thread cap %d; 0 means library default)\n",
              threads);
}

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    fn();
    const auto t1 = clock_type::now();
    best = std::min(best, elapsed_ms(t0, t1));
  }
  return best;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const std::vector<lgmsep::cd>& a,
                    const std::vector<lgmsep::cd>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark: serial reference vs OpenMP"};
  int mics = 2, frames = 400, bins = 129, sources = 2, taps = 4, reps = 3;
  int threads = 0;
  app.add_option("--mics", mics)->capture_default_str();
  app.add_option("--frames", frames)->capture_default_str();
  app.add_option("--bins", bins)->capture_default_str();
  app.add_option("--sources", sources)->capture_default_str();
  app.add_option("--lr", taps, "reverberation taps")->capture_default_str();
  app.add_option("--reps", reps, "repetitions, best is kept")
      ->capture_default_str();
  app.add_option("--threads", threads, "parallel thread cap")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const lgmsep::Spectrogram spec = random_spec(mics, frames, bins, 42);
  lgmsep::PcsgConfig pcfg;
  pcfg.num_sources = sources;
  pcfg.reverb_taps = taps;
  const lgmsep::ScmParams params = lgmsep::init_params(spec, pcfg);

  std::vector<Row> rows;

  {
    Row row;
    row.name = "em_iterate";
    lgmsep::ScmParams serial_out, parallel_out;
    lgmsep::set_num_threads(1);
    row.serial_ms =
        best_of(reps, [&] { serial_out = lgmsep::reference::em_iterate(spec, params); });
    lgmsep::set_num_threads(threads);
    row.parallel_ms =
        best_of(reps, [&] { parallel_out = lgmsep::em_iterate(spec, params); });
    row.max_diff =
        std::max(max_abs_diff(serial_out.v, parallel_out.v),
                 std::max(max_abs_diff(serial_out.R, parallel_out.R),
                          max_abs_diff(serial_out.R_n, parallel_out.R_n)));
    rows.push_back(row);
  }

  {
    Row row;
    row.name = "posterior_field";
    lgmsep::GaussianPosterior serial_out, parallel_out;
    lgmsep::set_num_threads(1);
    row.serial_ms = best_of(
        reps, [&] { serial_out = lgmsep::reference::posterior_field(spec, params); });
    lgmsep::set_num_threads(threads);
    row.parallel_ms = best_of(
        reps, [&] { parallel_out = lgmsep::posterior_field(spec, params); });
    row.max_diff = std::max(max_abs_diff(serial_out.mu, parallel_out.mu),
                            max_abs_diff(serial_out.V, parallel_out.V));
    rows.push_back(row);
  }

  {
    Row row;
    row.name = "wpe_fit (delay 2, taps 16)";
    lgmsep::WpeFitResult serial_out, parallel_out;
    lgmsep::set_num_threads(1);
    row.serial_ms = best_of(
        reps, [&] { serial_out = lgmsep::reference::wpe_fit(spec, 2, 16, 3); });
    lgmsep::set_num_threads(threads);
    row.parallel_ms =
        best_of(reps, [&] { parallel_out = lgmsep::wpe_fit(spec, 2, 16, 3); });
    double m = 0.0;
    for (int k = 0; k < bins; ++k)
      m = std::max(m, (serial_out.filter.w[static_cast<size_t>(k)] -
                       parallel_out.filter.w[static_cast<size_t>(k)])
                          .cwiseAbs()
                          .maxCoeff());
    row.max_diff = m;
    rows.push_back(row);
  }

  print_rows(rows, threads);
  return 0;
}
