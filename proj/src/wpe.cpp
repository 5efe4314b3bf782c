// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/wpe.hpp"

#include <algorithm>
#include <cmath>

#include "lgmsep/common.hpp"
#include "lgmsep/parallel.hpp"

namespace lgmsep {

namespace {

constexpr double kVarFloorRel = 1e-8;
constexpr double kGramLoadRel = 1e-6;
// The desired-signal variance is modeled constant over short frame blocks.
// Per-frame estimates would let the weighted fit cash in the log-likelihood
// reward for driving single frames to the floor, which cancels signal
// instead of reverberation.
constexpr int kVarBlockFrames = 8;

// Stacked delayed regressor for frame l at frequency k, zero before frame 0.
void fill_regressor(const Spectrogram& spec, int k, int l, int delay, int taps,
                    Eigen::VectorXcd* out) {
  const int nm = spec.num_channels;
  out->setZero();
  int row = 0;
  for (int d = delay; d < taps; ++d, row += nm) {
    const int src = l - d;
    if (src < 0) continue;
    for (int m = 0; m < nm; ++m) (*out)(row + m) = spec.at(src, k, m);
  }
}

}  // namespace

WpeFitResult wpe_fit(const Spectrogram& spec, int delay, int taps, int iters) {
  if (delay < 1 || taps <= delay)
    throw UsageError("wpe_fit: need 1 <= delay < taps");
  if (iters < 1) throw UsageError("wpe_fit: iters must be >= 1");
  if (spec.num_frames < taps + 8)
    throw UsageError("wpe_fit: too few frames for the requested filter");

  const int nm = spec.num_channels;
  const int num_k = spec.num_bins;
  const int num_l = spec.num_frames;
  const int p = nm * (taps - delay);

  WpeFitResult res;
  res.filter.num_channels = nm;
  res.filter.num_bins = num_k;
  res.filter.delay = delay;
  res.filter.taps = taps;
  res.filter.w.assign(num_k, Eigen::MatrixXcd::Zero(nm, p));
  // objective[it][k], reduced serially afterwards for determinism
  std::vector<double> obj(static_cast<size_t>(iters) * num_k, 0.0);

  parallel_for(num_k, [&](int k) {
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(nm, p);
    Eigen::VectorXcd reg(p);
    Eigen::MatrixXcd gram(p, p);
    Eigen::MatrixXcd cross(p, nm);
    std::vector<double> lam(num_l);

    double mean_power = 0.0;
    for (int l = 0; l < num_l; ++l)
      mean_power += spec.bin_vec(l, k).squaredNorm();
    mean_power /= static_cast<double>(num_l) * nm;
    const double lam_floor = kVarFloorRel * mean_power;

    for (int it = 0; it < iters; ++it) {
      // variance step on the current residual, block-constant maximum
      // likelihood: each block's variance is its mean residual power
      for (int l = 0; l < num_l; ++l) {
        fill_regressor(spec, k, l, delay, taps, &reg);
        const SmallVec resid = spec.bin_vec(l, k) - w * reg;
        lam[l] = resid.squaredNorm() / nm;
      }
      for (int b = 0; b < num_l; b += kVarBlockFrames) {
        const int e = std::min(num_l, b + kVarBlockFrames);
        double acc = 0.0;
        for (int l = b; l < e; ++l) acc += lam[l];
        const double blk = std::max(lam_floor, acc / (e - b));
        for (int l = b; l < e; ++l) lam[l] = blk;
      }
      // weighted least squares for the filter
      gram.setZero();
      cross.setZero();
      for (int l = 0; l < num_l; ++l) {
        fill_regressor(spec, k, l, delay, taps, &reg);
        const double wgt = 1.0 / lam[l];
        gram.noalias() += wgt * (reg * reg.adjoint());
        cross.noalias() += wgt * (reg * spec.bin_vec(l, k).adjoint());
      }
      const double load = kGramLoadRel * gram.real().trace() / p;
      gram.diagonal().array() += load;
      w = gram.ldlt().solve(cross).adjoint();

      double j = 0.0;
      for (int l = 0; l < num_l; ++l) {
        fill_regressor(spec, k, l, delay, taps, &reg);
        const SmallVec resid = spec.bin_vec(l, k) - w * reg;
        j += resid.squaredNorm() / lam[l] + nm * std::log(lam[l]);
      }
      obj[static_cast<size_t>(it) * num_k + k] = j;
    }
    res.filter.w[k] = w;
  });

  res.objective.resize(iters);
  for (int it = 0; it < iters; ++it) {
    double sum = 0.0;
    for (int k = 0; k < num_k; ++k)
      sum += obj[static_cast<size_t>(it) * num_k + k];
    res.objective[it] = sum;
  }
  return res;
}

Spectrogram wpe_apply(const Spectrogram& spec, const WpeFilter& filter) {
  if (filter.num_channels != spec.num_channels ||
      filter.num_bins != spec.num_bins)
    throw UsageError("wpe_apply: filter geometry does not match input");

  Spectrogram out = spec;
  out.kind = SpecKind::dereverberated;
  parallel_for(spec.num_bins, [&](int k) {
    Eigen::VectorXcd reg(filter.regressor_dim());
    for (int l = 0; l < spec.num_frames; ++l) {
      fill_regressor(spec, k, l, filter.delay, filter.taps, &reg);
      const SmallVec resid = spec.bin_vec(l, k) - filter.w[k] * reg;
      for (int m = 0; m < spec.num_channels; ++m) out.at(l, k, m) = resid(m);
    }
  });
  return out;
}

Spectrogram wpe_dereverberate(const Spectrogram& spec, int delay, int taps,
                              int iters) {
  return wpe_apply(spec, wpe_fit(spec, delay, taps, iters).filter);
}

}  // namespace lgmsep
