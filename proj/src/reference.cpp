// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lgmsep::reference {

namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

Mat mixture_cov(const ScmParams& p, int l, int k) {
  Mat s = p.Rn_at(k);
  for (int i = 0; i < p.num_sources; ++i) {
    s += p.v_at(i, l, k) * Mat(p.R_at(i, k));
    for (int d = 1; d <= p.reverb_taps; ++d)
      if (l - d >= 0) s += p.v_at(i, l - d, k) * Mat(p.H_at(i, d - 1, k));
  }
  return 0.5 * (s + s.adjoint()).eval();
}

Mat stable_inverse(const Mat& s) {
  // same conditional-loading rule as the production kernels
  const SmallMat small = s;
  return wiener_inverse(small).inv;
}

}  // namespace

ScmParams em_iterate(const Spectrogram& spec, const ScmParams& params) {
  params.check();
  const int ns = params.num_sources;
  const int lr = params.reverb_taps;
  const int nm = params.num_mics;
  const int num_l = params.num_frames;

  ScmParams next;
  next.resize(ns, num_l, params.num_bins, nm, lr);
  const std::vector<double> band_power = spec.mean_band_power();

  for (int k = 0; k < params.num_bins; ++k) {
    if (band_power[k] <= 0.0) {
      for (int i = 0; i < ns; ++i) {
        next.R_at(i, k) = params.R_at(i, k);
        for (int d = 0; d < lr; ++d) next.H_at(i, d, k) = params.H_at(i, d, k);
        for (int l = 0; l < num_l; ++l)
          next.v_at(i, l, k) = params.v_at(i, l, k);
      }
      next.Rn_at(k) = params.Rn_at(k);
      continue;
    }
    const double v_floor = 1e-8 * band_power[k];

    std::vector<Mat> r_inv(ns);
    for (int i = 0; i < ns; ++i)
      r_inv[i] = stable_inverse(params.R_at(i, k));

    std::vector<Mat> r_acc(ns, Mat::Zero(nm, nm));
    std::vector<std::vector<Mat>> h_acc(
        ns, std::vector<Mat>(lr, Mat::Zero(nm, nm)));
    Mat rn_acc = Mat::Zero(nm, nm);

    for (int l = 0; l < num_l; ++l) {
      const Mat s = mixture_cov(params, l, k);
      if (s.trace().real() <= 0.0) {
        for (int i = 0; i < ns; ++i) next.v_at(i, l, k) = v_floor;
        continue;
      }
      const Mat s_inv = stable_inverse(s);
      const Vec x = spec.bin_vec(l, k);

      auto moment = [&](const Mat& c) {
        const Mat w = c * s_inv;
        const Vec mu = w * x;
        const Mat v = c - w * c;
        const Mat m = v + mu * mu.adjoint();
        return Mat(0.5 * (m + m.adjoint()));
      };

      for (int i = 0; i < ns; ++i) {
        const Mat c_dir = moment(params.v_at(i, l, k) * Mat(params.R_at(i, k)));
        const double v_new =
            std::max(v_floor, (r_inv[i] * c_dir).trace().real() / nm);
        next.v_at(i, l, k) = v_new;
        r_acc[i] += c_dir / v_new;
        for (int d = 1; d <= lr; ++d) {
          if (l - d < 0) continue;
          const Mat c_rev =
              moment(params.v_at(i, l - d, k) * Mat(params.H_at(i, d - 1, k)));
          h_acc[i][d - 1] += c_rev / next.v_at(i, l - d, k);
        }
      }
      rn_acc += moment(Mat(params.Rn_at(k)));
    }

    for (int i = 0; i < ns; ++i) {
      Mat mean_r = r_acc[i] / num_l;
      mean_r = 0.5 * (mean_r + mean_r.adjoint()).eval();
      next.R_at(i, k) = eig_floor(
          SmallMat(mean_r), kEigFloorRel * mean_r.trace().real() / nm);
      for (int d = 0; d < lr; ++d) {
        const int count = num_l - (d + 1);
        if (count < 1) {
          next.H_at(i, d, k) = params.H_at(i, d, k);
          continue;
        }
        Mat mean_h = h_acc[i][d] / count;
        mean_h = 0.5 * (mean_h + mean_h.adjoint()).eval();
        next.H_at(i, d, k) = eig_floor(
            SmallMat(mean_h), kEigFloorRel * mean_h.trace().real() / nm);
      }
    }
    Mat mean_rn = rn_acc / num_l;
    mean_rn = 0.5 * (mean_rn + mean_rn.adjoint()).eval();
    next.Rn_at(k) = eig_floor(SmallMat(mean_rn),
                              kEigFloorRel * mean_rn.trace().real() / nm);
  }
  return next;
}

GaussianPosterior posterior_field(const Spectrogram& spec,
                                  const ScmParams& params) {
  const int nm = params.num_mics;
  GaussianPosterior post;
  post.resize(params.num_sources, params.num_frames, params.num_bins, nm);
  for (int k = 0; k < params.num_bins; ++k)
    for (int l = 0; l < params.num_frames; ++l) {
      const Mat s = mixture_cov(params, l, k);
      const bool degenerate = s.trace().real() <= 0.0;
      Mat s_inv;
      if (!degenerate) s_inv = stable_inverse(s);
      for (int i = 0; i < params.num_sources; ++i) {
        const Mat b = params.v_at(i, l, k) * Mat(params.R_at(i, k));
        if (degenerate) {
          post.mu_at(i, l, k).setZero();
          post.V_at(i, l, k) = b;
          continue;
        }
        const Mat w = b * s_inv;
        const Mat v = b - w * b;
        post.mu_at(i, l, k) = w * Vec(spec.bin_vec(l, k));
        post.V_at(i, l, k) = 0.5 * (v + v.adjoint());
      }
    }
  return post;
}

WpeFitResult wpe_fit(const Spectrogram& spec, int delay, int taps,
                     int iters) {
  if (delay < 1 || taps <= delay || iters < 1)
    throw UsageError("reference::wpe_fit: invalid filter settings");
  if (spec.num_frames < taps + 8)
    throw UsageError("reference::wpe_fit: too few frames");
  const int nm = spec.num_channels;
  const int num_l = spec.num_frames;
  const int p = nm * (taps - delay);

  WpeFitResult res;
  res.filter.num_channels = nm;
  res.filter.num_bins = spec.num_bins;
  res.filter.delay = delay;
  res.filter.taps = taps;
  res.filter.w.assign(spec.num_bins, Mat::Zero(nm, p));
  res.objective.assign(iters, 0.0);

  for (int k = 0; k < spec.num_bins; ++k) {
    // stacked delayed regressors, one column per frame
    Mat regs = Mat::Zero(p, num_l);
    Mat obs(nm, num_l);
    for (int l = 0; l < num_l; ++l) {
      for (int m = 0; m < nm; ++m) obs(m, l) = spec.at(l, k, m);
      int row = 0;
      for (int d = delay; d < taps; ++d, row += nm)
        if (l - d >= 0)
          for (int m = 0; m < nm; ++m) regs(row + m, l) = spec.at(l - d, k, m);
    }

    double mean_power = 0.0;
    for (int l = 0; l < num_l; ++l) mean_power += obs.col(l).squaredNorm();
    mean_power /= static_cast<double>(num_l) * nm;
    const double lam_floor = 1e-8 * mean_power;

    Mat w = Mat::Zero(nm, p);
    Eigen::VectorXd lam(num_l);
    const int block = 8;  // frames sharing one variance estimate
    for (int it = 0; it < iters; ++it) {
      const Mat resid = obs - w * regs;
      for (int b = 0; b < num_l; b += block) {
        const int e = std::min(num_l, b + block);
        double acc = 0.0;
        for (int l = b; l < e; ++l) acc += resid.col(l).squaredNorm();
        const double blk =
            std::max(lam_floor, acc / (static_cast<double>(e - b) * nm));
        for (int l = b; l < e; ++l) lam(l) = blk;
      }
      Mat gram = Mat::Zero(p, p);
      Mat cross = Mat::Zero(p, nm);
      for (int l = 0; l < num_l; ++l) {
        gram += (regs.col(l) * regs.col(l).adjoint()) / lam(l);
        cross += (regs.col(l) * obs.col(l).adjoint()) / lam(l);
      }
      gram.diagonal().array() += 1e-6 * gram.real().trace() / p;
      w = gram.ldlt().solve(cross).adjoint();

      const Mat post_resid = obs - w * regs;
      double j = 0.0;
      for (int l = 0; l < num_l; ++l)
        j += post_resid.col(l).squaredNorm() / lam(l) +
             nm * std::log(lam(l));
      res.objective[it] += j;
    }
    res.filter.w[k] = w;
  }
  return res;
}

}  // namespace lgmsep::reference
