// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/mask_net.hpp"

#include <cmath>
#include <random>

#include "lgmsep/parallel.hpp"

namespace lgmsep {

namespace {

void check_config(const MaskNetConfig& cfg) {
  if (cfg.num_sources < 1 || cfg.reverb_taps < 0 || cfg.num_bins < 1 ||
      cfg.context_radius < 0 || cfg.hidden.empty())
    throw UsageError("MaskNetConfig: invalid configuration");
  for (int h : cfg.hidden)
    if (h < 1) throw UsageError("MaskNetConfig: hidden sizes must be >= 1");
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::tanh_act) return z.array().tanh();
  return z.cwiseMax(0.0);
}

}  // namespace

size_t MaskNetParams::num_parameters() const {
  size_t n = 0;
  for (const auto& w : weights) n += static_cast<size_t>(w.size());
  for (const auto& b : biases) n += static_cast<size_t>(b.size());
  return n;
}

void MaskNetParams::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

double MaskNetParams::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

MaskNetParams init_mask_net(const MaskNetConfig& cfg, int feature_dim,
                            uint64_t seed) {
  check_config(cfg);
  if (feature_dim < 1) throw UsageError("init_mask_net: feature_dim < 1");

  std::vector<int> dims;
  dims.push_back(cfg.input_dim(feature_dim));
  for (int h : cfg.hidden) dims.push_back(h);

  MaskNetParams p;
  std::mt19937_64 rng(mix_seed(seed, 0x6d61736b));
  auto glorot = [&rng](int fan_in, int fan_out) {
    Eigen::MatrixXd w(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uni(-limit, limit);
    for (int c = 0; c < fan_out; ++c)
      for (int r = 0; r < fan_in; ++r) w(r, c) = uni(rng);
    return w;
  };

  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    p.weights.push_back(glorot(dims[i], dims[i + 1]));
    p.biases.push_back(Eigen::VectorXd::Zero(dims[i + 1]));
  }
  const int last = dims.back();
  p.weights.push_back(glorot(last, cfg.mask_out_dim()));
  p.biases.push_back(Eigen::VectorXd::Zero(cfg.mask_out_dim()));
  p.weights.push_back(glorot(last, cfg.var_out_dim()));
  p.biases.push_back(Eigen::VectorXd::Zero(cfg.var_out_dim()));
  return p;
}

MaskSet net_forward(const FeatureFrameSeq& feats, const MaskNetParams& params,
                    const MaskNetConfig& cfg,
                    const std::vector<double>& power_scale,
                    NetForwardCache* cache) {
  check_config(cfg);
  const int num_l = feats.num_frames;
  const int num_k = feats.num_bins;
  const int f_dim = feats.dim();
  if (num_k != cfg.num_bins)
    throw UsageError("net_forward: feature bins do not match configuration");
  if (static_cast<int>(power_scale.size()) != num_k)
    throw UsageError("net_forward: power_scale size mismatch");
  const int in_dim = cfg.input_dim(f_dim);
  if (params.weights.empty() || params.weights[0].rows() != in_dim)
    throw UsageError("net_forward: parameter shape does not match features");

  // per-band shift keeps log magnitudes near zero regardless of input level
  Eigen::MatrixXd norm_feats = feats.features;
  if (cfg.normalize_logmag) {
    for (int k = 0; k < num_k; ++k) {
      const double shift = 0.5 * std::log(std::max(power_scale[k], 1e-20));
      norm_feats.col(feats.logmag_col(k)).array() -= shift;
    }
  }

  Eigen::MatrixXd input(num_l, in_dim);
  const int r = cfg.context_radius;
  for (int l = 0; l < num_l; ++l)
    for (int o = -r; o <= r; ++o) {
      const int src = std::min(std::max(l + o, 0), num_l - 1);
      input.block(l, (o + r) * f_dim, 1, f_dim) = norm_feats.row(src);
    }

  const int num_hidden = params.num_hidden();
  std::vector<Eigen::MatrixXd> hidden(num_hidden);
  const Eigen::MatrixXd* prev = &input;
  for (int i = 0; i < num_hidden; ++i) {
    Eigen::MatrixXd z = (*prev * params.weights[i]).rowwise() +
                        params.biases[i].transpose();
    hidden[i] = activate(z, cfg.activation);
    if (!hidden[i].allFinite())
      throw NumericError("net_forward: non-finite activation in layer " +
                         std::to_string(i));
    prev = &hidden[i];
  }
  Eigen::MatrixXd mask_logits = (*prev * params.mask_head()).rowwise() +
                                params.biases[num_hidden].transpose();
  Eigen::MatrixXd var_logits = (*prev * params.var_head()).rowwise() +
                               params.biases[num_hidden + 1].transpose();
  if (!mask_logits.allFinite() || !var_logits.allFinite())
    throw NumericError("net_forward: non-finite head output");

  MaskSet out;
  out.num_sources = cfg.num_sources;
  out.reverb_taps = cfg.reverb_taps;
  out.num_frames = num_l;
  out.num_bins = num_k;
  const int nc = cfg.mask_categories();
  out.m.resize(static_cast<size_t>(num_l) * num_k * nc);
  out.v_q.resize(static_cast<size_t>(cfg.num_sources) * num_k * num_l);

  for (int l = 0; l < num_l; ++l)
    for (int k = 0; k < num_k; ++k) {
      double mx = -1e300;
      for (int c = 0; c < nc; ++c)
        mx = std::max(mx, mask_logits(l, k * nc + c));
      double sum = 0.0;
      for (int c = 0; c < nc; ++c) {
        const double e = std::exp(mask_logits(l, k * nc + c) - mx);
        out.mask(l, k, c) = e;
        sum += e;
      }
      for (int c = 0; c < nc; ++c) out.mask(l, k, c) /= sum;
    }

  for (int i = 0; i < cfg.num_sources; ++i)
    for (int k = 0; k < num_k; ++k)
      for (int l = 0; l < num_l; ++l) {
        const double vq =
            std::exp(var_logits(l, k * cfg.num_sources + i)) * power_scale[k];
        if (!std::isfinite(vq))
          throw NumericError("net_forward: non-finite variance output");
        out.v_q[(static_cast<size_t>(i) * num_k + k) * num_l + l] = vq;
      }

  if (cache) {
    cache->input = std::move(input);
    cache->hidden = std::move(hidden);
    cache->mask_logits = std::move(mask_logits);
    cache->var_logits = std::move(var_logits);
  }
  return out;
}

ScmParams masks_to_scm(const Spectrogram& spec, const MaskSet& masks,
                       int* fallback_count) {
  if (masks.num_frames != spec.num_frames || masks.num_bins != spec.num_bins)
    throw UsageError("masks_to_scm: mask geometry does not match input");
  const int nm = spec.num_channels;
  const int ns = masks.num_sources;
  const int lr = masks.reverb_taps;
  const int nc = masks.categories();
  const int num_l = spec.num_frames;

  ScmParams params;
  params.resize(ns, num_l, spec.num_bins, nm, lr);
  params.v = masks.v_q;

  std::vector<int> fallbacks(spec.num_bins, 0);
  parallel_for(spec.num_bins, [&](int k) {
    std::vector<SmallMat> acc(nc, SmallMat::Zero(nm, nm));
    std::vector<double> wsum(nc, 0.0);
    SmallMat uniform = SmallMat::Zero(nm, nm);
    SmallMat outer(nm, nm);
    for (int l = 0; l < num_l; ++l) {
      const SmallVec x = spec.bin_vec(l, k);
      outer.noalias() = x * x.adjoint();
      uniform += outer;
      for (int c = 0; c < nc; ++c) {
        const double w = masks.mask(l, k, c);
        acc[c].noalias() += w * outer;
        wsum[c] += w;
      }
    }
    uniform /= num_l;
    auto resolve = [&](int c) -> SmallMat {
      if (wsum[c] <= 1e-300) {
        ++fallbacks[k];
        return hermitize(uniform);
      }
      return hermitize(acc[c] / wsum[c]);
    };
    for (int i = 0; i < ns; ++i) {
      params.R_at(i, k) = resolve(component_direct(i));
      for (int d = 0; d < lr; ++d)
        params.H_at(i, d, k) = resolve(component_reverb(ns, lr, i, d));
    }
    params.Rn_at(k) = resolve(component_noise(ns, lr));
  });
  if (fallback_count) {
    *fallback_count = 0;
    for (int f : fallbacks) *fallback_count += f;
  }
  return params;
}

InferResult infer_and_refine(const Spectrogram& spec,
                             const MaskNetParams& params,
                             const MaskNetConfig& cfg, int refine_iters) {
  if (refine_iters < 0) throw UsageError("infer_and_refine: refine_iters < 0");
  const FeatureFrameSeq feats = extract_features(spec);
  const std::vector<double> scale = spec.mean_band_power();
  const MaskSet masks = net_forward(feats, params, cfg, scale);
  InferResult res;
  res.params = masks_to_scm(spec, masks);
  for (int it = 0; it < refine_iters; ++it)
    res.params = em_iterate(spec, res.params);
  res.posterior = posterior_field(spec, res.params);
  return res;
}

}  // namespace lgmsep
