// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_MASK_NET_HPP
#define LGMSEP_MASK_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lgmsep/lgm.hpp"
#include "lgmsep/tf_signal.hpp"

namespace lgmsep {

enum class Activation { tanh_act, relu };

// Feed-forward network that maps framewise features (with temporal context)
// to per-frame covariance mixing masks and per-source log variances.
struct MaskNetConfig {
  int num_sources = 2;
  int reverb_taps = 1;
  int num_bins = 129;
  int context_radius = 2;  // +-2 frames, edges replicated
  std::vector<int> hidden = {256, 256};
  Activation activation = Activation::tanh_act;
  // shift log magnitudes by the per-band log power scale before the first
  // layer so tanh units start in their linear range
  bool normalize_logmag = true;

  // mask categories per T-F frame: direct per source, reverberation per
  // source and lag, one noise slot
  int mask_categories() const { return num_sources * (1 + reverb_taps) + 1; }
  int input_dim(int feature_dim) const {
    return feature_dim * (2 * context_radius + 1);
  }
  int mask_out_dim() const { return num_bins * mask_categories(); }
  int var_out_dim() const { return num_bins * num_sources; }
};

// Dense layers stored uniformly: weights[0..H-1]/biases[0..H-1] hidden,
// then the mask head and the variance head.
struct MaskNetParams {
  std::vector<Eigen::MatrixXd> weights;  // [in x out]
  std::vector<Eigen::VectorXd> biases;   // [out]

  int num_hidden() const { return static_cast<int>(weights.size()) - 2; }
  Eigen::MatrixXd& mask_head() { return weights[weights.size() - 2]; }
  Eigen::MatrixXd& var_head() { return weights[weights.size() - 1]; }
  const Eigen::MatrixXd& mask_head() const {
    return weights[weights.size() - 2];
  }
  const Eigen::MatrixXd& var_head() const {
    return weights[weights.size() - 1];
  }

  size_t num_parameters() const;
  void set_zero();
  double squared_norm() const;
};

// Glorot-uniform weights, zero biases, deterministic for a given seed.
MaskNetParams init_mask_net(const MaskNetConfig& cfg, int feature_dim,
                            uint64_t seed);

// Softmax masks and exponential variances for every T-F frame.
struct MaskSet {
  int num_sources = 0;
  int reverb_taps = 0;
  int num_frames = 0;
  int num_bins = 0;
  std::vector<double> m;    // [l][k][c], c indexed like mixture components
  std::vector<double> v_q;  // [i][k][l], matches ScmParams::v

  int categories() const { return num_sources * (1 + reverb_taps) + 1; }
  double mask(int l, int k, int c) const {
    return m[(static_cast<size_t>(l) * num_bins + k) * categories() + c];
  }
  double& mask(int l, int k, int c) {
    return m[(static_cast<size_t>(l) * num_bins + k) * categories() + c];
  }
  double var(int i, int l, int k) const {
    return v_q[(static_cast<size_t>(i) * num_bins + k) * num_frames + l];
  }
};

// Intermediate activations kept for the backward pass.
struct NetForwardCache {
  Eigen::MatrixXd input;                // [L x in_dim]
  std::vector<Eigen::MatrixXd> hidden;  // post-activation, [L x h]
  Eigen::MatrixXd mask_logits;          // [L x K*C], col = k*C + c
  Eigen::MatrixXd var_logits;           // [L x K*N_s], col = k*N_s + i
};

// power_scale is the per-band mean power of the spectrogram the masks will
// be applied to; v_q = exp(logit) * power_scale[k].
MaskSet net_forward(const FeatureFrameSeq& feats, const MaskNetParams& params,
                    const MaskNetConfig& cfg,
                    const std::vector<double>& power_scale,
                    NetForwardCache* cache = nullptr);

// Mask-weighted covariance estimates: each component covariance is the
// weighted mean of frame outer products under its mask, and v comes from the
// variance head. An all-zero mask column falls back to a uniform weighting;
// fallback_count reports how many columns did.
ScmParams masks_to_scm(const Spectrogram& spec, const MaskSet& masks,
                       int* fallback_count = nullptr);

// Wiener posterior of every direct-path source under mask-derived parameters.
inline GaussianPosterior dnn_posterior(const Spectrogram& spec,
                                       const ScmParams& params) {
  return posterior_field(spec, params);
}

struct InferResult {
  ScmParams params;
  GaussianPosterior posterior;
};

// Forward pass, mask-derived parameters, optional EM refinement sweeps, and
// the resulting posterior field.
InferResult infer_and_refine(const Spectrogram& spec,
                             const MaskNetParams& params,
                             const MaskNetConfig& cfg, int refine_iters);

}  // namespace lgmsep

#endif  // LGMSEP_MASK_NET_HPP
