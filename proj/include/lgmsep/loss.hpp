// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_LOSS_HPP
#define LGMSEP_LOSS_HPP

#include <string>
#include <utility>
#include <vector>

#include "lgmsep/lgm.hpp"
#include "lgmsep/mask_net.hpp"

namespace lgmsep {

enum class LossKind { kld, l2 };

// Kullback-Leibler divergence between two complex Gaussians with the q-side
// covariance inverted after an eigenvalue floor of
// max(kEigFloorRel * trace / N_m, floor_abs); the same absolute floor guards
// the p-side log determinant.
double kld_gaussian(const SmallVec& mu_p, const SmallMat& V_p,
                    const SmallVec& mu_q, const SmallMat& V_q,
                    double floor_abs = 0.0);

// Minimum-total assignment of rows (p sources) to columns (q sources) by
// exhaustive enumeration; ties resolve to the lexicographically smallest
// permutation, so a symmetric matrix maps to identity.
std::pair<std::vector<int>, double> pit_assign(const Eigen::MatrixXd& pairwise);

struct LossBreakdown {
  Eigen::MatrixXd pairwise;  // [N_s x N_s], rows = target, cols = estimate
  std::vector<int> perm;     // target i is matched with estimate perm[i]
  double total = 0.0;
};

std::string to_json(const LossBreakdown& b);

// Permutation-invariant divergences between two posterior fields (used for
// validation and tests; no gradients).
LossBreakdown kld_breakdown(const GaussianPosterior& target,
                            const GaussianPosterior& estimate,
                            double floor_abs = 0.0);
LossBreakdown l2_breakdown(const GaussianPosterior& target,
                           const GaussianPosterior& estimate);

// Gradients with respect to every network parameter, plus the head-logit
// gradients and a diagnostic norm of the covariance adjoints.
struct GradientBundle {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
  Eigen::MatrixXd d_mask_logits;  // [L x K*C]
  Eigen::MatrixXd d_var_logits;   // [L x K*N_s]
  double vq_adjoint_norm = 0.0;   // sum over bins of ||dLoss/dV_q||_F

  double squared_norm() const;
  void scale(double s);
};

// End-to-end training loss: forward the mask network, turn masks into model
// parameters, form the per-source Wiener posteriors, match them to the
// target posteriors with an utterance-level permutation, and backpropagate
// through the whole chain. The permutation is held fixed for the gradient.
std::pair<LossBreakdown, GradientBundle> loss_and_grad(
    const Spectrogram& spec, const FeatureFrameSeq& feats,
    const GaussianPosterior& target, const MaskNetParams& params,
    const MaskNetConfig& cfg, LossKind kind);

// Same forward computation without the backward pass.
LossBreakdown loss_value(const Spectrogram& spec, const FeatureFrameSeq& feats,
                         const GaussianPosterior& target,
                         const MaskNetParams& params, const MaskNetConfig& cfg,
                         LossKind kind);

struct GradCheckResult {
  double max_rel_err = 0.0;
  size_t params_checked = 0;
  std::string worst_block;
};

// Central-difference verification of the analytic gradient on a synthetic
// instance; rel error uses max(|analytic|, |numeric|, 1e-3) as denominator
// on the per-frame-normalized loss.
GradCheckResult run_gradcheck(uint64_t seed, LossKind kind, int reverb_taps,
                              int frames = 10, int bins = 5, int mics = 2,
                              int sources = 2, bool zero_params = false);

}  // namespace lgmsep

#endif  // LGMSEP_LOSS_HPP
