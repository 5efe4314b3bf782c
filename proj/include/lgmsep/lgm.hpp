// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_LGM_HPP
#define LGMSEP_LGM_HPP

#include <cstdint>
#include <vector>

#include "lgmsep/hermitian.hpp"
#include "lgmsep/tf_signal.hpp"

namespace lgmsep {

// Local Gaussian mixture parameters. Each T-F frame of the mixture is modeled
// as a zero-mean complex Gaussian whose covariance is a sum of per-component
// terms: one direct term per source (variance v * spatial covariance R), one
// late-reverberation term per source and lag d = 1..L_r (variance of frame
// l-d times covariance H), and a stationary noise term R_n.
struct ScmParams {
  int num_sources = 0;  // N_s
  int num_frames = 0;   // L
  int num_bins = 0;     // K
  int num_mics = 0;     // N_m
  int reverb_taps = 0;  // L_r (0 disables the reverberation components)

  std::vector<double> v;  // [i][k][l]
  std::vector<cd> R;      // [i][k], column-major N_m x N_m blocks
  std::vector<cd> H;      // [i][d][k] with d = 0 .. L_r-1 meaning lag d+1
  std::vector<cd> R_n;    // [k]

  void resize(int sources, int frames, int bins, int mics, int taps);
  void check() const;

  double& v_at(int i, int l, int k) {
    return v[(static_cast<size_t>(i) * num_bins + k) * num_frames + l];
  }
  double v_at(int i, int l, int k) const {
    return v[(static_cast<size_t>(i) * num_bins + k) * num_frames + l];
  }
  Eigen::Map<SmallMat> R_at(int i, int k) {
    return {R.data() + (static_cast<size_t>(i) * num_bins + k) * num_mics *
                           num_mics,
            num_mics, num_mics};
  }
  Eigen::Map<const SmallMat> R_at(int i, int k) const {
    return {R.data() + (static_cast<size_t>(i) * num_bins + k) * num_mics *
                           num_mics,
            num_mics, num_mics};
  }
  Eigen::Map<SmallMat> H_at(int i, int d, int k) {
    return {H.data() + ((static_cast<size_t>(i) * reverb_taps + d) * num_bins +
                        k) *
                           num_mics * num_mics,
            num_mics, num_mics};
  }
  Eigen::Map<const SmallMat> H_at(int i, int d, int k) const {
    return {H.data() + ((static_cast<size_t>(i) * reverb_taps + d) * num_bins +
                        k) *
                           num_mics * num_mics,
            num_mics, num_mics};
  }
  Eigen::Map<SmallMat> Rn_at(int k) {
    return {R_n.data() + static_cast<size_t>(k) * num_mics * num_mics,
            num_mics, num_mics};
  }
  Eigen::Map<const SmallMat> Rn_at(int k) const {
    return {R_n.data() + static_cast<size_t>(k) * num_mics * num_mics,
            num_mics, num_mics};
  }

  // Number of mixture components: N_s direct + N_s*L_r reverberation + noise.
  int num_components() const {
    return num_sources * (1 + reverb_taps) + 1;
  }
};

// Per-frame Gaussian posteriors of the direct-path source images.
struct GaussianPosterior {
  int num_sources = 0;
  int num_frames = 0;
  int num_bins = 0;
  int num_mics = 0;
  std::vector<cd> mu;  // [i][k][l] vectors of length N_m
  std::vector<cd> V;   // [i][k][l] column-major N_m x N_m blocks

  void resize(int sources, int frames, int bins, int mics);

  Eigen::Map<SmallVec> mu_at(int i, int l, int k) {
    return {mu.data() + ((static_cast<size_t>(i) * num_bins + k) * num_frames +
                         l) *
                            num_mics,
            num_mics};
  }
  Eigen::Map<const SmallVec> mu_at(int i, int l, int k) const {
    return {mu.data() + ((static_cast<size_t>(i) * num_bins + k) * num_frames +
                         l) *
                            num_mics,
            num_mics};
  }
  Eigen::Map<SmallMat> V_at(int i, int l, int k) {
    return {V.data() + ((static_cast<size_t>(i) * num_bins + k) * num_frames +
                        l) *
                           num_mics * num_mics,
            num_mics, num_mics};
  }
  Eigen::Map<const SmallMat> V_at(int i, int l, int k) const {
    return {V.data() + ((static_cast<size_t>(i) * num_bins + k) * num_frames +
                        l) *
                           num_mics * num_mics,
            num_mics, num_mics};
  }

  GaussianPosterior slice_frames(int begin, int count) const;
};

// Component indexing shared by the E-step and the mask head:
// 0..N_s-1 direct terms, then N_s*L_r reverberation terms (source-major),
// and the noise term last.
inline int component_direct(int i) { return i; }
inline int component_reverb(int num_sources, int reverb_taps, int i, int d) {
  return num_sources + i * reverb_taps + d;  // d = 0..L_r-1 meaning lag d+1
}
inline int component_noise(int num_sources, int reverb_taps) {
  return num_sources * (1 + reverb_taps);
}

// Posterior second moments of every component at one T-F frame.
struct ComponentMoments {
  std::vector<SmallMat> second_moment;  // indexed like the mixture components
  std::vector<SmallMat> wiener;         // the corresponding Wiener matrices
};

// Mixture covariance at frame (l, k): sum of all component covariances,
// Hermitian-symmetrized. No diagonal loading.
SmallMat assemble_scm(const ScmParams& params, int l, int k);

// Wiener posterior of component (source i direct path) at (l, k):
// W = v R (R_x)^-1, mu = W x, V = (I - W) v R. The mixture covariance inverse
// falls back to diagonal loading only when the plain inverse is unreliable.
void mwf_posterior(const SmallVec& x, const ScmParams& params, int i, int l,
                   int k, SmallVec* mu_out, SmallMat* V_out);

// E-step moments of all components at one frame (test and EM building block).
ComponentMoments e_step_moments(const SmallVec& x, const ScmParams& params,
                                int l, int k);

// One EM sweep: E-step Wiener moments under `params`, then closed-form
// updates of v, R, H and R_n with PSD eigenvalue floors. Parallel over k.
ScmParams em_iterate(const Spectrogram& spec, const ScmParams& params);

// Gaussian log-likelihood of the spectrogram under the model (monitoring).
double log_likelihood(const Spectrogram& spec, const ScmParams& params);

// Frequency-wise source ordering fixed by correlating per-source normalized
// variance envelopes against running centroids, visiting frequencies in
// descending total-variance order.
struct PermutationMap {
  // perm[k][s] = original source index assigned to aligned slot s.
  std::vector<std::vector<int>> perm;
};

PermutationMap solve_permutation(const ScmParams& params);
void apply_permutation(const PermutationMap& map, ScmParams* params);

// Posterior mean and covariance of every direct-path source at every frame.
GaussianPosterior posterior_field(const Spectrogram& spec,
                                  const ScmParams& params);

// Multichannel source-image spectrogram built from one posterior mean, with
// framing metadata copied from `geometry`.
Spectrogram posterior_mean_spec(const GaussianPosterior& post, int source,
                                const Spectrogram& geometry);

struct PcsgConfig {
  int num_sources = 2;
  int reverb_taps = 1;
  int em_iters = 20;
  uint64_t seed = 0;
};

// Deterministic seeded initialization: v from the mixture power split evenly,
// R near identity with a small random Hermitian perturbation, H small
// multiples of identity, R_n a small fraction of the per-band mean power.
ScmParams init_params(const Spectrogram& spec, const PcsgConfig& cfg);

struct PcsgResult {
  ScmParams params;
  GaussianPosterior posterior;
  std::vector<double> log_likelihood;  // one entry per EM iteration
};

// Full blind pipeline on a dereverberated spectrogram: init, EM, permutation
// alignment, posterior extraction.
PcsgResult pcsg_separate(const Spectrogram& spec, const PcsgConfig& cfg);

}  // namespace lgmsep

#endif  // LGMSEP_LGM_HPP
