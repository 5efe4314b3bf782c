// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_WPE_HPP
#define LGMSEP_WPE_HPP

#include <vector>

#include "lgmsep/tf_signal.hpp"

namespace lgmsep {

// Per-frequency MIMO linear-prediction filter. For frame l the regressor
// stacks the delayed frames x_{l-D} ... x_{l-L_d+1} (zero padded before the
// start), so each w[k] has shape [N_m x N_m*(L_d - D)].
struct WpeFilter {
  int num_channels = 0;
  int num_bins = 0;
  int delay = 2;  // D
  int taps = 16;  // L_d
  std::vector<Eigen::MatrixXcd> w;

  int regressor_dim() const { return num_channels * (taps - delay); }
};

struct WpeFitResult {
  WpeFilter filter;
  // Weighted prediction-error objective summed over frequencies, one entry
  // per iteration; non-increasing.
  std::vector<double> objective;
};

// Alternating variance / weighted-least-squares estimation. The desired
// signal variance is estimated per block of 8 frames (short-time
// stationarity), which keeps the alternation an exact coordinate descent
// and avoids per-frame variance degeneracies.
WpeFitResult wpe_fit(const Spectrogram& spec, int delay = 2, int taps = 16,
                     int iters = 3);

Spectrogram wpe_apply(const Spectrogram& spec, const WpeFilter& filter);

// fit + apply
Spectrogram wpe_dereverberate(const Spectrogram& spec, int delay = 2,
                              int taps = 16, int iters = 3);

}  // namespace lgmsep

#endif  // LGMSEP_WPE_HPP
