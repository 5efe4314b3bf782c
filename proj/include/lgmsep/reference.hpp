// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_REFERENCE_HPP
#define LGMSEP_REFERENCE_HPP

#include "lgmsep/lgm.hpp"
#include "lgmsep/wpe.hpp"

// Plain serial implementations of the per-frequency kernels, written
// independently of the parallel versions. They are the comparison baseline
// for correctness tests and the benchmark target.
namespace lgmsep::reference {

ScmParams em_iterate(const Spectrogram& spec, const ScmParams& params);

GaussianPosterior posterior_field(const Spectrogram& spec,
                                  const ScmParams& params);

WpeFitResult wpe_fit(const Spectrogram& spec, int delay = 2, int taps = 16,
                     int iters = 3);

}  // namespace lgmsep::reference

#endif  // LGMSEP_REFERENCE_HPP
