// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_FFT_HPP
#define LGMSEP_FFT_HPP

#include <span>
#include <vector>

#include "lgmsep/common.hpp"

namespace lgmsep::fft {

// In-place radix-2 complex FFT. n must be a power of two.
void forward(std::span<cd> data);
void inverse(std::span<cd> data);

// Real transform of n samples into n/2+1 bins and back. The inverse fills
// the Hermitian half internally. Both are safe to call concurrently on
// distinct buffers.
std::vector<cd> real_forward(std::span<const double> samples);
std::vector<double> real_inverse(std::span<const cd> bins, int n);

bool is_power_of_two(int n);

}  // namespace lgmsep::fft

#endif  // LGMSEP_FFT_HPP
