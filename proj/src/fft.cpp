// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/fft.hpp"

#include <cmath>
#include <numbers>

namespace lgmsep::fft {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

void transform(std::span<cd> a, bool inv) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * std::numbers::pi / len * (inv ? 1.0 : -1.0);
    const cd wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        cd u = a[i + j];
        cd v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inv) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

}  // namespace

void forward(std::span<cd> data) {
  if (!is_power_of_two(static_cast<int>(data.size())))
    throw NumericError("fft: size must be a power of two");
  transform(data, false);
}

void inverse(std::span<cd> data) {
  if (!is_power_of_two(static_cast<int>(data.size())))
    throw NumericError("fft: size must be a power of two");
  transform(data, true);
}

std::vector<cd> real_forward(std::span<const double> samples) {
  const int n = static_cast<int>(samples.size());
  std::vector<cd> buf(samples.begin(), samples.end());
  forward(buf);
  buf.resize(n / 2 + 1);
  return buf;
}

std::vector<double> real_inverse(std::span<const cd> bins, int n) {
  if (static_cast<int>(bins.size()) != n / 2 + 1)
    throw NumericError("irfft: bin count does not match transform size");
  std::vector<cd> buf(n);
  for (int k = 0; k <= n / 2; ++k) buf[k] = bins[k];
  for (int k = n / 2 + 1; k < n; ++k) buf[k] = std::conj(bins[n - k]);
  inverse(buf);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace lgmsep::fft
