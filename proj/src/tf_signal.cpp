// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/tf_signal.hpp"

#include <cmath>
#include <numbers>

#include "lgmsep/fft.hpp"
#include "lgmsep/parallel.hpp"

namespace lgmsep {

void MultichannelWave::check() const {
  if (samples.empty()) throw UsageError("wave has no channels");
  if (sample_rate <= 0) throw UsageError("sample_rate must be positive");
  const size_t len = samples[0].size();
  for (const auto& ch : samples)
    if (ch.size() != len)
      throw UsageError("wave channels have unequal lengths");
}

Spectrogram Spectrogram::slice_frames(int begin, int end) const {
  Spectrogram out = *this;
  out.num_frames = end - begin;
  out.data.assign(static_cast<size_t>(out.num_frames) * num_bins *
                      num_channels,
                  cd(0.0, 0.0));
  for (int k = 0; k < num_bins; ++k)
    for (int l = begin; l < end; ++l)
      for (int m = 0; m < num_channels; ++m)
        out.at(l - begin, k, m) = at(l, k, m);
  return out;
}

std::vector<double> Spectrogram::mean_band_power() const {
  std::vector<double> p(num_bins, 0.0);
  for (int k = 0; k < num_bins; ++k) {
    double acc = 0.0;
    for (int l = 0; l < num_frames; ++l)
      for (int m = 0; m < num_channels; ++m) acc += std::norm(at(l, k, m));
    p[k] = acc / (static_cast<double>(num_frames) * num_channels);
  }
  return p;
}

namespace {

// Periodic sqrt-Hann; COLA with hop = frame/4 when used on both sides.
std::vector<double> sqrt_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n));
  return w;
}

}  // namespace

Spectrogram stft(const MultichannelWave& wave, int frame_size, int hop) {
  wave.check();
  if (!fft::is_power_of_two(frame_size))
    throw UsageError("stft: frame_size must be a power of two");
  if (hop <= 0 || frame_size % hop != 0)
    throw UsageError("stft: hop must divide frame_size");
  const long t = wave.num_samples();
  if (t < frame_size) throw UsageError("input too short");

  Spectrogram spec;
  spec.num_channels = wave.num_channels();
  spec.frame_size = frame_size;
  spec.hop = hop;
  spec.sample_rate = wave.sample_rate;
  spec.num_bins = frame_size / 2 + 1;
  spec.num_frames = static_cast<int>((t - frame_size) / hop) + 1;
  spec.data.assign(static_cast<size_t>(spec.num_frames) * spec.num_bins *
                       spec.num_channels,
                   cd(0.0, 0.0));

  const auto window = sqrt_hann(frame_size);
  const int jobs = spec.num_channels * spec.num_frames;
  parallel_for(jobs, [&](int job) {
    const int m = job / spec.num_frames;
    const int l = job % spec.num_frames;
    std::vector<double> frame(frame_size);
    const double* src = wave.samples[m].data() + static_cast<long>(l) * hop;
    for (int i = 0; i < frame_size; ++i) frame[i] = src[i] * window[i];
    auto bins = fft::real_forward(frame);
    for (int k = 0; k < spec.num_bins; ++k) spec.at(l, k, m) = bins[k];
  });
  return spec;
}

MultichannelWave istft(const Spectrogram& spec) {
  if (spec.num_channels < 1 || spec.num_frames < 1)
    throw UsageError("istft: empty spectrogram");
  if (!fft::is_power_of_two(spec.frame_size) ||
      spec.num_bins != spec.frame_size / 2 + 1)
    throw UsageError("istft: inconsistent frame metadata");

  const int n = spec.frame_size;
  const int hop = spec.hop;
  const long t = static_cast<long>(spec.num_frames - 1) * hop + n;
  const auto window = sqrt_hann(n);

  MultichannelWave wave;
  wave.sample_rate = spec.sample_rate;
  wave.samples.assign(spec.num_channels, std::vector<double>(t, 0.0));

  std::vector<double> norm(t, 0.0);
  for (int l = 0; l < spec.num_frames; ++l)
    for (int i = 0; i < n; ++i)
      norm[static_cast<long>(l) * hop + i] += window[i] * window[i];

  parallel_for(spec.num_channels, [&](int m) {
    std::vector<cd> bins(spec.num_bins);
    auto& out = wave.samples[m];
    for (int l = 0; l < spec.num_frames; ++l) {
      for (int k = 0; k < spec.num_bins; ++k) bins[k] = spec.at(l, k, m);
      auto frame = fft::real_inverse(bins, n);
      double* dst = out.data() + static_cast<long>(l) * hop;
      for (int i = 0; i < n; ++i) dst[i] += frame[i] * window[i];
    }
    for (long i = 0; i < t; ++i)
      if (norm[i] > 1e-12) out[i] /= norm[i];
  });
  return wave;
}

FeatureFrameSeq extract_features(const Spectrogram& spec) {
  FeatureFrameSeq seq;
  seq.num_frames = spec.num_frames;
  seq.num_bins = spec.num_bins;
  for (int a = 0; a < spec.num_channels; ++a)
    for (int b = a + 1; b < spec.num_channels; ++b)
      seq.mic_pairs.emplace_back(a, b);
  const int p = static_cast<int>(seq.mic_pairs.size());
  const int f = spec.num_bins * (1 + 2 * p);
  seq.features.setZero(spec.num_frames, f);

  for (int l = 0; l < spec.num_frames; ++l) {
    for (int k = 0; k < spec.num_bins; ++k) {
      seq.features(l, seq.logmag_col(k)) =
          std::log(std::abs(spec.at(l, k, 0)) + kLogMagFloor);
      for (int pi = 0; pi < p; ++pi) {
        const auto [a, b] = seq.mic_pairs[pi];
        const cd z = spec.at(l, k, a) * std::conj(spec.at(l, k, b));
        const double mag = std::abs(z);
        // Zero product encodes as zero phase difference.
        double c = 1.0, s = 0.0;
        if (mag > 0.0) {
          c = z.real() / mag;
          s = z.imag() / mag;
        }
        seq.features(l, seq.cos_col(pi, k)) = c;
        seq.features(l, seq.sin_col(pi, k)) = s;
      }
    }
  }
  return seq;
}

}  // namespace lgmsep
