// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_TF_SIGNAL_HPP
#define LGMSEP_TF_SIGNAL_HPP

#include <utility>
#include <vector>

#include "lgmsep/common.hpp"

namespace lgmsep {

struct MultichannelWave {
  std::vector<std::vector<double>> samples;  // [channel][t], equal lengths
  double sample_rate = 8000.0;

  int num_channels() const { return static_cast<int>(samples.size()); }
  long num_samples() const {
    return samples.empty() ? 0 : static_cast<long>(samples[0].size());
  }
  void check() const;
};

enum class SpecKind { mixture, dereverberated, source_image };

// Complex time-frequency array, stored frequency-major so per-frequency
// kernels walk contiguous memory: data[(k*L + l)*N_m + m].
struct Spectrogram {
  int num_channels = 0;  // N_m
  int num_frames = 0;    // L
  int num_bins = 0;      // K = frame_size/2 + 1
  int frame_size = 256;
  int hop = 64;
  double sample_rate = 8000.0;
  SpecKind kind = SpecKind::mixture;
  std::vector<cd> data;

  cd& at(int l, int k, int m) {
    return data[(static_cast<size_t>(k) * num_frames + l) * num_channels + m];
  }
  cd at(int l, int k, int m) const {
    return data[(static_cast<size_t>(k) * num_frames + l) * num_channels + m];
  }
  const cd* bin(int l, int k) const {
    return &data[(static_cast<size_t>(k) * num_frames + l) * num_channels];
  }
  cd* bin(int l, int k) {
    return &data[(static_cast<size_t>(k) * num_frames + l) * num_channels];
  }
  Eigen::Map<const SmallVec> bin_vec(int l, int k) const {
    return Eigen::Map<const SmallVec>(bin(l, k), num_channels);
  }
  bool same_geometry(const Spectrogram& o) const {
    return num_channels == o.num_channels && num_frames == o.num_frames &&
           num_bins == o.num_bins && frame_size == o.frame_size &&
           hop == o.hop;
  }
  // Frame range copy [begin, end), keeping metadata.
  Spectrogram slice_frames(int begin, int end) const;
  // Mean power per frequency, mean_l ||x_{l,k}||^2 / N_m.
  std::vector<double> mean_band_power() const;
};

// DNN input features: per frame the reference-channel log magnitudes over
// all bins followed by (cos, sin) phase-difference pairs for each microphone
// pair, each spanning all bins.
struct FeatureFrameSeq {
  int num_frames = 0;
  int num_bins = 0;                           // K
  std::vector<std::pair<int, int>> mic_pairs;  // (a, b), a < b
  Eigen::MatrixXd features;                    // [L x F], F = K + 2*K*P

  int dim() const { return static_cast<int>(features.cols()); }
  int logmag_col(int k) const { return k; }
  int cos_col(int pair, int k) const {
    return num_bins * (1 + 2 * pair) + k;
  }
  int sin_col(int pair, int k) const {
    return num_bins * (2 + 2 * pair) + k;
  }
};

inline constexpr double kLogMagFloor = 1e-10;

// Windowed DFT analysis with a periodic sqrt-Hann window. frame_size must be
// a power of two and divisible by hop.
Spectrogram stft(const MultichannelWave& wave, int frame_size = 256,
                 int hop = 64);

// Overlap-add synthesis with the matching sqrt-Hann synthesis window.
MultichannelWave istft(const Spectrogram& spec);

FeatureFrameSeq extract_features(const Spectrogram& spec);

}  // namespace lgmsep

#endif  // LGMSEP_TF_SIGNAL_HPP
