// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_SIMULATE_HPP
#define LGMSEP_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lgmsep/tf_signal.hpp"

namespace lgmsep {

// Synthetic room response: a unit direct path at a per-microphone integer
// delay followed by a Gaussian tail whose envelope decays to -60 dB at rt60.
// tail_gain sets the square root of the tail-to-direct energy ratio, so the
// default gives a direct-to-reverberant ratio of +6 dB.
struct RirSpec {
  int num_mics = 2;
  std::vector<int> direct_delay;  // samples, one per mic
  double rt60 = 0.36;             // seconds
  double tail_gain = 0.5;
  int taps = 2048;
  double sample_rate = 8000.0;
};

std::vector<std::vector<double>> synth_rir(const RirSpec& spec,
                                           uint64_t seed);

// Voiced-harmonic test source with syllabic amplitude bursts and occasional
// noise bursts; distinct seeds give distinct envelopes.
std::vector<double> synth_speech_like(long num_samples, double sample_rate,
                                      uint64_t seed);

struct SceneConfig {
  int num_sources = 2;
  int num_mics = 2;
  double duration = 3.0;       // seconds
  double sample_rate = 8000.0;
  double rt60 = 0.36;
  double sir_db = 0.0;         // power of source 0 over each interferer
  double snr_db = 20.0;        // summed images over noise; +inf disables noise
  uint64_t seed = 0;
};

struct MixtureScene {
  std::vector<std::vector<double>> sources;            // dry, [i][t]
  std::vector<std::vector<std::vector<double>>> rirs;  // [i][mic][tap]
  std::vector<MultichannelWave> images;                // reverberant per source
  MultichannelWave noise;
  MultichannelWave mixture;  // exact sum of images and noise
  SceneConfig config;
};

// Renders sources through their rooms, scales interferers to the requested
// SIR, adds white noise at the requested SNR, and sums sample-exactly.
MixtureScene make_scene(const SceneConfig& cfg);

// Same, but with caller-provided dry sources (each at least duration long).
MixtureScene make_scene_from_sources(
    const SceneConfig& cfg, const std::vector<std::vector<double>>& dry);

// Directory layout: mixture.wav, source_<i>_image.wav, noise.wav and a
// scene.json description. Float samples keep the mixture identity intact.
void write_scene(const std::string& dir, const MixtureScene& scene);

struct LoadedScene {
  MultichannelWave mixture;
  std::vector<MultichannelWave> images;
  MultichannelWave noise;  // empty channels when the scene was noise-free
};

LoadedScene read_scene(const std::string& dir);

}  // namespace lgmsep

#endif  // LGMSEP_SIMULATE_HPP
