// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "lgmsep/wav_io.hpp"

namespace fs = std::filesystem;

namespace lgmsep {

namespace {

double signal_power(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : s / x.size();
}

double image_power(const MultichannelWave& w) {
  double s = 0.0;
  long n = 0;
  for (const auto& ch : w.samples) {
    for (double v : ch) s += v * v;
    n += static_cast<long>(ch.size());
  }
  return n > 0 ? s / n : 0.0;
}

std::vector<double> convolve(const std::vector<double>& x,
                             const std::vector<double>& h, long out_len) {
  std::vector<double> y(out_len, 0.0);
  const long nh = static_cast<long>(h.size());
  const long nx = static_cast<long>(x.size());
  for (long t = 0; t < out_len; ++t) {
    double acc = 0.0;
    const long d0 = std::max<long>(0, t - nx + 1);
    const long d1 = std::min<long>(nh - 1, t);
    for (long d = d0; d <= d1; ++d) acc += h[d] * x[t - d];
    y[t] = acc;
  }
  return y;
}

}  // namespace

std::vector<std::vector<double>> synth_rir(const RirSpec& spec,
                                           uint64_t seed) {
  if (spec.num_mics < 1 || spec.taps < 2 || spec.rt60 <= 0.0 ||
      spec.sample_rate <= 0.0)
    throw UsageError("synth_rir: invalid specification");
  if (static_cast<int>(spec.direct_delay.size()) != spec.num_mics)
    throw UsageError("synth_rir: need one direct delay per mic");

  std::vector<std::vector<double>> h(spec.num_mics,
                                     std::vector<double>(spec.taps, 0.0));
  // -60 dB amplitude decay at rt60
  const double decay = 3.0 * std::log(10.0) / (spec.rt60 * spec.sample_rate);
  for (int m = 0; m < spec.num_mics; ++m) {
    const int delay = spec.direct_delay[m];
    if (delay < 0 || delay >= spec.taps)
      throw UsageError("synth_rir: direct delay outside the response");
    std::mt19937_64 rng(mix_seed(seed, 0x726972 + m));
    std::normal_distribution<double> gauss(0.0, 1.0);
    h[m][delay] = 1.0;
    // the tail is normalized so its expected energy is tail_gain^2 relative
    // to the unit direct path; rt60 shapes the decay, not the total energy
    double env_norm = 0.0;
    for (int t = delay + 1; t < spec.taps; ++t)
      env_norm += std::exp(-2.0 * decay * (t - delay));
    const double tail_scale =
        spec.tail_gain / std::sqrt(std::max(env_norm, 1e-300));
    for (int t = delay + 1; t < spec.taps; ++t)
      h[m][t] = tail_scale * gauss(rng) * std::exp(-decay * (t - delay));
  }
  return h;
}

std::vector<double> synth_speech_like(long num_samples, double sample_rate,
                                      uint64_t seed) {
  if (num_samples < 1 || sample_rate <= 0.0)
    throw UsageError("synth_speech_like: invalid length or rate");
  std::mt19937_64 rng(mix_seed(seed, 0x737263));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> x(num_samples, 0.0);
  const double f0_base = 90.0 + 130.0 * uni(rng);
  // two fixed resonance bands per talker
  const double formant1 = 300.0 + 500.0 * uni(rng);
  const double formant2 = 1200.0 + 1500.0 * uni(rng);

  long t = 0;
  double phase_step_jitter = 0.0;
  while (t < num_samples) {
    // alternate voiced bursts and pauses with randomized lengths
    const long voiced = static_cast<long>((0.15 + 0.25 * uni(rng)) *
                                          sample_rate);
    const long pause = static_cast<long>((0.05 + 0.15 * uni(rng)) *
                                         sample_rate);
    const long seg_end = std::min(num_samples, t + voiced);
    const double f0 = f0_base * (0.85 + 0.3 * uni(rng));
    const int num_h = std::max(1, static_cast<int>(3400.0 / f0));
    std::vector<double> amp(num_h), phi(num_h);
    for (int h = 0; h < num_h; ++h) {
      const double f = f0 * (h + 1);
      double boost = 1.0;
      boost += 2.0 * std::exp(-0.5 * std::pow((f - formant1) / 150.0, 2));
      boost += 1.5 * std::exp(-0.5 * std::pow((f - formant2) / 250.0, 2));
      amp[h] = boost / (h + 1);
      phi[h] = 2.0 * kPi * uni(rng);
    }
    phase_step_jitter = 0.002 * gauss(rng);
    const long seg_len = seg_end - t;
    const bool noise_burst = uni(rng) < 0.25;
    for (long s = 0; s < seg_len; ++s) {
      // raised-cosine syllable envelope
      const double env = 0.5 - 0.5 * std::cos(2.0 * kPi * (s + 1) /
                                              (seg_len + 1));
      double v = 0.0;
      const double inst_f0 = f0 * (1.0 + phase_step_jitter * s / seg_len);
      for (int h = 0; h < num_h; ++h)
        v += amp[h] *
             std::sin(2.0 * kPi * inst_f0 * (h + 1) * s / sample_rate +
                      phi[h]);
      if (noise_burst) v += 0.6 * gauss(rng);
      x[t + s] = env * v;
    }
    t = seg_end + pause;
  }

  const double rms = std::sqrt(std::max(signal_power(x), 1e-30));
  for (double& v : x) v *= 0.1 / rms;
  return x;
}

MixtureScene make_scene_from_sources(
    const SceneConfig& cfg, const std::vector<std::vector<double>>& dry) {
  if (cfg.num_sources < 1 || cfg.num_mics < 1 || cfg.duration <= 0.0)
    throw UsageError("make_scene: invalid configuration");
  if (static_cast<int>(dry.size()) != cfg.num_sources)
    throw UsageError("make_scene: wrong number of dry sources");
  const long n = static_cast<long>(std::lround(cfg.duration *
                                               cfg.sample_rate));
  MixtureScene scene;
  scene.config = cfg;
  scene.sources.resize(cfg.num_sources);
  for (int i = 0; i < cfg.num_sources; ++i) {
    if (static_cast<long>(dry[i].size()) < n)
      throw UsageError("make_scene: dry source shorter than the scene");
    scene.sources[i].assign(dry[i].begin(), dry[i].begin() + n);
    if (signal_power(scene.sources[i]) <= 0.0)
      throw UsageError("make_scene: silent source");
  }

  // rooms: per-mic direct delays grow with source index so sources are
  // spatially distinct
  const int rir_taps = std::min<long>(
      2048, std::max<long>(64, static_cast<long>(cfg.rt60 * cfg.sample_rate)));
  for (int i = 0; i < cfg.num_sources; ++i) {
    RirSpec rs;
    rs.num_mics = cfg.num_mics;
    rs.rt60 = cfg.rt60;
    rs.taps = static_cast<int>(rir_taps);
    rs.sample_rate = cfg.sample_rate;
    for (int m = 0; m < cfg.num_mics; ++m)
      rs.direct_delay.push_back(1 + ((i + m * (i + 1)) % 7));
    scene.rirs.push_back(synth_rir(rs, mix_seed(cfg.seed, 0xa11 + i)));
  }

  // render images, then rescale interferers to the requested SIR
  scene.images.resize(cfg.num_sources);
  for (int i = 0; i < cfg.num_sources; ++i) {
    scene.images[i].sample_rate = cfg.sample_rate;
    scene.images[i].samples.resize(cfg.num_mics);
    for (int m = 0; m < cfg.num_mics; ++m)
      scene.images[i].samples[m] =
          convolve(scene.sources[i], scene.rirs[i][m], n);
  }
  const double p0 = image_power(scene.images[0]);
  for (int i = 1; i < cfg.num_sources; ++i) {
    const double pi_raw = image_power(scene.images[i]);
    if (pi_raw <= 0.0) throw UsageError("make_scene: silent source image");
    const double gain =
        std::sqrt(p0 / (pi_raw * std::pow(10.0, cfg.sir_db / 10.0)));
    for (auto& ch : scene.images[i].samples)
      for (double& v : ch) v *= gain;
    for (double& v : scene.sources[i]) v *= gain;
  }

  // white sensor noise against the summed images
  scene.noise.sample_rate = cfg.sample_rate;
  scene.noise.samples.assign(cfg.num_mics, std::vector<double>(n, 0.0));
  if (std::isfinite(cfg.snr_db)) {
    MultichannelWave summed;
    summed.samples.assign(cfg.num_mics, std::vector<double>(n, 0.0));
    for (const auto& img : scene.images)
      for (int m = 0; m < cfg.num_mics; ++m)
        for (long s = 0; s < n; ++s)
          summed.samples[m][s] += img.samples[m][s];
    const double sigma =
        std::sqrt(image_power(summed) / std::pow(10.0, cfg.snr_db / 10.0));
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x6e6f6973));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int m = 0; m < cfg.num_mics; ++m)
      for (long s = 0; s < n; ++s)
        scene.noise.samples[m][s] = sigma * gauss(rng);
  }

  scene.mixture.sample_rate = cfg.sample_rate;
  scene.mixture.samples.assign(cfg.num_mics, std::vector<double>(n, 0.0));
  for (int m = 0; m < cfg.num_mics; ++m)
    for (long s = 0; s < n; ++s) {
      double acc = 0.0;
      for (const auto& img : scene.images) acc += img.samples[m][s];
      scene.mixture.samples[m][s] = acc + scene.noise.samples[m][s];
    }
  return scene;
}

MixtureScene make_scene(const SceneConfig& cfg) {
  const long n = static_cast<long>(std::lround(cfg.duration *
                                               cfg.sample_rate));
  std::vector<std::vector<double>> dry(cfg.num_sources);
  for (int i = 0; i < cfg.num_sources; ++i)
    dry[i] = synth_speech_like(n, cfg.sample_rate,
                               mix_seed(cfg.seed, 0x647279 + i));
  return make_scene_from_sources(cfg, dry);
}

void write_scene(const std::string& dir, const MixtureScene& scene) {
  fs::create_directories(dir);
  write_wav((fs::path(dir) / "mixture.wav").string(), scene.mixture,
            WavFormat::float32);
  for (size_t i = 0; i < scene.images.size(); ++i)
    write_wav(
        (fs::path(dir) / ("source_" + std::to_string(i) + "_image.wav"))
            .string(),
        scene.images[i], WavFormat::float32);
  write_wav((fs::path(dir) / "noise.wav").string(), scene.noise,
            WavFormat::float32);

  nlohmann::json j;
  j["num_sources"] = scene.config.num_sources;
  j["num_mics"] = scene.config.num_mics;
  j["duration"] = scene.config.duration;
  j["sample_rate"] = scene.config.sample_rate;
  j["rt60"] = scene.config.rt60;
  j["sir_db"] = scene.config.sir_db;
  j["snr_db"] = std::isfinite(scene.config.snr_db)
                    ? nlohmann::json(scene.config.snr_db)
                    : nlohmann::json(nullptr);
  j["seed"] = scene.config.seed;
  std::ofstream out(fs::path(dir) / "scene.json");
  if (!out) throw IoError("write_scene: cannot write scene.json in " + dir);
  out << j.dump(2) << "\n";
}

LoadedScene read_scene(const std::string& dir) {
  LoadedScene s;
  s.mixture = read_wav((fs::path(dir) / "mixture.wav").string());
  for (int i = 0;; ++i) {
    const fs::path p =
        fs::path(dir) / ("source_" + std::to_string(i) + "_image.wav");
    if (!fs::exists(p)) break;
    s.images.push_back(read_wav(p.string()));
  }
  if (s.images.empty())
    throw IoError("read_scene: no source images in " + dir);
  const fs::path noise = fs::path(dir) / "noise.wav";
  if (fs::exists(noise)) s.noise = read_wav(noise.string());
  return s;
}

}  // namespace lgmsep
