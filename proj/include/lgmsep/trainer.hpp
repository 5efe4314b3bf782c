// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_TRAINER_HPP
#define LGMSEP_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lgmsep/loss.hpp"
#include "lgmsep/mask_net.hpp"

namespace lgmsep {

struct TrainConfig {
  int num_sources = 2;
  int reverb_taps = 1;
  int batch_size = 128;
  int segment_len = 100;
  int steps = 2000;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  LossKind loss_kind = LossKind::kld;
  uint64_t seed = 0;
  double val_fraction = 0.1;
  int val_every = 100;
  int checkpoint_every = 500;

  // blind separation settings used when preparing targets
  int em_iters = 20;
  int wpe_delay = 2;
  int wpe_taps = 16;
  int wpe_iters = 3;
  int frame_size = 256;
  int hop = 64;

  // network shape
  std::vector<int> hidden = {256, 256};
  int context_radius = 2;
  bool normalize_logmag = true;

  MaskNetConfig net_config(int num_bins) const;
};

// Adam with bias correction; beta1 0.9, beta2 0.999, eps 1e-8.
struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long step = 0;

  void init_like(const MaskNetParams& params);
};

void adam_update(const GradientBundle& grads, double lr, MaskNetParams* params,
                 AdamState* state);

// Rescales the parameter gradient to `clip_norm` when its global L2 norm
// exceeds it; returns the pre-clip norm.
double clip_gradients(double clip_norm, GradientBundle* grads);

// Blind-separation targets for one utterance, stored one file per utterance.
struct UtteranceTargets {
  std::string name;
  Spectrogram dereverb;     // the dereverberated mixture the masks apply to
  GaussianPosterior post;   // posterior means and covariances
};

// Runs the blind pipeline (analysis, dereverberation, EM separation) over
// every utterance found in dataset_dir and writes one target file per
// utterance into out_dir. Returns the number of utterances written.
int prepare_targets(const std::string& dataset_dir, const std::string& out_dir,
                    const TrainConfig& cfg);

std::vector<std::string> list_target_files(const std::string& dir);
UtteranceTargets load_targets(const std::string& path);

// Model container round trip.
struct LoadedModel {
  MaskNetParams params;
  MaskNetConfig cfg;
  int feature_dim = 0;
  int num_mics = 0;
  int wpe_delay = 2, wpe_taps = 16, wpe_iters = 3;
  int frame_size = 256, hop = 64;
  long step = 0;
};

void save_model(const std::string& path, const MaskNetParams& params,
                const MaskNetConfig& cfg, const TrainConfig& tcfg,
                int feature_dim, int num_mics, long step,
                const AdamState* adam = nullptr,
                const std::string& rng_state = "");
LoadedModel load_model(const std::string& path, AdamState* adam = nullptr,
                       std::string* rng_state = nullptr);

struct TrainResult {
  MaskNetParams params;
  MaskNetConfig net_cfg;
  int steps_done = 0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  std::string checkpoint_path;
};

// Mini-batch training over fixed-length segments of the prepared targets,
// with a held-out validation split, gradient clipping, JSON-line logs and
// periodic checkpoints under out_dir.
TrainResult train(const std::string& target_dir, const std::string& out_dir,
                  const TrainConfig& cfg);

}  // namespace lgmsep

#endif  // LGMSEP_TRAINER_HPP
