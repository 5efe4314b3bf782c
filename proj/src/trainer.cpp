// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "lgmsep/checkpoint.hpp"
#include "lgmsep/parallel.hpp"
#include "lgmsep/wav_io.hpp"
#include "lgmsep/wpe.hpp"

namespace fs = std::filesystem;

namespace lgmsep {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::int64_t> mat_shape(const Eigen::MatrixXd& m) {
  return {m.rows(), m.cols()};
}

void put_matrix(Checkpoint* ck, const std::string& name,
                const Eigen::MatrixXd& m) {
  ck->put_f8(name, mat_shape(m), {m.data(), static_cast<size_t>(m.size())});
}

void put_vector(Checkpoint* ck, const std::string& name,
                const Eigen::VectorXd& v) {
  ck->put_f8(name, {v.size()}, {v.data(), static_cast<size_t>(v.size())});
}

Eigen::MatrixXd get_matrix(const Checkpoint& ck, const std::string& name) {
  const auto& e = ck.entry(name);
  if (e.shape.size() != 2)
    throw IoError("model entry " + name + " is not a matrix");
  const std::vector<double> data = ck.get_f8(name);
  return Eigen::Map<const Eigen::MatrixXd>(
      data.data(), static_cast<Eigen::Index>(e.shape[0]),
      static_cast<Eigen::Index>(e.shape[1]));
}

Eigen::VectorXd get_vector(const Checkpoint& ck, const std::string& name) {
  const std::vector<double> data = ck.get_f8(name);
  return Eigen::Map<const Eigen::VectorXd>(
      data.data(), static_cast<Eigen::Index>(data.size()));
}

std::string block_name(size_t idx, size_t num_layers, bool weight) {
  const size_t nh = num_layers - 2;
  const std::string base = weight ? "w" : "b";
  if (idx < nh) return base + std::to_string(idx);
  return idx == nh ? base + "_mask" : base + "_var";
}

struct SegmentRef {
  int utt = 0;
  int start = 0;
};

double normalizer(int batch, int sources, int frames, int bins) {
  return static_cast<double>(batch) * sources * frames * bins;
}

FeatureFrameSeq slice_features(const FeatureFrameSeq& f, int begin,
                               int count) {
  FeatureFrameSeq out;
  out.num_frames = count;
  out.num_bins = f.num_bins;
  out.mic_pairs = f.mic_pairs;
  out.features = f.features.middleRows(begin, count);
  return out;
}

}  // namespace

MaskNetConfig TrainConfig::net_config(int num_bins) const {
  MaskNetConfig net;
  net.num_sources = num_sources;
  net.reverb_taps = reverb_taps;
  net.num_bins = num_bins;
  net.context_radius = context_radius;
  net.hidden = hidden;
  net.activation = Activation::tanh_act;
  net.normalize_logmag = normalize_logmag;
  return net;
}

void AdamState::init_like(const MaskNetParams& params) {
  m_w.clear();
  v_w.clear();
  m_b.clear();
  v_b.clear();
  for (const auto& w : params.weights) {
    m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.biases) {
    m_b.push_back(Eigen::VectorXd::Zero(b.size()));
    v_b.push_back(Eigen::VectorXd::Zero(b.size()));
  }
  step = 0;
}

void adam_update(const GradientBundle& grads, double lr, MaskNetParams* params,
                 AdamState* state) {
  if (grads.d_weights.size() != params->weights.size() ||
      grads.d_biases.size() != params->biases.size())
    throw UsageError("adam_update: gradient shape mismatch");
  state->step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, state->step);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, state->step);
  for (size_t i = 0; i < params->weights.size(); ++i) {
    auto& m = state->m_w[i];
    auto& v = state->v_w[i];
    const auto& g = grads.d_weights[i];
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v.array().matrix() +
        (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    params->weights[i].array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
  }
  for (size_t i = 0; i < params->biases.size(); ++i) {
    auto& m = state->m_b[i];
    auto& v = state->v_b[i];
    const auto& g = grads.d_biases[i];
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v.array().matrix() +
        (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    params->biases[i].array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
  }
}

double clip_gradients(double clip_norm, GradientBundle* grads) {
  const double norm = std::sqrt(grads->squared_norm());
  if (clip_norm > 0.0 && norm > clip_norm && norm > 0.0)
    grads->scale(clip_norm / norm);
  return norm;
}

int prepare_targets(const std::string& dataset_dir, const std::string& out_dir,
                    const TrainConfig& cfg) {
  if (!fs::is_directory(dataset_dir))
    throw IoError("prepare_targets: dataset directory not found: " +
                  dataset_dir);
  std::vector<std::pair<std::string, std::string>> utts;  // name, wav path
  std::vector<fs::directory_entry> entries;
  for (const auto& e : fs::directory_iterator(dataset_dir))
    entries.push_back(e);
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.path() < b.path(); });
  for (const auto& e : entries) {
    if (e.is_directory()) {
      const fs::path mix = e.path() / "mixture.wav";
      if (fs::exists(mix)) utts.emplace_back(e.path().filename(), mix);
    } else if (e.path().extension() == ".wav") {
      utts.emplace_back(e.path().stem(), e.path());
    }
  }
  if (utts.empty())
    throw UsageError("prepare_targets: no utterances found in " + dataset_dir);

  fs::create_directories(out_dir);
  int written = 0;
  for (const auto& [name, path] : utts) {
    try {
      const MultichannelWave wave = read_wav(path);
      const Spectrogram mix = stft(wave, cfg.frame_size, cfg.hop);
      const Spectrogram dereverb =
          wpe_dereverberate(mix, cfg.wpe_delay, cfg.wpe_taps, cfg.wpe_iters);
      PcsgConfig pcfg;
      pcfg.num_sources = cfg.num_sources;
      pcfg.reverb_taps = cfg.reverb_taps;
      pcfg.em_iters = cfg.em_iters;
      pcfg.seed = mix_seed(cfg.seed, fnv1a(name));
      const PcsgResult res = pcsg_separate(dereverb, pcfg);

      Checkpoint ck;
      ck.meta["kind"] = "targets";
      ck.meta["utterance"] = name;
      ck.meta["seed"] = pcfg.seed;
      ck.meta["num_sources"] = cfg.num_sources;
      ck.meta["reverb_taps"] = cfg.reverb_taps;
      ck.meta["em_iters"] = cfg.em_iters;
      ck.meta["num_channels"] = dereverb.num_channels;
      ck.meta["num_frames"] = dereverb.num_frames;
      ck.meta["num_bins"] = dereverb.num_bins;
      ck.meta["frame_size"] = dereverb.frame_size;
      ck.meta["hop"] = dereverb.hop;
      ck.meta["sample_rate"] = dereverb.sample_rate;
      ck.put_c8("xtilde",
                {dereverb.num_bins, dereverb.num_frames,
                 dereverb.num_channels},
                dereverb.data);
      const auto& post = res.posterior;
      ck.put_c8("mu",
                {post.num_sources, post.num_bins, post.num_frames,
                 post.num_mics},
                post.mu);
      ck.put_c8("V",
                {post.num_sources, post.num_bins, post.num_frames,
                 post.num_mics, post.num_mics},
                post.V);
      const auto& th = res.params;
      ck.put_f4("theta.v", {th.num_sources, th.num_bins, th.num_frames},
                th.v);
      ck.put_c8("theta.R",
                {th.num_sources, th.num_bins, th.num_mics, th.num_mics},
                th.R);
      if (th.reverb_taps > 0)
        ck.put_c8("theta.H",
                  {th.num_sources, th.reverb_taps, th.num_bins, th.num_mics,
                   th.num_mics},
                  th.H);
      ck.put_c8("theta.Rn", {th.num_bins, th.num_mics, th.num_mics}, th.R_n);
      ck.save((fs::path(out_dir) / (name + ".tgt")).string());
      ++written;
      std::printf("targets: %s done (%d/%zu)\n", name.c_str(), written,
                  utts.size());
      std::fflush(stdout);
    } catch (const IoError& err) {
      std::fprintf(stderr, "targets: skipping %s: %s\n", name.c_str(),
                   err.what());
    } catch (const UsageError& err) {
      std::fprintf(stderr, "targets: skipping %s: %s\n", name.c_str(),
                   err.what());
    }
  }
  if (written == 0)
    throw UsageError("prepare_targets: every utterance failed");
  return written;
}

std::vector<std::string> list_target_files(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw IoError("target directory not found: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".tgt") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

UtteranceTargets load_targets(const std::string& path) {
  const Checkpoint ck = Checkpoint::load(path);
  UtteranceTargets t;
  t.name = ck.meta.value("utterance", fs::path(path).stem().string());
  Spectrogram& sp = t.dereverb;
  sp.num_channels = ck.meta.at("num_channels").get<int>();
  sp.num_frames = ck.meta.at("num_frames").get<int>();
  sp.num_bins = ck.meta.at("num_bins").get<int>();
  sp.frame_size = ck.meta.at("frame_size").get<int>();
  sp.hop = ck.meta.at("hop").get<int>();
  sp.sample_rate = ck.meta.at("sample_rate").get<double>();
  sp.kind = SpecKind::dereverberated;
  sp.data = ck.get_c16("xtilde");
  if (sp.data.size() != static_cast<size_t>(sp.num_channels) * sp.num_frames *
                            sp.num_bins)
    throw IoError("targets: xtilde size mismatch in " + path);
  const int ns = ck.meta.at("num_sources").get<int>();
  t.post.resize(ns, sp.num_frames, sp.num_bins, sp.num_channels);
  t.post.mu = ck.get_c16("mu");
  t.post.V = ck.get_c16("V");
  if (t.post.mu.size() != static_cast<size_t>(ns) * sp.num_bins *
                              sp.num_frames * sp.num_channels ||
      t.post.V.size() != t.post.mu.size() * sp.num_channels)
    throw IoError("targets: posterior size mismatch in " + path);
  return t;
}

void save_model(const std::string& path, const MaskNetParams& params,
                const MaskNetConfig& cfg, const TrainConfig& tcfg,
                int feature_dim, int num_mics, long step,
                const AdamState* adam, const std::string& rng_state) {
  Checkpoint ck;
  ck.meta["kind"] = "mask_net";
  ck.meta["step"] = step;
  ck.meta["num_sources"] = cfg.num_sources;
  ck.meta["reverb_taps"] = cfg.reverb_taps;
  ck.meta["num_bins"] = cfg.num_bins;
  ck.meta["context_radius"] = cfg.context_radius;
  ck.meta["hidden"] = cfg.hidden;
  ck.meta["activation"] =
      cfg.activation == Activation::tanh_act ? "tanh" : "relu";
  ck.meta["normalize_logmag"] = cfg.normalize_logmag;
  ck.meta["feature_dim"] = feature_dim;
  ck.meta["num_mics"] = num_mics;
  ck.meta["wpe_delay"] = tcfg.wpe_delay;
  ck.meta["wpe_taps"] = tcfg.wpe_taps;
  ck.meta["wpe_iters"] = tcfg.wpe_iters;
  ck.meta["frame_size"] = tcfg.frame_size;
  ck.meta["hop"] = tcfg.hop;
  if (!rng_state.empty()) ck.meta["rng"] = rng_state;
  for (size_t i = 0; i < params.weights.size(); ++i) {
    put_matrix(&ck, block_name(i, params.weights.size(), true),
               params.weights[i]);
    put_vector(&ck, block_name(i, params.biases.size(), false),
               params.biases[i]);
  }
  if (adam) {
    ck.meta["adam_step"] = adam->step;
    for (size_t i = 0; i < adam->m_w.size(); ++i) {
      const std::string suffix = block_name(i, adam->m_w.size(), true);
      put_matrix(&ck, "adam.m_" + suffix, adam->m_w[i]);
      put_matrix(&ck, "adam.v_" + suffix, adam->v_w[i]);
    }
    for (size_t i = 0; i < adam->m_b.size(); ++i) {
      const std::string suffix = block_name(i, adam->m_b.size(), false);
      put_vector(&ck, "adam.m_" + suffix, adam->m_b[i]);
      put_vector(&ck, "adam.v_" + suffix, adam->v_b[i]);
    }
  }
  ck.save(path);
}

LoadedModel load_model(const std::string& path, AdamState* adam,
                       std::string* rng_state) {
  const Checkpoint ck = Checkpoint::load(path);
  if (ck.meta.value("kind", "") != "mask_net")
    throw IoError("not a model checkpoint: " + path);
  LoadedModel m;
  m.cfg.num_sources = ck.meta.at("num_sources").get<int>();
  m.cfg.reverb_taps = ck.meta.at("reverb_taps").get<int>();
  m.cfg.num_bins = ck.meta.at("num_bins").get<int>();
  m.cfg.context_radius = ck.meta.at("context_radius").get<int>();
  m.cfg.hidden = ck.meta.at("hidden").get<std::vector<int>>();
  m.cfg.activation = ck.meta.value("activation", "tanh") == std::string("relu")
                         ? Activation::relu
                         : Activation::tanh_act;
  m.cfg.normalize_logmag = ck.meta.value("normalize_logmag", true);
  m.feature_dim = ck.meta.at("feature_dim").get<int>();
  m.num_mics = ck.meta.at("num_mics").get<int>();
  m.wpe_delay = ck.meta.value("wpe_delay", 2);
  m.wpe_taps = ck.meta.value("wpe_taps", 16);
  m.wpe_iters = ck.meta.value("wpe_iters", 3);
  m.frame_size = ck.meta.value("frame_size", 256);
  m.hop = ck.meta.value("hop", 64);
  m.step = ck.meta.value("step", 0L);
  const size_t num_layers = m.cfg.hidden.size() + 2;
  for (size_t i = 0; i < num_layers; ++i) {
    m.params.weights.push_back(get_matrix(ck, block_name(i, num_layers, true)));
    m.params.biases.push_back(get_vector(ck, block_name(i, num_layers, false)));
  }
  if (adam) {
    adam->init_like(m.params);
    if (ck.meta.contains("adam_step")) {
      adam->step = ck.meta.at("adam_step").get<long>();
      for (size_t i = 0; i < num_layers; ++i) {
        const std::string ws = block_name(i, num_layers, true);
        const std::string bs = block_name(i, num_layers, false);
        adam->m_w[i] = get_matrix(ck, "adam.m_" + ws);
        adam->v_w[i] = get_matrix(ck, "adam.v_" + ws);
        adam->m_b[i] = get_vector(ck, "adam.m_" + bs);
        adam->v_b[i] = get_vector(ck, "adam.v_" + bs);
      }
    }
  }
  if (rng_state) *rng_state = ck.meta.value("rng", "");
  return m;
}

TrainResult train(const std::string& target_dir, const std::string& out_dir,
                  const TrainConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.segment_len < 1 || cfg.steps < 0)
    throw UsageError("train: invalid batch size, segment length or steps");
  const std::vector<std::string> files = list_target_files(target_dir);
  if (files.empty())
    throw UsageError("train: no target files in " + target_dir);

  std::vector<UtteranceTargets> utts;
  utts.reserve(files.size());
  for (const auto& f : files) utts.push_back(load_targets(f));
  const int num_k = utts[0].dereverb.num_bins;
  const int num_m = utts[0].dereverb.num_channels;
  for (const auto& u : utts)
    if (u.dereverb.num_bins != num_k || u.dereverb.num_channels != num_m ||
        u.post.num_sources != cfg.num_sources)
      throw UsageError("train: inconsistent target geometry across utterances");

  // features are fixed inputs; compute once per utterance
  std::vector<FeatureFrameSeq> feats(utts.size());
  parallel_for(static_cast<int>(utts.size()), [&](int i) {
    feats[i] = extract_features(utts[i].dereverb);
  });

  const int val_count =
      utts.size() >= 2
          ? std::max(1, static_cast<int>(std::lround(cfg.val_fraction *
                                                     utts.size())))
          : 0;
  const int train_count = static_cast<int>(utts.size()) - val_count;
  if (train_count < 1) throw UsageError("train: no training utterances left");

  std::vector<SegmentRef> train_segs, val_segs;
  for (int u = 0; u < static_cast<int>(utts.size()); ++u) {
    const int num_l = utts[u].dereverb.num_frames;
    for (int s = 0; s + cfg.segment_len <= num_l; s += cfg.segment_len)
      (u < train_count ? train_segs : val_segs).push_back({u, s});
  }
  if (train_segs.empty())
    throw UsageError("train: utterances shorter than one segment");

  const MaskNetConfig net_cfg = cfg.net_config(num_k);
  MaskNetParams params =
      init_mask_net(net_cfg, feats[0].dim(), mix_seed(cfg.seed, 0x696e6974));
  AdamState adam;
  adam.init_like(params);

  fs::create_directories(out_dir);
  std::ofstream train_log(fs::path(out_dir) / "train_log.jsonl",
                          std::ios::trunc);
  std::ofstream val_log(fs::path(out_dir) / "val_log.jsonl", std::ios::trunc);
  if (!train_log || !val_log)
    throw IoError("train: cannot write logs under " + out_dir);

  auto segment_loss_grad = [&](const SegmentRef& ref, GradientBundle* g) {
    const auto& u = utts[ref.utt];
    const Spectrogram seg =
        u.dereverb.slice_frames(ref.start, ref.start + cfg.segment_len);
    const FeatureFrameSeq f =
        slice_features(feats[ref.utt], ref.start, cfg.segment_len);
    const GaussianPosterior tgt =
        u.post.slice_frames(ref.start, cfg.segment_len);
    auto [breakdown, grads] =
        loss_and_grad(seg, f, tgt, params, net_cfg, cfg.loss_kind);
    *g = std::move(grads);
    return breakdown.total;
  };
  auto segment_loss = [&](const SegmentRef& ref) {
    const auto& u = utts[ref.utt];
    const Spectrogram seg =
        u.dereverb.slice_frames(ref.start, ref.start + cfg.segment_len);
    const FeatureFrameSeq f =
        slice_features(feats[ref.utt], ref.start, cfg.segment_len);
    const GaussianPosterior tgt =
        u.post.slice_frames(ref.start, cfg.segment_len);
    return loss_value(seg, f, tgt, params, net_cfg, cfg.loss_kind).total;
  };

  auto run_validation = [&]() {
    if (val_segs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const auto& ref : val_segs) sum += segment_loss(ref);
    return sum / normalizer(static_cast<int>(val_segs.size()),
                            cfg.num_sources, cfg.segment_len, num_k);
  };

  std::mt19937_64 order_rng(mix_seed(cfg.seed, 0x6f726465));
  std::vector<int> order(train_segs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), order_rng);
  size_t cursor = 0;
  auto next_segment = [&]() -> const SegmentRef& {
    if (cursor >= order.size()) {
      std::shuffle(order.begin(), order.end(), order_rng);
      cursor = 0;
    }
    return train_segs[order[cursor++]];
  };

  TrainResult result;
  result.net_cfg = net_cfg;
  const std::string latest =
      (fs::path(out_dir) / "model_latest.ckpt").string();
  const std::string final_path =
      (fs::path(out_dir) / "model_final.ckpt").string();
  auto rng_string = [&]() {
    std::ostringstream os;
    os << order_rng;
    return os.str();
  };
  save_model(latest, params, net_cfg, cfg, feats[0].dim(), num_m, 0, &adam,
             rng_string());

  if (!val_segs.empty()) {
    result.final_val_loss = run_validation();
    val_log << "{\"step\": 0, \"val_loss\": " << result.final_val_loss
            << "}\n";
    val_log.flush();
  }

  double train_loss = std::numeric_limits<double>::quiet_NaN();
  const double norm = normalizer(cfg.batch_size, cfg.num_sources,
                                 cfg.segment_len, num_k);
  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<SegmentRef> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(next_segment());

    GradientBundle total;
    double loss_sum = 0.0;
    // chunked so peak memory stays at one bundle per worker while the
    // reduction order stays fixed
    const int chunk = std::max(1, num_threads() > 0 ? num_threads() : 1);
    std::vector<GradientBundle> partial(chunk);
    std::vector<double> partial_loss(chunk);
    for (int base = 0; base < cfg.batch_size; base += chunk) {
      const int count = std::min(chunk, cfg.batch_size - base);
      parallel_for(count, [&](int i) {
        partial_loss[i] = segment_loss_grad(batch[base + i], &partial[i]);
      });
      for (int i = 0; i < count; ++i) {
        loss_sum += partial_loss[i];
        if (total.d_weights.empty()) {
          total = std::move(partial[i]);
        } else {
          for (size_t b = 0; b < total.d_weights.size(); ++b)
            total.d_weights[b] += partial[i].d_weights[b];
          for (size_t b = 0; b < total.d_biases.size(); ++b)
            total.d_biases[b] += partial[i].d_biases[b];
          total.vq_adjoint_norm += partial[i].vq_adjoint_norm;
        }
      }
    }
    total.scale(1.0 / norm);
    train_loss = loss_sum / norm;
    const double grad_norm = clip_gradients(cfg.clip_norm, &total);

    if (!std::isfinite(train_loss) || !std::isfinite(grad_norm)) {
      train_log << "{\"step\": " << step << ", \"loss\": null, "
                << "\"grad_norm\": null, \"lr\": " << cfg.learning_rate
                << "}\n";
      train_log.flush();
      throw NumericError(
          "train: non-finite loss or gradient at step " +
          std::to_string(step) + "; last checkpoint kept at " + latest);
    }
    adam_update(total, cfg.learning_rate, &params, &adam);

    train_log << "{\"step\": " << step << ", \"loss\": " << train_loss
              << ", \"grad_norm\": " << grad_norm
              << ", \"lr\": " << cfg.learning_rate << "}\n";
    if (step % 50 == 0 || step == 1 || step == cfg.steps) {
      std::printf("step %d/%d loss %.6f grad_norm %.4f\n", step, cfg.steps,
                  train_loss, grad_norm);
      std::fflush(stdout);
      train_log.flush();
    }

    if (!val_segs.empty() &&
        (step % cfg.val_every == 0 || step == cfg.steps)) {
      result.final_val_loss = run_validation();
      val_log << "{\"step\": " << step
              << ", \"val_loss\": " << result.final_val_loss << "}\n";
      val_log.flush();
    }
    if (step % cfg.checkpoint_every == 0 || step == cfg.steps)
      save_model(latest, params, net_cfg, cfg, feats[0].dim(), num_m, step,
                 &adam, rng_string());
    result.steps_done = step;
  }

  if (cfg.steps == 0) result.final_val_loss = run_validation();
  save_model(final_path, params, net_cfg, cfg, feats[0].dim(), num_m,
             cfg.steps, &adam, rng_string());

  // per-utterance validation diagnostics on the full utterances
  std::ofstream bd_log(fs::path(out_dir) / "val_breakdown.jsonl",
                       std::ios::trunc);
  for (int u = train_count; u < static_cast<int>(utts.size()); ++u) {
    auto breakdown = loss_value(utts[u].dereverb, feats[u], utts[u].post,
                                params, net_cfg, cfg.loss_kind);
    bd_log << "{\"utterance\": \"" << utts[u].name
           << "\", \"record\": " << to_json(breakdown) << "}\n";
  }

  result.params = std::move(params);
  result.final_train_loss = train_loss;
  result.checkpoint_path = final_path;
  return result;
}

}  // namespace lgmsep
