// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end. Subcommands wrap the library modules; every run
// echoes its fully resolved configuration so experiments can be replayed
// from the echoed file alone. Exit codes: 0 success, 2 bad usage, 3 numeric
// failure, 4 I/O failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgmsep/checkpoint.hpp"
#include "lgmsep/common.hpp"
#include "lgmsep/lgm.hpp"
#include "lgmsep/loss.hpp"
#include "lgmsep/mask_net.hpp"
#include "lgmsep/metrics.hpp"
#include "lgmsep/parallel.hpp"
#include "lgmsep/simulate.hpp"
#include "lgmsep/tf_signal.hpp"
#include "lgmsep/trainer.hpp"
#include "lgmsep/wav_io.hpp"
#include "lgmsep/wpe.hpp"

namespace fs = std::filesystem;

namespace {

// Writes the resolved flag set of `sub` next to the run artifacts and echoes
// it to stdout; loading the same file through --config reproduces the run.
void echo_config(CLI::App* sub, const std::string& out_dir) {
  const std::string text = sub->config_to_str(true, false);
  std::cout << "# resolved " << sub->get_name() << " config\n" << text;
  if (out_dir.empty()) return;
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / "resolved_config.txt", std::ios::trunc);
  if (!f) throw lgmsep::IoError("cannot write resolved config in " + out_dir);
  f << text;
}

bool is_scene_dir(const std::string& path) {
  return fs::is_directory(path) && fs::exists(fs::path(path) / "scene.json");
}

// Channel 0 of each wave, trimmed to the shortest common length.
std::vector<std::vector<double>> reference_channel(
    const std::vector<lgmsep::MultichannelWave>& waves, long max_len) {
  long n = max_len;
  for (const auto& w : waves) n = std::min(n, w.num_samples());
  std::vector<std::vector<double>> out;
  out.reserve(waves.size());
  for (const auto& w : waves)
    out.emplace_back(w.samples[0].begin(), w.samples[0].begin() + n);
  return out;
}

void write_scm_checkpoint(const std::string& path,
                          const lgmsep::ScmParams& p) {
  lgmsep::Checkpoint ck;
  ck.meta["kind"] = "scm_params";
  ck.meta["num_sources"] = p.num_sources;
  ck.meta["num_frames"] = p.num_frames;
  ck.meta["num_bins"] = p.num_bins;
  ck.meta["num_mics"] = p.num_mics;
  ck.meta["reverb_taps"] = p.reverb_taps;
  ck.put_f8("v", {p.num_sources, p.num_bins, p.num_frames}, p.v);
  ck.put_c16("R", {p.num_sources, p.num_bins, p.num_mics, p.num_mics}, p.R);
  if (p.reverb_taps > 0)
    ck.put_c16("H",
               {p.num_sources, p.reverb_taps, p.num_bins, p.num_mics,
                p.num_mics},
               p.H);
  ck.put_c16("R_n", {p.num_bins, p.num_mics, p.num_mics}, p.R_n);
  ck.save(path);
}

// Posterior-mean source images back in the time domain, each trimmed or
// zero-padded to `num_samples`.
std::vector<lgmsep::MultichannelWave> posterior_waves(
    const lgmsep::GaussianPosterior& post, const lgmsep::Spectrogram& geom,
    long num_samples) {
  std::vector<lgmsep::MultichannelWave> waves;
  for (int i = 0; i < post.num_sources; ++i) {
    const lgmsep::Spectrogram s = lgmsep::posterior_mean_spec(post, i, geom);
    lgmsep::MultichannelWave w = lgmsep::istft(s);
    for (auto& ch : w.samples) ch.resize(static_cast<size_t>(num_samples), 0.0);
    waves.push_back(std::move(w));
  }
  return waves;
}

struct EvalInput {
  std::string name;
  std::vector<lgmsep::MultichannelWave> estimates;
  std::vector<lgmsep::MultichannelWave> references;
  double sample_rate = 8000.0;
};

lgmsep::UtteranceScore score_against_scene(const EvalInput& in) {
  long n = LONG_MAX;
  for (const auto& w : in.estimates) n = std::min(n, w.num_samples());
  for (const auto& w : in.references) n = std::min(n, w.num_samples());
  return lgmsep::score_utterance(in.name, reference_channel(in.estimates, n),
                                 reference_channel(in.references, n),
                                 in.sample_rate);
}

// --------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string out;
  int num = 20;
  std::uint64_t seed = 0;
  int sources = 2;
  int mics = 2;
  double duration = 3.0;
  double sample_rate = 8000.0;
  std::vector<double> rt60 = {0.36};
  double sir_min = -5.0, sir_max = 5.0;
  double snr_min = 20.0, snr_max = 30.0;
  bool force = false;
};

int cmd_simulate(CLI::App* sub, const SimulateArgs& a) {
  if (fs::exists(a.out) && !fs::is_empty(a.out) && !a.force)
    throw lgmsep::UsageError("output directory " + a.out +
                             " is not empty; pass --force to overwrite");
  fs::create_directories(a.out);
  echo_config(sub, a.out);

  for (int idx = 0; idx < a.num; ++idx) {
    std::mt19937_64 rng(lgmsep::mix_seed(a.seed, static_cast<uint64_t>(idx)));
    lgmsep::SceneConfig cfg;
    cfg.num_sources = a.sources;
    cfg.num_mics = a.mics;
    cfg.duration = a.duration;
    cfg.sample_rate = a.sample_rate;
    cfg.rt60 = a.rt60[std::uniform_int_distribution<size_t>(
        0, a.rt60.size() - 1)(rng)];
    cfg.sir_db =
        std::uniform_real_distribution<double>(a.sir_min, a.sir_max)(rng);
    cfg.snr_db =
        std::uniform_real_distribution<double>(a.snr_min, a.snr_max)(rng);
    cfg.seed = lgmsep::mix_seed(a.seed, 0x10000u + static_cast<uint64_t>(idx));

    const lgmsep::MixtureScene scene = lgmsep::make_scene(cfg);
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", idx);
    lgmsep::write_scene((fs::path(a.out) / name).string(), scene);
  }
  std::cout << "wrote " << a.num << " scenes under " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// separate

struct SeparateArgs {
  std::string in, out;
  int sources = 2;
  int reverb_taps = 1;
  int em_iters = 20;
  int wpe_delay = 2, wpe_taps = 16, wpe_iters = 3;
  int frame_size = 256, hop = 64;
  std::uint64_t seed = 0;
  bool eval = false;
};

int cmd_separate(CLI::App* sub, const SeparateArgs& a) {
  lgmsep::MultichannelWave mixture;
  lgmsep::LoadedScene scene;
  const bool from_scene = is_scene_dir(a.in);
  if (from_scene) {
    scene = lgmsep::read_scene(a.in);
    mixture = scene.mixture;
  } else {
    mixture = lgmsep::read_wav(a.in);
  }
  if (mixture.num_channels() < 2 && a.sources >= 2)
    throw lgmsep::UsageError("need multichannel input for " +
                             std::to_string(a.sources) + " sources");
  if (a.eval && !from_scene)
    throw lgmsep::UsageError("--eval needs a scene directory as input");

  echo_config(sub, a.out);

  const lgmsep::Spectrogram spec =
      lgmsep::stft(mixture, a.frame_size, a.hop);
  const lgmsep::Spectrogram derev =
      lgmsep::wpe_dereverberate(spec, a.wpe_delay, a.wpe_taps, a.wpe_iters);

  lgmsep::PcsgConfig cfg;
  cfg.num_sources = a.sources;
  cfg.reverb_taps = a.reverb_taps;
  cfg.em_iters = a.em_iters;
  cfg.seed = a.seed;
  const lgmsep::PcsgResult result = lgmsep::pcsg_separate(derev, cfg);

  const auto waves =
      posterior_waves(result.posterior, derev, mixture.num_samples());
  for (size_t i = 0; i < waves.size(); ++i)
    lgmsep::write_wav(
        (fs::path(a.out) / ("src" + std::to_string(i) + ".wav")).string(),
        waves[i]);
  write_scm_checkpoint((fs::path(a.out) / "params.ckpt").string(),
                       result.params);

  nlohmann::json report;
  report["log_likelihood"] = result.log_likelihood;
  if (a.eval) {
    const auto score = score_against_scene(
        {"scene", waves, scene.images, mixture.sample_rate});
    lgmsep::MetricReport mr;
    mr.rows.push_back(score);
    std::cout << mr.to_text();
    report["eval"] = nlohmann::json::parse(mr.to_json());
  }
  std::ofstream rf(fs::path(a.out) / "separate.json", std::ios::trunc);
  if (!rf) throw lgmsep::IoError("cannot write report in " + a.out);
  rf << report.dump(2) << "\n";
  std::cout << "wrote " << waves.size() << " source estimates under " << a.out
            << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string scenes, targets, out;
  lgmsep::TrainConfig cfg;
  std::vector<int> hidden = {256, 256};
  std::string loss = "kld";
};

int cmd_train(CLI::App* sub, TrainArgs& a) {
  if (a.scenes.empty() == a.targets.empty())
    throw lgmsep::UsageError("pass exactly one of --scenes or --targets");
  if (a.loss == "kld")
    a.cfg.loss_kind = lgmsep::LossKind::kld;
  else if (a.loss == "l2")
    a.cfg.loss_kind = lgmsep::LossKind::l2;
  else
    throw lgmsep::UsageError("unknown loss kind: " + a.loss);
  a.cfg.hidden = a.hidden;

  echo_config(sub, a.out);

  std::string target_dir = a.targets;
  if (!a.scenes.empty()) {
    target_dir = (fs::path(a.out) / "targets").string();
    if (fs::exists(target_dir) && !fs::is_empty(target_dir)) {
      std::cout << "reusing prepared targets in " << target_dir << "\n";
    } else {
      std::cout << "preparing targets from " << a.scenes << "\n";
      const int n = lgmsep::prepare_targets(a.scenes, target_dir, a.cfg);
      std::cout << "prepared " << n << " target files\n";
    }
  }

  const lgmsep::TrainResult r = lgmsep::train(target_dir, a.out, a.cfg);
  std::cout << "steps " << r.steps_done << ", final train loss "
            << r.final_train_loss << ", final val loss " << r.final_val_loss
            << "\ncheckpoint " << r.checkpoint_path << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// infer

struct InferArgs {
  std::string model, in, out;
  int refine = 10;
  bool eval = false;
};

int cmd_infer(CLI::App* sub, const InferArgs& a) {
  const lgmsep::LoadedModel m = lgmsep::load_model(a.model);

  lgmsep::MultichannelWave mixture;
  lgmsep::LoadedScene scene;
  const bool from_scene = is_scene_dir(a.in);
  if (from_scene) {
    scene = lgmsep::read_scene(a.in);
    mixture = scene.mixture;
  } else {
    mixture = lgmsep::read_wav(a.in);
  }
  if (mixture.num_channels() != m.num_mics)
    throw lgmsep::UsageError("model expects " + std::to_string(m.num_mics) +
                             " channels, input has " +
                             std::to_string(mixture.num_channels()));
  if (a.eval && !from_scene)
    throw lgmsep::UsageError("--eval needs a scene directory as input");

  echo_config(sub, a.out);

  const lgmsep::Spectrogram spec =
      lgmsep::stft(mixture, m.frame_size, m.hop);
  const lgmsep::Spectrogram derev =
      lgmsep::wpe_dereverberate(spec, m.wpe_delay, m.wpe_taps, m.wpe_iters);
  const lgmsep::InferResult result =
      lgmsep::infer_and_refine(derev, m.params, m.cfg, a.refine);

  const auto waves =
      posterior_waves(result.posterior, derev, mixture.num_samples());
  for (size_t i = 0; i < waves.size(); ++i)
    lgmsep::write_wav(
        (fs::path(a.out) / ("src" + std::to_string(i) + ".wav")).string(),
        waves[i]);

  nlohmann::json report;
  report["model_step"] = m.step;
  report["refine_iters"] = a.refine;
  if (a.eval) {
    const auto score = score_against_scene(
        {"scene", waves, scene.images, mixture.sample_rate});
    lgmsep::MetricReport mr;
    mr.rows.push_back(score);
    std::cout << mr.to_text();
    report["eval"] = nlohmann::json::parse(mr.to_json());
  }
  std::ofstream rf(fs::path(a.out) / "infer.json", std::ios::trunc);
  if (!rf) throw lgmsep::IoError("cannot write report in " + a.out);
  rf << report.dump(2) << "\n";
  std::cout << "wrote " << waves.size() << " source estimates under " << a.out
            << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string est, ref;
  int filter_taps = 512;
  std::string json_path, csv_path;
};

// Utterances are grouped by stem: either "<stem>.src<i>.wav" (one file per
// estimated source) or a bare "<stem>.wav".
std::map<std::string, std::vector<std::string>> group_wavs(
    const std::string& dir) {
  std::map<std::string, std::map<int, std::string>> groups;
  if (!fs::is_directory(dir))
    throw lgmsep::IoError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string fname = entry.path().filename().string();
    if (fname.size() < 4 || fname.substr(fname.size() - 4) != ".wav") continue;
    std::string stem = fname.substr(0, fname.size() - 4);
    int index = 0;
    const size_t pos = stem.rfind(".src");
    if (pos != std::string::npos) {
      try {
        index = std::stoi(stem.substr(pos + 4));
        stem = stem.substr(0, pos);
      } catch (const std::exception&) {
        // not the source-index convention; treat as a bare name
      }
    }
    groups[stem][index] = entry.path().string();
  }
  std::map<std::string, std::vector<std::string>> out;
  for (auto& [stem, by_index] : groups) {
    auto& v = out[stem];
    for (auto& [idx, path] : by_index) v.push_back(path);
  }
  return out;
}

int cmd_evaluate(CLI::App* sub, const EvaluateArgs& a) {
  echo_config(sub, "");
  const auto est_groups = group_wavs(a.est);
  const auto ref_groups = group_wavs(a.ref);

  std::vector<std::string> names;
  for (const auto& [stem, files] : est_groups) {
    const auto it = ref_groups.find(stem);
    if (it == ref_groups.end()) {
      std::cerr << "warning: no reference for " << stem << ", skipped\n";
      continue;
    }
    if (it->second.size() != files.size())
      throw lgmsep::UsageError("utterance " + stem + " has " +
                               std::to_string(files.size()) +
                               " estimates but " +
                               std::to_string(it->second.size()) +
                               " references");
    names.push_back(stem);
  }
  if (names.empty())
    throw lgmsep::UsageError("no utterances common to both directories");

  lgmsep::MetricReport report;
  report.rows.resize(names.size());
  std::vector<std::string> errors(names.size());
  lgmsep::parallel_for(static_cast<int>(names.size()), [&](int u) {
    try {
      EvalInput in;
      in.name = names[static_cast<size_t>(u)];
      for (const auto& p : est_groups.at(in.name))
        in.estimates.push_back(lgmsep::read_wav(p));
      for (const auto& p : ref_groups.at(in.name))
        in.references.push_back(lgmsep::read_wav(p));
      in.sample_rate = in.references[0].sample_rate;
      long n = LONG_MAX;
      for (const auto& w : in.estimates) n = std::min(n, w.num_samples());
      for (const auto& w : in.references) n = std::min(n, w.num_samples());
      report.rows[static_cast<size_t>(u)] = lgmsep::score_utterance(
          in.name, reference_channel(in.estimates, n),
          reference_channel(in.references, n), in.sample_rate);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(u)] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw lgmsep::NumericError("evaluate: " + e);

  std::cout << report.to_text();
  if (!a.json_path.empty()) {
    std::ofstream f(a.json_path, std::ios::trunc);
    if (!f) throw lgmsep::IoError("cannot write " + a.json_path);
    f << report.to_json() << "\n";
  }
  if (!a.csv_path.empty()) {
    std::ofstream f(a.csv_path, std::ios::trunc);
    if (!f) throw lgmsep::IoError("cannot write " + a.csv_path);
    f << report.to_csv();
  }
  return 0;
}

// --------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 3;
  int num_seeds = 1;
  std::vector<int> reverb_taps = {1};
  std::vector<std::string> losses = {"kld"};
  int frames = 10, bins = 5, mics = 2, sources = 2;
  bool zero_init = false;
  double threshold = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  double worst = 0.0;
  std::string worst_desc;
  for (int s = 0; s < a.num_seeds; ++s) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(s);
    for (int taps : a.reverb_taps) {
      for (const auto& name : a.losses) {
        lgmsep::LossKind kind;
        if (name == "kld")
          kind = lgmsep::LossKind::kld;
        else if (name == "l2")
          kind = lgmsep::LossKind::l2;
        else
          throw lgmsep::UsageError("unknown loss kind: " + name);
        const auto res =
            lgmsep::run_gradcheck(seed, kind, taps, a.frames, a.bins, a.mics,
                                  a.sources, a.zero_init);
        std::printf(
            "seed %llu  taps %d  %-3s  max_rel_err %.3e  (%zu params, worst "
            "block %s)\n",
            static_cast<unsigned long long>(seed), taps, name.c_str(),
            res.max_rel_err, res.params_checked, res.worst_block.c_str());
        if (res.max_rel_err > worst) {
          worst = res.max_rel_err;
          worst_desc = "seed " + std::to_string(seed) + " taps " +
                       std::to_string(taps) + " " + name;
        }
      }
    }
  }
  const bool ok = worst <= a.threshold;
  std::printf("max_rel_err %.3e %s %.0e (%s)\n", worst, ok ? "<=" : ">",
              a.threshold, worst_desc.c_str());
  if (!ok) throw lgmsep::NumericError("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lgmsep: multichannel speech separation experiments"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "worker thread cap; 0 = library default, 1 = bit-exact")
      ->capture_default_str();

  SimulateArgs sim;
  CLI::App* s_sim = app.add_subcommand("simulate", "render synthetic scenes");
  s_sim->add_option("--out", sim.out, "output directory")->required();
  s_sim->add_option("--num", sim.num, "number of scenes")
      ->capture_default_str();
  s_sim->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  s_sim->add_option("--sources", sim.sources, "sources per scene")
      ->capture_default_str();
  s_sim->add_option("--mics", sim.mics, "microphones")->capture_default_str();
  s_sim->add_option("--duration", sim.duration, "seconds per scene")
      ->capture_default_str();
  s_sim->add_option("--sample-rate", sim.sample_rate, "Hz")
      ->capture_default_str();
  s_sim->add_option("--rt60", sim.rt60,
                    "reverberation times; one is drawn per scene")
      ->delimiter(',')
      ->capture_default_str();
  s_sim->add_option("--sir-min", sim.sir_min, "dB")->capture_default_str();
  s_sim->add_option("--sir-max", sim.sir_max, "dB")->capture_default_str();
  s_sim->add_option("--snr-min", sim.snr_min, "dB")->capture_default_str();
  s_sim->add_option("--snr-max", sim.snr_max, "dB")->capture_default_str();
  s_sim->add_flag("--force", sim.force, "overwrite a non-empty directory");

  SeparateArgs sep;
  CLI::App* s_sep =
      app.add_subcommand("separate", "blind separation of one mixture");
  s_sep->add_option("--in", sep.in, "mixture WAV or scene directory")
      ->required();
  s_sep->add_option("--out", sep.out, "output directory")->required();
  s_sep->add_option("--sources", sep.sources, "number of sources")
      ->capture_default_str();
  s_sep->add_option("--lr", sep.reverb_taps, "reverberation taps L_r")
      ->capture_default_str();
  s_sep->add_option("--em-iters", sep.em_iters, "EM iterations")
      ->capture_default_str();
  s_sep->add_option("--wpe-delay", sep.wpe_delay, "prediction delay")
      ->capture_default_str();
  s_sep->add_option("--wpe-taps", sep.wpe_taps, "prediction taps")
      ->capture_default_str();
  s_sep->add_option("--wpe-iters", sep.wpe_iters, "variance refits")
      ->capture_default_str();
  s_sep->add_option("--frame-size", sep.frame_size, "analysis frame")
      ->capture_default_str();
  s_sep->add_option("--hop", sep.hop, "analysis hop")->capture_default_str();
  s_sep->add_option("--seed", sep.seed, "initialization seed")
      ->capture_default_str();
  s_sep->add_flag("--eval", sep.eval,
                  "score against the scene's source images");

  TrainArgs tr;
  CLI::App* s_tr = app.add_subcommand("train", "train the mask network");
  s_tr->add_option("--scenes", tr.scenes,
                   "scene directory; targets are prepared (and cached) "
                   "under --out/targets");
  s_tr->add_option("--targets", tr.targets, "prepared target directory");
  s_tr->add_option("--out", tr.out, "run directory")->required();
  s_tr->add_option("--sources", tr.cfg.num_sources, "number of sources")
      ->capture_default_str();
  s_tr->add_option("--lr", tr.cfg.reverb_taps, "reverberation taps L_r")
      ->capture_default_str();
  s_tr->add_option("--loss", tr.loss, "kld or l2")->capture_default_str();
  s_tr->add_option("--steps", tr.cfg.steps, "training steps")
      ->capture_default_str();
  s_tr->add_option("--batch", tr.cfg.batch_size, "segments per step")
      ->capture_default_str();
  s_tr->add_option("--segment", tr.cfg.segment_len, "frames per segment")
      ->capture_default_str();
  s_tr->add_option("--learning-rate", tr.cfg.learning_rate, "Adam step size")
      ->capture_default_str();
  s_tr->add_option("--clip-norm", tr.cfg.clip_norm, "gradient clip")
      ->capture_default_str();
  s_tr->add_option("--seed", tr.cfg.seed, "training seed")
      ->capture_default_str();
  s_tr->add_option("--val-fraction", tr.cfg.val_fraction,
                   "held-out utterance fraction")
      ->capture_default_str();
  s_tr->add_option("--val-every", tr.cfg.val_every, "steps between validations")
      ->capture_default_str();
  s_tr->add_option("--checkpoint-every", tr.cfg.checkpoint_every,
                   "steps between checkpoints")
      ->capture_default_str();
  s_tr->add_option("--hidden", tr.hidden, "hidden layer sizes")
      ->delimiter(',')
      ->capture_default_str();
  s_tr->add_option("--context", tr.cfg.context_radius, "feature context radius")
      ->capture_default_str();
  s_tr->add_option("--em-iters", tr.cfg.em_iters, "EM iterations for targets")
      ->capture_default_str();
  s_tr->add_option("--wpe-delay", tr.cfg.wpe_delay, "prediction delay")
      ->capture_default_str();
  s_tr->add_option("--wpe-taps", tr.cfg.wpe_taps, "prediction taps")
      ->capture_default_str();
  s_tr->add_option("--wpe-iters", tr.cfg.wpe_iters, "variance refits")
      ->capture_default_str();
  s_tr->add_option("--frame-size", tr.cfg.frame_size, "analysis frame")
      ->capture_default_str();
  s_tr->add_option("--hop", tr.cfg.hop, "analysis hop")->capture_default_str();

  InferArgs inf;
  CLI::App* s_inf =
      app.add_subcommand("infer", "separate with a trained model");
  s_inf->add_option("--model", inf.model, "model checkpoint")->required();
  s_inf->add_option("--in", inf.in, "mixture WAV or scene directory")
      ->required();
  s_inf->add_option("--out", inf.out, "output directory")->required();
  s_inf->add_option("--refine", inf.refine, "EM refinement sweeps")
      ->capture_default_str();
  s_inf->add_flag("--eval", inf.eval,
                  "score against the scene's source images");

  EvaluateArgs ev;
  CLI::App* s_ev =
      app.add_subcommand("evaluate", "score estimate WAVs against references");
  s_ev->add_option("--est", ev.est, "estimate directory")->required();
  s_ev->add_option("--ref", ev.ref, "reference directory")->required();
  s_ev->add_option("--taps", ev.filter_taps, "distortion filter taps")
      ->capture_default_str();
  s_ev->add_option("--json", ev.json_path, "write JSON report here");
  s_ev->add_option("--csv", ev.csv_path, "write CSV report here");

  GradcheckArgs gc;
  CLI::App* s_gc = app.add_subcommand(
      "gradcheck", "verify analytic gradients against finite differences");
  s_gc->add_option("--seed", gc.seed, "first seed")->capture_default_str();
  s_gc->add_option("--seeds", gc.num_seeds, "number of consecutive seeds")
      ->capture_default_str();
  s_gc->add_option("--lr", gc.reverb_taps, "reverberation tap counts")
      ->delimiter(',')
      ->capture_default_str();
  s_gc->add_option("--loss", gc.losses, "loss kinds to check")
      ->delimiter(',')
      ->capture_default_str();
  s_gc->add_option("--frames", gc.frames, "frames")->capture_default_str();
  s_gc->add_option("--bins", gc.bins, "frequency bins")->capture_default_str();
  s_gc->add_option("--mics", gc.mics, "microphones")->capture_default_str();
  s_gc->add_option("--sources", gc.sources, "sources")->capture_default_str();
  s_gc->add_flag("--zero-init", gc.zero_init, "check at zero weights");

  for (CLI::App* sub : {s_sim, s_sep, s_tr, s_inf, s_ev, s_gc}) {
    sub->fallthrough();
    sub->set_config("--config", "",
                    "flat key=value defaults; command-line flags win");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    lgmsep::set_num_threads(threads);
    if (s_sim->parsed()) return cmd_simulate(s_sim, sim);
    if (s_sep->parsed()) return cmd_separate(s_sep, sep);
    if (s_tr->parsed()) return cmd_train(s_tr, tr);
    if (s_inf->parsed()) return cmd_infer(s_inf, inf);
    if (s_ev->parsed()) return cmd_evaluate(s_ev, ev);
    if (s_gc->parsed()) return cmd_gradcheck(gc);
  } catch (const lgmsep::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lgmsep::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lgmsep::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
