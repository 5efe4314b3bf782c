// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/trainer.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "lgmsep/simulate.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using lgmsep::AdamState;
using lgmsep::GradientBundle;
using lgmsep::MaskNetConfig;
using lgmsep::MaskNetParams;
using lgmsep::TrainConfig;

namespace {

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Tiny network whose parameter count keeps the optimizer tests readable.
MaskNetParams tiny_params(MaskNetConfig* cfg_out = nullptr) {
  MaskNetConfig cfg;
  cfg.num_sources = 1;
  cfg.reverb_taps = 0;
  cfg.num_bins = 1;
  cfg.hidden = {2};
  if (cfg_out) *cfg_out = cfg;
  MaskNetParams p = lgmsep::init_mask_net(cfg, 1, 0);
  p.set_zero();
  return p;
}

GradientBundle ones_like(const MaskNetParams& p) {
  GradientBundle g;
  for (const auto& w : p.weights)
    g.d_weights.push_back(Eigen::MatrixXd::Ones(w.rows(), w.cols()));
  for (const auto& b : p.biases)
    g.d_biases.push_back(Eigen::VectorXd::Ones(b.size()));
  return g;
}

// Builds a small dataset of simulated scenes and returns (dataset, work) dirs.
std::pair<std::string, std::string> make_dataset(const std::string& tag,
                                                 int count, double duration) {
  const fs::path base = fs::temp_directory_path() / ("lgmsep_" + tag);
  fs::remove_all(base);
  const fs::path data = base / "scenes";
  for (int i = 0; i < count; ++i) {
    lgmsep::SceneConfig sc;
    sc.duration = duration;
    sc.rt60 = 0.15;
    sc.snr_db = 25.0;
    sc.seed = 900 + static_cast<uint64_t>(i);
    const auto scene = lgmsep::make_scene(sc);
    char name[32];
    std::snprintf(name, sizeof name, "utt_%02d", i);
    lgmsep::write_scene((data / name).string(), scene);
  }
  return {data.string(), (base / "work").string()};
}

TrainConfig tiny_train_cfg() {
  TrainConfig cfg;
  cfg.num_sources = 2;
  cfg.reverb_taps = 1;
  cfg.batch_size = 2;
  cfg.segment_len = 40;
  cfg.steps = 4;
  cfg.em_iters = 2;
  cfg.wpe_taps = 8;
  cfg.hidden = {16, 16};
  cfg.val_every = 2;
  cfg.checkpoint_every = 2;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("adam takes near-lr steps against a constant gradient") {
    MaskNetParams p = tiny_params();
    AdamState st;
    st.init_like(p);
    const GradientBundle g = ones_like(p);

    lgmsep::adam_update(g, 1e-3, &p, &st);
    CHECK(st.step == 1);
    for (const auto& w : p.weights)
      for (int i = 0; i < w.size(); ++i)
        CHECK(*(w.data() + i) == doctest::Approx(-1e-3).epsilon(1e-6));

    lgmsep::adam_update(g, 1e-3, &p, &st);
    for (const auto& w : p.weights)
      for (int i = 0; i < w.size(); ++i)
        CHECK(*(w.data() + i) == doctest::Approx(-2e-3).epsilon(1e-5));
  }

  TEST_CASE("gradient clipping rescales to the threshold") {
    MaskNetParams p = tiny_params();
    GradientBundle g = ones_like(p);
    const double pre = std::sqrt(g.squared_norm());
    REQUIRE(pre > 0.0);

    GradientBundle big = g;
    big.scale(100.0 / pre);  // norm exactly 100
    const double reported = lgmsep::clip_gradients(5.0, &big);
    CHECK(reported == doctest::Approx(100.0));
    CHECK(std::sqrt(big.squared_norm()) == doctest::Approx(5.0));

    GradientBundle small = g;
    small.scale(1.0 / pre);  // norm 1, below the threshold
    const double kept = lgmsep::clip_gradients(5.0, &small);
    CHECK(kept == doctest::Approx(1.0));
    CHECK(std::sqrt(small.squared_norm()) == doctest::Approx(1.0));
  }

  TEST_CASE("model save and load round trip") {
    const fs::path dir = fs::temp_directory_path() / "lgmsep_model_rt";
    fs::create_directories(dir);
    const std::string path = (dir / "m.ckpt").string();

    MaskNetConfig cfg;
    MaskNetParams p = tiny_params(&cfg);
    std::mt19937_64 rng(121);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& w : p.weights)
      for (int i = 0; i < w.size(); ++i) *(w.data() + i) = g(rng);
    AdamState st;
    st.init_like(p);
    st.step = 42;
    TrainConfig tcfg;
    tcfg.wpe_taps = 12;

    lgmsep::save_model(path, p, cfg, tcfg, 1, 2, 42, &st, "rngstate");

    AdamState st2;
    std::string rng_str;
    const auto loaded = lgmsep::load_model(path, &st2, &rng_str);
    CHECK(loaded.step == 42);
    CHECK(loaded.wpe_taps == 12);
    CHECK(loaded.feature_dim == 1);
    CHECK(loaded.num_mics == 2);
    CHECK(loaded.cfg.num_sources == cfg.num_sources);
    CHECK(loaded.cfg.num_bins == cfg.num_bins);
    CHECK(rng_str == "rngstate");
    CHECK(st2.step == 42);
    REQUIRE(loaded.params.weights.size() == p.weights.size());
    for (size_t i = 0; i < p.weights.size(); ++i)
      CHECK(loaded.params.weights[i] == p.weights[i]);
    fs::remove_all(dir);
  }

  TEST_CASE("prepare_targets writes loadable, geometry-consistent files") {
    const auto [data, work] = make_dataset("prep", 2, 1.0);
    TrainConfig cfg = tiny_train_cfg();
    const std::string tgt = work + "/targets";
    const int n = lgmsep::prepare_targets(data, tgt, cfg);
    CHECK(n == 2);

    const auto files = lgmsep::list_target_files(tgt);
    REQUIRE(files.size() == 2);
    for (const auto& f : files) {
      const auto t = lgmsep::load_targets(f);
      CHECK(t.dereverb.num_channels == 2);
      CHECK(t.dereverb.num_bins == 129);
      CHECK(t.post.num_sources == 2);
      CHECK(t.post.num_frames == t.dereverb.num_frames);
      CHECK(t.post.num_bins == t.dereverb.num_bins);
      for (const auto& z : t.post.mu) CHECK(std::isfinite(z.real()));
    }
    // names survive the round trip in sorted order
    CHECK(lgmsep::load_targets(files[0]).name == "utt_00");
    CHECK(lgmsep::load_targets(files[1]).name == "utt_01");
    fs::remove_all(fs::path(data).parent_path());
  }

  TEST_CASE("prepare_targets on an empty directory is a usage error") {
    const fs::path dir = fs::temp_directory_path() / "lgmsep_empty_ds";
    fs::create_directories(dir);
    TrainConfig cfg = tiny_train_cfg();
    CHECK_THROWS_AS(
        lgmsep::prepare_targets(dir.string(), (dir / "out").string(), cfg),
        lgmsep::UsageError);
    fs::remove_all(dir);
  }

  TEST_CASE("a short training run logs, checkpoints and reproduces itself") {
    const auto [data, work] = make_dataset("train", 3, 1.0);
    TrainConfig cfg = tiny_train_cfg();
    const std::string tgt = work + "/targets";
    REQUIRE(lgmsep::prepare_targets(data, tgt, cfg) == 3);

    const std::string run1 = work + "/run1";
    const auto res = lgmsep::train(tgt, run1, cfg);
    CHECK(res.steps_done == 4);
    CHECK(std::isfinite(res.final_train_loss));
    CHECK(std::isfinite(res.final_val_loss));
    CHECK(fs::exists(run1 + "/model_final.ckpt"));
    CHECK(fs::exists(run1 + "/model_latest.ckpt"));
    CHECK(fs::exists(run1 + "/val_breakdown.jsonl"));

    // the logs carry the expected keys, starting with a step-0 baseline
    std::ifstream vlog(run1 + "/val_log.jsonl");
    std::string first_line;
    REQUIRE(std::getline(vlog, first_line));
    CHECK(first_line.find("\"step\": 0") != std::string::npos);
    CHECK(first_line.find("val_loss") != std::string::npos);
    std::ifstream tlog(run1 + "/train_log.jsonl");
    REQUIRE(std::getline(tlog, first_line));
    CHECK(first_line.find("\"step\": 1") != std::string::npos);
    CHECK(first_line.find("\"loss\": ") != std::string::npos);
    CHECK(first_line.find("\"grad_norm\": ") != std::string::npos);
    CHECK(first_line.find("\"lr\": ") != std::string::npos);

    // the final model reloads and matches the returned parameters
    const auto loaded = lgmsep::load_model(res.checkpoint_path);
    REQUIRE(loaded.params.weights.size() == res.params.weights.size());
    for (size_t i = 0; i < loaded.params.weights.size(); ++i)
      CHECK(loaded.params.weights[i] == res.params.weights[i]);

    // same config, fresh directory: byte-identical result
    const std::string run2 = work + "/run2";
    lgmsep::train(tgt, run2, cfg);
    CHECK(slurp(run1 + "/model_final.ckpt") ==
          slurp(run2 + "/model_final.ckpt"));
    fs::remove_all(fs::path(data).parent_path());
  }

  TEST_CASE("steps=0 still writes a model and a validation baseline") {
    const auto [data, work] = make_dataset("zerostep", 2, 1.0);
    TrainConfig cfg = tiny_train_cfg();
    cfg.steps = 0;
    const std::string tgt = work + "/targets";
    REQUIRE(lgmsep::prepare_targets(data, tgt, cfg) == 2);
    const auto res = lgmsep::train(tgt, work + "/run", cfg);
    CHECK(res.steps_done == 0);
    CHECK(std::isfinite(res.final_val_loss));
    CHECK(fs::exists(res.checkpoint_path));
    fs::remove_all(fs::path(data).parent_path());
  }
}
