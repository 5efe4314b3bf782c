// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/checkpoint.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using lgmsep::cd;
using lgmsep::Checkpoint;

namespace {

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip preserves metadata, shapes and payload") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lgmsep_ckpt_test";
    fs::create_directories(dir);
    const std::string path = (dir / "a.ckpt").string();

    std::mt19937_64 rng(61);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> f8(24);
    for (auto& v : f8) v = g(rng);
    std::vector<cd> c16(10);
    for (auto& v : c16) v = cd(g(rng), g(rng));
    std::vector<std::int64_t> ints = {3, -7, 1LL << 40};

    Checkpoint ck;
    ck.meta["purpose"] = "test";
    ck.meta["nested"]["alpha"] = 0.5;
    ck.put_f8("weights", {4, 6}, f8);
    ck.put_c16("cov", {2, 5}, c16);
    ck.put_i8("steps", {3}, ints);
    ck.save(path);

    const Checkpoint back = Checkpoint::load(path);
    CHECK(back.meta["purpose"] == "test");
    CHECK(back.meta["nested"]["alpha"] == doctest::Approx(0.5));
    REQUIRE(back.has("weights"));
    REQUIRE(back.has("cov"));
    CHECK_FALSE(back.has("absent"));
    CHECK(back.entry("weights").shape == std::vector<std::int64_t>{4, 6});
    CHECK(back.get_f8("weights") == f8);
    CHECK(back.get_i8("steps") == ints);
    const auto cov = back.get_c16("cov");
    REQUIRE(cov.size() == c16.size());
    for (size_t i = 0; i < cov.size(); ++i) CHECK(cov[i] == c16[i]);

    // identical content saves to identical bytes
    const std::string path2 = (dir / "b.ckpt").string();
    back.save(path2);
    CHECK(slurp(path) == slurp(path2));
    fs::remove_all(dir);
  }

  TEST_CASE("half-precision storage upconverts on read") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lgmsep_ckpt_half";
    fs::create_directories(dir);
    const std::string path = (dir / "h.ckpt").string();

    std::vector<double> vals = {1.0, -0.25, 3.5};
    std::vector<cd> cvals = {cd(0.5, -1.5), cd(2.0, 0.0)};
    Checkpoint ck;
    ck.put_f4("v", {3}, vals);
    ck.put_c8("c", {2}, cvals);
    ck.save(path);

    const Checkpoint back = Checkpoint::load(path);
    CHECK(back.entry("v").dtype == "f4");
    CHECK(back.entry("c").dtype == "c8");
    // these values are exactly representable in single precision
    CHECK(back.get_f8("v") == vals);
    const auto c = back.get_c16("c");
    for (size_t i = 0; i < c.size(); ++i) CHECK(c[i] == cvals[i]);
    fs::remove_all(dir);
  }

  TEST_CASE("unknown entries and corrupt files raise io errors") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lgmsep_ckpt_bad";
    fs::create_directories(dir);
    Checkpoint ck;
    CHECK_THROWS_AS(ck.entry("missing"), lgmsep::IoError);
    CHECK_THROWS_AS(Checkpoint::load("/nonexistent/x.ckpt"), lgmsep::IoError);

    const std::string path = (dir / "garbage.ckpt").string();
    std::ofstream(path, std::ios::binary) << "not a checkpoint at all";
    CHECK_THROWS_AS(Checkpoint::load(path), lgmsep::IoError);
    fs::remove_all(dir);
  }
}
