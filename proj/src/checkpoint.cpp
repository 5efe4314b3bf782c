// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace lgmsep {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian");

namespace {

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

int dtype_size(const std::string& dtype) {
  if (dtype == "f8" || dtype == "c8" || dtype == "i8") return 8;
  if (dtype == "f4") return 4;
  if (dtype == "c16") return 16;
  throw IoError("checkpoint: unknown dtype " + dtype);
}

}  // namespace

void Checkpoint::append(Entry e, const void* bytes) {
  if (has(e.name)) throw IoError("checkpoint: duplicate array " + e.name);
  e.offset = static_cast<std::int64_t>(payload_.size());
  payload_.resize(payload_.size() + e.nbytes);
  std::memcpy(payload_.data() + e.offset, bytes, e.nbytes);
  manifest_.push_back(std::move(e));
}

void Checkpoint::put_f8(const std::string& name,
                        std::vector<std::int64_t> shape,
                        std::span<const double> data) {
  Entry e{name, "f8", std::move(shape), 0,
          static_cast<std::int64_t>(data.size() * 8)};
  if (element_count(e.shape) != static_cast<std::int64_t>(data.size()))
    throw IoError("checkpoint: shape/data mismatch for " + name);
  append(std::move(e), data.data());
}

void Checkpoint::put_f4(const std::string& name,
                        std::vector<std::int64_t> shape,
                        std::span<const double> data) {
  std::vector<float> f(data.size());
  for (size_t i = 0; i < data.size(); ++i) f[i] = static_cast<float>(data[i]);
  Entry e{name, "f4", std::move(shape), 0,
          static_cast<std::int64_t>(f.size() * 4)};
  if (element_count(e.shape) != static_cast<std::int64_t>(f.size()))
    throw IoError("checkpoint: shape/data mismatch for " + name);
  append(std::move(e), f.data());
}

void Checkpoint::put_c16(const std::string& name,
                         std::vector<std::int64_t> shape,
                         std::span<const cd> data) {
  Entry e{name, "c16", std::move(shape), 0,
          static_cast<std::int64_t>(data.size() * 16)};
  if (element_count(e.shape) != static_cast<std::int64_t>(data.size()))
    throw IoError("checkpoint: shape/data mismatch for " + name);
  append(std::move(e), data.data());
}

void Checkpoint::put_c8(const std::string& name,
                        std::vector<std::int64_t> shape,
                        std::span<const cd> data) {
  std::vector<std::complex<float>> f(data.size());
  for (size_t i = 0; i < data.size(); ++i)
    f[i] = std::complex<float>(static_cast<float>(data[i].real()),
                               static_cast<float>(data[i].imag()));
  Entry e{name, "c8", std::move(shape), 0,
          static_cast<std::int64_t>(f.size() * 8)};
  if (element_count(e.shape) != static_cast<std::int64_t>(f.size()))
    throw IoError("checkpoint: shape/data mismatch for " + name);
  append(std::move(e), f.data());
}

void Checkpoint::put_i8(const std::string& name,
                        std::vector<std::int64_t> shape,
                        std::span<const std::int64_t> data) {
  Entry e{name, "i8", std::move(shape), 0,
          static_cast<std::int64_t>(data.size() * 8)};
  if (element_count(e.shape) != static_cast<std::int64_t>(data.size()))
    throw IoError("checkpoint: shape/data mismatch for " + name);
  append(std::move(e), data.data());
}

bool Checkpoint::has(const std::string& name) const {
  return std::any_of(manifest_.begin(), manifest_.end(),
                     [&](const Entry& e) { return e.name == name; });
}

const Checkpoint::Entry& Checkpoint::entry(const std::string& name) const {
  for (const auto& e : manifest_)
    if (e.name == name) return e;
  throw IoError("checkpoint: missing array " + name);
}

std::vector<double> Checkpoint::get_f8(const std::string& name) const {
  const Entry& e = entry(name);
  const std::int64_t n = element_count(e.shape);
  std::vector<double> out(n);
  if (e.dtype == "f8") {
    std::memcpy(out.data(), payload_.data() + e.offset, n * 8);
  } else if (e.dtype == "f4") {
    std::vector<float> f(n);
    std::memcpy(f.data(), payload_.data() + e.offset, n * 4);
    for (std::int64_t i = 0; i < n; ++i) out[i] = f[i];
  } else {
    throw IoError("checkpoint: " + name + " is not real-valued");
  }
  return out;
}

std::vector<cd> Checkpoint::get_c16(const std::string& name) const {
  const Entry& e = entry(name);
  const std::int64_t n = element_count(e.shape);
  std::vector<cd> out(n);
  if (e.dtype == "c16") {
    std::memcpy(out.data(), payload_.data() + e.offset, n * 16);
  } else if (e.dtype == "c8") {
    std::vector<std::complex<float>> f(n);
    std::memcpy(f.data(), payload_.data() + e.offset, n * 8);
    for (std::int64_t i = 0; i < n; ++i) out[i] = cd(f[i].real(), f[i].imag());
  } else {
    throw IoError("checkpoint: " + name + " is not complex-valued");
  }
  return out;
}

std::vector<std::int64_t> Checkpoint::get_i8(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.dtype != "i8") throw IoError("checkpoint: " + name + " is not i8");
  const std::int64_t n = element_count(e.shape);
  std::vector<std::int64_t> out(n);
  std::memcpy(out.data(), payload_.data() + e.offset, n * 8);
  return out;
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json root;
  root["meta"] = meta;
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& e : manifest_) {
    arrays.push_back({{"name", e.name},
                      {"dtype", e.dtype},
                      {"shape", e.shape},
                      {"offset", e.offset},
                      {"nbytes", e.nbytes}});
  }
  root["manifest"] = arrays;
  const std::string json = root.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write("LGMS", 4);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t len = json.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(json.data(), static_cast<std::streamsize>(json.size()));
  out.write(payload_.data(), static_cast<std::streamsize>(payload_.size()));
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "LGMS", 4) != 0)
    throw IoError(path + ": bad magic");
  std::uint32_t version;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != kVersion)
    throw IoError(path + ": unsupported version " + std::to_string(version));
  std::uint64_t len;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string json(len, '\0');
  in.read(json.data(), static_cast<std::streamsize>(len));
  nlohmann::json root = nlohmann::json::parse(json);

  Checkpoint ck;
  ck.meta = root.at("meta");
  std::int64_t expected = 0;
  for (const auto& j : root.at("manifest")) {
    Entry e;
    e.name = j.at("name").get<std::string>();
    e.dtype = j.at("dtype").get<std::string>();
    e.shape = j.at("shape").get<std::vector<std::int64_t>>();
    e.offset = j.at("offset").get<std::int64_t>();
    e.nbytes = j.at("nbytes").get<std::int64_t>();
    if (e.nbytes != element_count(e.shape) * dtype_size(e.dtype))
      throw IoError(path + ": manifest size mismatch for " + e.name);
    if (e.offset != expected)
      throw IoError(path + ": overlapping or out-of-order manifest offsets");
    expected = e.offset + e.nbytes;
    ck.manifest_.push_back(std::move(e));
  }
  ck.payload_.resize(expected);
  in.read(ck.payload_.data(), expected);
  if (in.gcount() != expected)
    throw IoError(path + ": truncated payload");
  return ck;
}

}  // namespace lgmsep
