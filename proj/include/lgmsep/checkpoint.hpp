// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_CHECKPOINT_HPP
#define LGMSEP_CHECKPOINT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgmsep/common.hpp"

namespace lgmsep {

// Container file: "LGMS" magic, u32 version, length-prefixed UTF-8 JSON
// metadata, then raw little-endian array payload addressed by the manifest.
class Checkpoint {
 public:
  struct Entry {
    std::string name;
    std::string dtype;  // f8, f4, c16, c8, i8
    std::vector<std::int64_t> shape;
    std::int64_t offset = 0;
    std::int64_t nbytes = 0;
  };

  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();

  void put_f8(const std::string& name, std::vector<std::int64_t> shape,
              std::span<const double> data);
  void put_f4(const std::string& name, std::vector<std::int64_t> shape,
              std::span<const double> data);
  void put_c16(const std::string& name, std::vector<std::int64_t> shape,
               std::span<const cd> data);
  void put_c8(const std::string& name, std::vector<std::int64_t> shape,
              std::span<const cd> data);
  void put_i8(const std::string& name, std::vector<std::int64_t> shape,
              std::span<const std::int64_t> data);

  bool has(const std::string& name) const;
  const Entry& entry(const std::string& name) const;
  const std::vector<Entry>& manifest() const { return manifest_; }

  // Readers upconvert f4 -> f8 and c8 -> c16.
  std::vector<double> get_f8(const std::string& name) const;
  std::vector<cd> get_c16(const std::string& name) const;
  std::vector<std::int64_t> get_i8(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  void append(Entry e, const void* bytes);
  std::vector<Entry> manifest_;
  std::vector<char> payload_;
};

}  // namespace lgmsep

#endif  // LGMSEP_CHECKPOINT_HPP
