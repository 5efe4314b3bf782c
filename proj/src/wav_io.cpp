// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/wav_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lgmsep {

static_assert(std::endian::native == std::endian::little,
              "WAV reader assumes a little-endian host");

namespace {

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

MultichannelWave read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw IoError(path + ": not RIFF");
  read_le<std::uint32_t>(in);
  in.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw IoError(path + ": not WAVE");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> payload;
  bool have_fmt = false, have_data = false;
  while (in.read(tag, 4)) {
    const auto size = read_le<std::uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_le<std::uint16_t>(in);
      channels = read_le<std::uint16_t>(in);
      rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);
      read_le<std::uint16_t>(in);
      bits = read_le<std::uint16_t>(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      payload.resize(size);
      in.read(payload.data(), size);
      have_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data) throw IoError(path + ": missing fmt/data chunk");
  if (channels == 0) throw IoError(path + ": zero channels");

  const bool pcm16 = (format == 1 && bits == 16);
  const bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32)
    throw IoError(path + ": unsupported format (need 16-bit PCM or float32)");

  const size_t bytes_per = bits / 8;
  const size_t num_frames = payload.size() / (bytes_per * channels);
  MultichannelWave wave;
  wave.sample_rate = rate;
  wave.samples.assign(channels, std::vector<double>(num_frames, 0.0));
  const char* p = payload.data();
  for (size_t t = 0; t < num_frames; ++t) {
    for (int m = 0; m < channels; ++m) {
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        wave.samples[m][t] = v / 32768.0;
        p += 2;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        wave.samples[m][t] = v;
        p += 4;
      }
    }
  }
  return wave;
}

void write_wav(const std::string& path, const MultichannelWave& wave,
               WavFormat format) {
  wave.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);

  const int channels = wave.num_channels();
  const long frames = wave.num_samples();
  const int bytes_per = format == WavFormat::pcm16 ? 2 : 4;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(frames * channels * bytes_per);

  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, format == WavFormat::pcm16 ? 1 : 3);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate));
  write_le<std::uint32_t>(
      out, static_cast<std::uint32_t>(wave.sample_rate * channels * bytes_per));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels * bytes_per));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(8 * bytes_per));
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_size);

  for (long t = 0; t < frames; ++t) {
    for (int m = 0; m < channels; ++m) {
      const double x = wave.samples[m][t];
      if (format == WavFormat::pcm16) {
        double clamped = std::max(-1.0, std::min(1.0, x));
        write_le<std::int16_t>(
            out, static_cast<std::int16_t>(std::lrint(clamped * 32767.0)));
      } else {
        write_le<float>(out, static_cast<float>(x));
      }
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace lgmsep
