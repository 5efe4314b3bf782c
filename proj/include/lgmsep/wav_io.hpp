// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_WAV_IO_HPP
#define LGMSEP_WAV_IO_HPP

#include <string>

#include "lgmsep/tf_signal.hpp"

namespace lgmsep {

enum class WavFormat { pcm16, float32 };

// RIFF/WAVE reader. Accepts 16-bit PCM and 32-bit IEEE float, any channel
// count; samples are deinterleaved into [-1, 1] doubles (float data is taken
// as-is).
MultichannelWave read_wav(const std::string& path);

void write_wav(const std::string& path, const MultichannelWave& wave,
               WavFormat format = WavFormat::float32);

}  // namespace lgmsep

#endif  // LGMSEP_WAV_IO_HPP
