// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORE_WAV_IO_H_
#define ASVLAB_CORE_WAV_IO_H_

#include <string>

#include "asvlab/core/waveform.h"

namespace asvlab {

enum class WavEncoding {
  kPcm16,    // codec 1, 16-bit
  kFloat32,  // codec 3 (IEEE float), lossless for our float32 samples
};

// Loads a mono WAV file (16-bit PCM or 32-bit IEEE float). If expected_rate
// > 0 and the file's rate differs, a rate error is thrown (resampling is
// never implicit).
Waveform LoadWaveform(const std::string& path, int expected_rate = 0);

// Saves as mono WAV. Samples outside [-1, +1] are rejected, not clamped;
// for kPcm16, quantization to int16 happens here and only here. kFloat32
// round-trips samples bit-for-bit (adversarial audio must reload exactly).
void SaveWaveform(const Waveform& w, const std::string& path,
                  WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace asvlab

#endif  // ASVLAB_CORE_WAV_IO_H_
