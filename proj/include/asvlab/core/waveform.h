// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORE_WAVEFORM_H_
#define ASVLAB_CORE_WAVEFORM_H_

#include <cstddef>
#include <vector>

namespace asvlab {

inline constexpr int kDefaultSampleRate = 16000;

// Bounded-amplitude mono audio. Samples live in [-1, +1]; processing is
// float throughout, quantization happens only at file boundaries.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;

  size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Throws unless sample_rate > 0, length > 0 and every sample is in [-1, +1].
void ValidateWaveform(const Waveform& w);

double Rms(const Waveform& w);
double PeakAbs(const Waveform& w);

// Max |a - b| over samples; lengths must match.
double MaxAbsDiff(const Waveform& a, const Waveform& b);

}  // namespace asvlab

#endif  // ASVLAB_CORE_WAVEFORM_H_
