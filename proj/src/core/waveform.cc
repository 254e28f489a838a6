// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/core/waveform.h"

#include <cmath>

#include "asvlab/core/error.h"

namespace asvlab {

void ValidateWaveform(const Waveform& w) {
  if (w.sample_rate <= 0)
    throw Error(ErrorKind::kRate, "sample_rate must be positive");
  if (w.samples.empty())
    throw Error(ErrorKind::kShape, "waveform must be non-empty");
  for (float s : w.samples) {
    if (!std::isfinite(s) || s < -1.0f || s > 1.0f)
      throw Error(ErrorKind::kShape, "sample outside [-1, +1]");
  }
}

double Rms(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : w.samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(w.samples.size()));
}

double PeakAbs(const Waveform& w) {
  double peak = 0.0;
  for (float s : w.samples) peak = std::max(peak, std::fabs(static_cast<double>(s)));
  return peak;
}

double MaxAbsDiff(const Waveform& a, const Waveform& b) {
  if (a.samples.size() != b.samples.size())
    throw Error(ErrorKind::kShape, "waveform lengths differ");
  double m = 0.0;
  for (size_t i = 0; i < a.samples.size(); ++i)
    m = std::max(m, std::fabs(static_cast<double>(a.samples[i]) - b.samples[i]));
  return m;
}

}  // namespace asvlab
