// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Multi-scale spectral loss: per resolution, a spectral-convergence term
// (Frobenius distance of magnitudes over the target's norm) plus a mean
// absolute log-magnitude term, averaged over resolutions. Differentiable
// with respect to the prediction.

#ifndef ASVLAB_NRS_MSSL_H_
#define ASVLAB_NRS_MSSL_H_

#include <vector>

#include "asvlab/core/waveform.h"
#include "asvlab/nn/stft.h"

namespace asvlab {

struct MsslConfig {
  std::vector<int> fft_sizes = {128, 256, 512, 1024, 2048};
  std::vector<int> hops = {32, 64, 128, 256, 512};
  std::vector<int> win_lengths = {128, 256, 512, 1024, 2048};
  float mag_floor = 1e-7f;  // floors log-magnitudes and the target norm
};

// Configuration error unless the three lists share a length, every triple
// satisfies 0 < hop <= win <= fft, ffts are powers of two, and the floor
// is positive.
void ValidateMsslConfig(const MsslConfig& cfg);

// Loss value; arguments are (prediction, target). Shape error on length
// mismatch; length error when the signal is shorter than the largest window.
double Mssl(const Waveform& prediction, const Waveform& target,
            const MsslConfig& cfg = MsslConfig());

// Same, filling d(loss)/d(prediction) when gpred != nullptr.
double MsslWithGrad(const Waveform& prediction, const Waveform& target,
                    const MsslConfig& cfg, std::vector<float>* gpred);

}  // namespace asvlab

#endif  // ASVLAB_NRS_MSSL_H_
