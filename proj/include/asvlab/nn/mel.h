// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Log-mel spectrogram frontend with a backward path to the input signal,
// so attack gradients can flow through spectral embedding models.

#ifndef ASVLAB_NN_MEL_H_
#define ASVLAB_NN_MEL_H_

#include <Eigen/Dense>

#include "asvlab/nn/stft.h"

namespace asvlab {
namespace nn {

class MelFrontend {
 public:
  struct Config {
    int sample_rate = 16000;
    StftSpec stft;           // 512 / 160 / 400 by default
    int n_mels = 64;
    float fmin = 20.0f;
    float fmax = 7600.0f;
    float log_floor = 1e-6f;
  };

  MelFrontend();
  explicit MelFrontend(const Config& cfg);

  struct Cache {
    Eigen::MatrixXcf stft;
    Eigen::MatrixXf mel_power;  // pre-log, pre-floor
  };

  int NumFrames(int n) const { return StftNumFrames(n, cfg_.stft); }
  int n_mels() const { return cfg_.n_mels; }
  const Config& config() const { return cfg_; }
  const Eigen::MatrixXf& filterbank() const { return fb_; }

  // Returns log(max(fb * |STFT|^2, log_floor)), n_mels x frames.
  Eigen::MatrixXf Forward(const float* x, int n, Cache* cache = nullptr) const;

  // Accumulates dL/dx into gx (length n, caller zero-initializes) given
  // dL/d(log-mel) and the cache from Forward on the same signal.
  void BackwardToSignal(const Cache& cache, const Eigen::MatrixXf& gy, int n,
                        float* gx) const;

 private:
  Config cfg_;
  Eigen::MatrixXf fb_;  // n_mels x (fft/2+1)
};

}  // namespace nn
}  // namespace asvlab

#endif  // ASVLAB_NN_MEL_H_
