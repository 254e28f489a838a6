// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/nn/mel.h"

#include <cmath>

#include "asvlab/core/error.h"

namespace asvlab {
namespace nn {

namespace {
float HzToMel(float hz) { return 2595.0f * std::log10(1.0f + hz / 700.0f); }
float MelToHz(float mel) {
  return 700.0f * (std::pow(10.0f, mel / 2595.0f) - 1.0f);
}
}  // namespace

MelFrontend::MelFrontend() : MelFrontend(Config()) {}

MelFrontend::MelFrontend(const Config& cfg) : cfg_(cfg) {
  ValidateStftSpec(cfg_.stft);
  if (cfg_.n_mels < 2)
    throw Error(ErrorKind::kConfig, "mel: need at least two bands");
  if (!(cfg_.fmin >= 0.0f) || !(cfg_.fmax > cfg_.fmin) ||
      cfg_.fmax > 0.5f * static_cast<float>(cfg_.sample_rate))
    throw Error(ErrorKind::kConfig, "mel: bad frequency range");

  const int bins = cfg_.stft.fft_size / 2 + 1;
  fb_ = Eigen::MatrixXf::Zero(cfg_.n_mels, bins);
  const float mel_lo = HzToMel(cfg_.fmin);
  const float mel_hi = HzToMel(cfg_.fmax);
  std::vector<float> edges(cfg_.n_mels + 2);
  for (int i = 0; i < cfg_.n_mels + 2; ++i) {
    const float mel =
        mel_lo + (mel_hi - mel_lo) * static_cast<float>(i) /
                     static_cast<float>(cfg_.n_mels + 1);
    edges[i] = MelToHz(mel);
  }
  const float hz_per_bin =
      static_cast<float>(cfg_.sample_rate) / static_cast<float>(cfg_.stft.fft_size);
  for (int m = 0; m < cfg_.n_mels; ++m) {
    const float left = edges[m];
    const float center = edges[m + 1];
    const float right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const float hz = hz_per_bin * static_cast<float>(k);
      float v = 0.0f;
      if (hz > left && hz < right) {
        v = hz <= center ? (hz - left) / (center - left)
                         : (right - hz) / (right - center);
      }
      fb_(m, k) = v;
    }
  }
}

Eigen::MatrixXf MelFrontend::Forward(const float* x, int n, Cache* cache) const {
  Eigen::MatrixXcf spec = Stft(x, n, cfg_.stft);
  Eigen::MatrixXf power = spec.cwiseAbs2();
  Eigen::MatrixXf mel = fb_ * power;
  Eigen::MatrixXf out =
      mel.cwiseMax(cfg_.log_floor).array().log().matrix();
  if (cache) {
    cache->mel_power = std::move(mel);
    cache->stft = std::move(spec);
  }
  return out;
}

void MelFrontend::BackwardToSignal(const Cache& cache, const Eigen::MatrixXf& gy,
                                   int n, float* gx) const {
  if (gy.rows() != cfg_.n_mels || gy.cols() != cache.mel_power.cols())
    throw Error(ErrorKind::kShape, "mel backward: gradient shape mismatch");
  // d log(max(p, floor)) / dp = 1/p above the floor, 0 below it.
  Eigen::MatrixXf gmel(gy.rows(), gy.cols());
  for (Eigen::Index j = 0; j < gy.cols(); ++j) {
    for (Eigen::Index i = 0; i < gy.rows(); ++i) {
      const float p = cache.mel_power(i, j);
      gmel(i, j) = p > cfg_.log_floor ? gy(i, j) / p : 0.0f;
    }
  }
  Eigen::MatrixXf gpower = fb_.transpose() * gmel;  // bins x frames
  // |c|^2 = re^2 + im^2, so dL/dc = 2 * gpower .* c.
  Eigen::MatrixXcf gbins(gpower.rows(), gpower.cols());
  for (Eigen::Index j = 0; j < gpower.cols(); ++j) {
    for (Eigen::Index i = 0; i < gpower.rows(); ++i) {
      const float s = 2.0f * gpower(i, j);
      gbins(i, j) = std::complex<float>(cache.stft(i, j).real() * s,
                                        cache.stft(i, j).imag() * s);
    }
  }
  StftAdjoint(gbins, n, cfg_.stft, gx);
}

}  // namespace nn
}  // namespace asvlab
