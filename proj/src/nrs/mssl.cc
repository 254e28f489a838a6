// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/nrs/mssl.h"

#include <cmath>

#include "asvlab/core/error.h"

namespace asvlab {

void ValidateMsslConfig(const MsslConfig& cfg) {
  const size_t n = cfg.fft_sizes.size();
  if (n == 0 || cfg.hops.size() != n || cfg.win_lengths.size() != n) {
    throw Error(ErrorKind::kConfig,
                "mssl: fft/hop/window lists must be non-empty and equally long");
  }
  if (!(cfg.mag_floor > 0.0f)) {
    throw Error(ErrorKind::kConfig, "mssl: magnitude floor must be positive");
  }
  for (size_t i = 0; i < n; ++i) {
    nn::StftSpec spec{cfg.fft_sizes[i], cfg.hops[i], cfg.win_lengths[i]};
    nn::ValidateStftSpec(spec);
    if (spec.hop > spec.win_len) {
      throw Error(ErrorKind::kConfig, "mssl: hop must not exceed the window");
    }
  }
}

double MsslWithGrad(const Waveform& prediction, const Waveform& target,
                    const MsslConfig& cfg, std::vector<float>* gpred) {
  ValidateMsslConfig(cfg);
  ValidateWaveform(prediction);
  ValidateWaveform(target);
  if (prediction.size() != target.size()) {
    throw Error(ErrorKind::kShape,
                "mssl: prediction and target lengths differ (" +
                    std::to_string(prediction.size()) + " vs " +
                    std::to_string(target.size()) + ")");
  }

  const int n = prediction.size();
  const double n_res = static_cast<double>(cfg.fft_sizes.size());
  const double floor_v = cfg.mag_floor;
  if (gpred != nullptr) gpred->assign(static_cast<size_t>(n), 0.0f);

  double total = 0.0;
  for (size_t r = 0; r < cfg.fft_sizes.size(); ++r) {
    const nn::StftSpec spec{cfg.fft_sizes[r], cfg.hops[r], cfg.win_lengths[r]};
    const Eigen::MatrixXcf x = nn::Stft(prediction.samples.data(), n, spec);
    const Eigen::MatrixXcf y = nn::Stft(target.samples.data(), n, spec);
    const Eigen::MatrixXf a = nn::SpectroMagnitude(x);
    const Eigen::MatrixXf b = nn::SpectroMagnitude(y);

    const Eigen::MatrixXf diff = a - b;
    const double fro_d = diff.cast<double>().norm();
    const double fro_y = std::max(b.cast<double>().norm(), floor_v);
    const double l_sc = fro_d / fro_y;

    const double m_bins = static_cast<double>(a.size());
    double l_mag = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double la = std::log(std::max(double(a(i)), floor_v));
      const double lb = std::log(std::max(double(b(i)), floor_v));
      l_mag += std::abs(la - lb);
    }
    l_mag /= m_bins;
    total += l_sc + l_mag;

    if (gpred != nullptr) {
      Eigen::MatrixXf ga = Eigen::MatrixXf::Zero(a.rows(), a.cols());
      const double sc_scale = fro_d > 0.0 ? 1.0 / (fro_d * fro_y * n_res) : 0.0;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        double g = sc_scale * double(diff(i));
        if (double(a(i)) > floor_v) {
          const double la = std::log(double(a(i)));
          const double lb = std::log(std::max(double(b(i)), floor_v));
          const double sgn = la > lb ? 1.0 : (la < lb ? -1.0 : 0.0);
          g += sgn / (m_bins * double(a(i)) * n_res);
        }
        ga(i) = static_cast<float>(g);
      }
      const Eigen::MatrixXcf gc = nn::MagnitudeBackward(x, ga);
      nn::StftAdjoint(gc, n, spec, gpred->data());
    }
  }
  return total / n_res;
}

double Mssl(const Waveform& prediction, const Waveform& target,
            const MsslConfig& cfg) {
  return MsslWithGrad(prediction, target, cfg, nullptr);
}

}  // namespace asvlab
