// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/nn/stft.h"

#include <vector>

#include "asvlab/core/error.h"
#include "asvlab/core/fft.h"

namespace asvlab {
namespace nn {

void ValidateStftSpec(const StftSpec& spec) {
  if (!IsPowerOfTwo(static_cast<size_t>(spec.fft_size)))
    throw Error(ErrorKind::kConfig, "stft: fft_size must be a power of two");
  if (spec.hop <= 0)
    throw Error(ErrorKind::kConfig, "stft: hop must be positive");
  if (spec.win_len <= 0 || spec.win_len > spec.fft_size)
    throw Error(ErrorKind::kConfig, "stft: win_len must be in [1, fft_size]");
}

int StftNumFrames(int n, const StftSpec& spec) {
  ValidateStftSpec(spec);
  if (n < spec.win_len)
    throw Error(ErrorKind::kLength, "stft: signal shorter than one window");
  return (n - spec.win_len) / spec.hop + 1;
}

Eigen::MatrixXcf Stft(const float* x, int n, const StftSpec& spec) {
  const int frames = StftNumFrames(n, spec);
  const int bins = spec.fft_size / 2 + 1;
  const std::vector<float> win = HannWindow(spec.win_len);
  Eigen::MatrixXcf out(bins, frames);
  std::vector<float> frame(spec.fft_size, 0.0f);
  std::vector<std::complex<float>> spec_bins(bins);
  for (int t = 0; t < frames; ++t) {
    const int off = t * spec.hop;
    for (int m = 0; m < spec.win_len; ++m) frame[m] = x[off + m] * win[m];
    Rfft(frame.data(), spec.fft_size, spec_bins.data());
    for (int k = 0; k < bins; ++k) out(k, t) = spec_bins[k];
  }
  return out;
}

void StftAdjoint(const Eigen::MatrixXcf& gbins, int n, const StftSpec& spec,
                 float* gx) {
  const int frames = StftNumFrames(n, spec);
  if (gbins.cols() != frames || gbins.rows() != spec.fft_size / 2 + 1)
    throw Error(ErrorKind::kShape, "stft adjoint: gradient shape mismatch");
  const std::vector<float> win = HannWindow(spec.win_len);
  std::vector<std::complex<float>> col(gbins.rows());
  std::vector<float> gframe(spec.fft_size);
  for (int t = 0; t < frames; ++t) {
    for (Eigen::Index k = 0; k < gbins.rows(); ++k) col[k] = gbins(k, t);
    RfftAdjoint(col.data(), spec.fft_size, gframe.data());
    const int off = t * spec.hop;
    for (int m = 0; m < spec.win_len; ++m) gx[off + m] += gframe[m] * win[m];
  }
}

Eigen::MatrixXf SpectroMagnitude(const Eigen::MatrixXcf& c) {
  return c.cwiseAbs();
}

Eigen::MatrixXcf MagnitudeBackward(const Eigen::MatrixXcf& c,
                                   const Eigen::MatrixXf& gmag, float eps) {
  Eigen::MatrixXcf g(c.rows(), c.cols());
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      const float mag = std::abs(c(i, j));
      const float scale = gmag(i, j) / std::max(mag, eps);
      g(i, j) = std::complex<float>(c(i, j).real() * scale,
                                    c(i, j).imag() * scale);
    }
  }
  return g;
}

}  // namespace nn
}  // namespace asvlab
