// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Differentiable short-time Fourier transform. Frames start at t*hop,
// are windowed with a periodic Hann window of win_len samples and
// zero-padded at the tail to fft_size. No centering.

#ifndef ASVLAB_NN_STFT_H_
#define ASVLAB_NN_STFT_H_

#include <complex>

#include <Eigen/Dense>

namespace asvlab {
namespace nn {

struct StftSpec {
  int fft_size = 512;
  int hop = 160;
  int win_len = 400;
};

void ValidateStftSpec(const StftSpec& spec);

// Number of full frames for a signal of n samples; requires n >= win_len.
int StftNumFrames(int n, const StftSpec& spec);

// Complex STFT, (fft_size/2 + 1) x frames.
Eigen::MatrixXcf Stft(const float* x, int n, const StftSpec& spec);

// Adjoint of Stft: gbins holds dL/d(complex bins) with real and imaginary
// parts treated as independent reals. Accumulates dL/dx into gx (length n),
// which the caller must zero-initialize.
void StftAdjoint(const Eigen::MatrixXcf& gbins, int n, const StftSpec& spec,
                 float* gx);

// Elementwise |c|.
Eigen::MatrixXf SpectroMagnitude(const Eigen::MatrixXcf& c);

// Chain rule from d|c| to dc: returns gmag .* c / max(|c|, eps).
Eigen::MatrixXcf MagnitudeBackward(const Eigen::MatrixXcf& c,
                                   const Eigen::MatrixXf& gmag,
                                   float eps = 1e-12f);

}  // namespace nn
}  // namespace asvlab

#endif  // ASVLAB_NN_STFT_H_
