// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORE_FFT_H_
#define ASVLAB_CORE_FFT_H_

#include <complex>
#include <cstddef>
#include <vector>

namespace asvlab {

// In-place iterative radix-2 complex FFT. n must be a power of two.
// inverse=true computes the unnormalized inverse transform (no 1/n).
void Fft(std::complex<float>* a, size_t n, bool inverse);

// Real-input FFT. Writes n/2+1 complex bins to out.
void Rfft(const float* x, size_t n, std::complex<float>* out);

// Adjoint of Rfft: given dL/d(bins) for the n/2+1 complex bins (treated as
// independent real/imag parts), writes dL/dx for the n real inputs.
void RfftAdjoint(const std::complex<float>* gbins, size_t n, float* gx);

// Periodic Hann window of the given length.
std::vector<float> HannWindow(int length);

bool IsPowerOfTwo(size_t n);

}  // namespace asvlab

#endif  // ASVLAB_CORE_FFT_H_
