// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/core/fft.h"

#include <cmath>

#include "asvlab/core/error.h"

namespace asvlab {

bool IsPowerOfTwo(size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void Fft(std::complex<float>* a, size_t n, bool inverse) {
  if (!IsPowerOfTwo(n))
    throw Error(ErrorKind::kShape, "FFT size must be a power of two");

  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u(a[i + j]);
        std::complex<double> v = std::complex<double>(a[i + j + len / 2]) * w;
        a[i + j] = std::complex<float>(u + v);
        a[i + j + len / 2] = std::complex<float>(u - v);
        w *= wlen;
      }
    }
  }
}

void Rfft(const float* x, size_t n, std::complex<float>* out) {
  std::vector<std::complex<float>> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = std::complex<float>(x[i], 0.0f);
  Fft(buf.data(), n, /*inverse=*/false);
  for (size_t k = 0; k <= n / 2; ++k) out[k] = buf[k];
}

void RfftAdjoint(const std::complex<float>* gbins, size_t n, float* gx) {
  // dL/dx[m] = sum_{k=0..n/2} Re(g_k * e^{+2*pi*i*k*m/n})
  //          = Re(F[conj(c)][m]) for c = g zero-extended to length n.
  std::vector<std::complex<float>> buf(n, std::complex<float>(0.0f, 0.0f));
  for (size_t k = 0; k <= n / 2; ++k) buf[k] = std::conj(gbins[k]);
  Fft(buf.data(), n, /*inverse=*/false);
  for (size_t m = 0; m < n; ++m) gx[m] = buf[m].real();
}

std::vector<float> HannWindow(int length) {
  std::vector<float> w(length);
  for (int i = 0; i < length; ++i)
    w[i] = 0.5f - 0.5f * static_cast<float>(
                             std::cos(2.0 * M_PI * i / static_cast<double>(length)));
  return w;
}

}  // namespace asvlab
