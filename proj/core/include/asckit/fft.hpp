#pragma once

#include <complex>
#include <vector>

namespace asckit {

// In-place iterative radix-2 FFT. n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse = false);

// Real-input forward transform; returns the n/2+1 non-redundant bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& x, int n);

// Smallest power of two >= n.
int next_pow2(int n);

}  // namespace asckit
