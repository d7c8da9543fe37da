#pragma once

#include <complex>
#include <vector>

namespace mffssr::fft {

using cplx = std::complex<double>;

// In-place unnormalized DFT of arbitrary length: radix-2 Cooley-Tukey for
// powers of two, direct evaluation otherwise. `inverse` flips the twiddle
// sign but applies no 1/n factor; callers scale if they need a round trip.
void dft(std::vector<cplx>& a, bool inverse = false);

// Unnormalized forward 2-D DFT of an h-by-w real field (row-major).
// Output is row-major over frequency bins (u, v).
std::vector<cplx> dft2d(const double* data, int h, int w);

}  // namespace mffssr::fft
