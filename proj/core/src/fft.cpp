#include "mffssr/fft.hpp"

#include <cmath>

namespace mffssr::fft {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void dft_radix2(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

void dft_direct(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    std::vector<cplx> twiddle(n);
    for (size_t k = 0; k < n; ++k) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) * static_cast<double>(k) /
                           static_cast<double>(n);
        twiddle[k] = cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> out(n, cplx(0.0, 0.0));
    for (size_t u = 0; u < n; ++u) {
        cplx acc(0.0, 0.0);
        for (size_t t = 0; t < n; ++t) {
            acc += a[t] * twiddle[(u * t) % n];
        }
        out[u] = acc;
    }
    a = std::move(out);
}

}  // namespace

void dft(std::vector<cplx>& a, bool inverse) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size())) {
        dft_radix2(a, inverse);
    } else {
        dft_direct(a, inverse);
    }
}

std::vector<cplx> dft2d(const double* data, int h, int w) {
    std::vector<cplx> spec(static_cast<size_t>(h) * w);
    std::vector<cplx> line;

    // Rows first.
    line.resize(static_cast<size_t>(w));
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) line[c] = cplx(data[r * w + c], 0.0);
        dft(line);
        for (int c = 0; c < w; ++c) spec[static_cast<size_t>(r) * w + c] = line[c];
    }
    // Then columns.
    line.assign(static_cast<size_t>(h), cplx(0.0, 0.0));
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) line[r] = spec[static_cast<size_t>(r) * w + c];
        dft(line);
        for (int r = 0; r < h; ++r) spec[static_cast<size_t>(r) * w + c] = line[r];
    }
    return spec;
}

}  // namespace mffssr::fft
