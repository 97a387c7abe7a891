#pragma once

#include <complex>
#include <vector>

#include "flowroi/core.hpp"

namespace flowroi {

using cplx = std::complex<double>;

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 FFT. n must be a power of two.
inline void fft_inplace(cplx* a, int n, bool inverse) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * 3.14159265358979323846 / len;
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / n;
        for (int i = 0; i < n; ++i) a[i] *= inv;
    }
}

// 2D FFT over a row-major w x h grid, both dimensions powers of two.
inline void fft2d_inplace(std::vector<cplx>& a, int w, int h, bool inverse) {
    for (int y = 0; y < h; ++y) fft_inplace(a.data() + std::size_t(y) * w, w, inverse);
    std::vector<cplx> col(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = a[std::size_t(y) * w + x];
        fft_inplace(col.data(), h, inverse);
        for (int y = 0; y < h; ++y) a[std::size_t(y) * w + x] = col[y];
    }
}

}  // namespace flowroi
