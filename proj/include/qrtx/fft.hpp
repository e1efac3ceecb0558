// Radix-2 FFT used by the spectral regularizer. Unnormalized in both
// directions; callers own any scaling.
#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "qrtx/matrix.hpp"

namespace qrtx {

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

// In-place iterative radix-2. sign = -1 forward, +1 inverse (unnormalized).
inline void fft_pow2(std::vector<std::complex<double>>& a, int n, int stride, int offset, int sign) {
    // gather strided row/column into a scratch, transform, scatter back
    static thread_local std::vector<std::complex<double>> buf;
    buf.resize(n);
    for (int i = 0; i < n; ++i) buf[i] = a[offset + static_cast<size_t>(i) * stride];

    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> u = buf[i + k];
                std::complex<double> v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    for (int i = 0; i < n; ++i) a[offset + static_cast<size_t>(i) * stride] = buf[i];
}

}  // namespace detail

struct Spectrum {
    int rows = 0;  // power of two
    int cols = 0;
    std::vector<std::complex<double>> v;  // row-major

    std::complex<double>& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    const std::complex<double>& at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
};

// 2-D DFT of a real plane zero-padded up to (rows2, cols2), both powers of two.
inline Spectrum dft2_pow2(const Matrix& m, int rows2, int cols2) {
    if (!is_pow2(rows2) || !is_pow2(cols2) || rows2 < m.rows || cols2 < m.cols)
        throw std::invalid_argument("dft2_pow2: bad padded dimensions");
    Spectrum s;
    s.rows = rows2;
    s.cols = cols2;
    s.v.assign(static_cast<size_t>(rows2) * cols2, {0.0, 0.0});
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) s.at(r, c) = {m.at(r, c), 0.0};
    for (int r = 0; r < rows2; ++r) detail::fft_pow2(s.v, cols2, 1, r * cols2, -1);
    for (int c = 0; c < cols2; ++c) detail::fft_pow2(s.v, rows2, cols2, c, -1);
    return s;
}

// Unnormalized inverse transform of a spectrum, in place.
inline void idft2_pow2_unnormalized(Spectrum& s) {
    for (int r = 0; r < s.rows; ++r) detail::fft_pow2(s.v, s.cols, 1, r * s.cols, +1);
    for (int c = 0; c < s.cols; ++c) detail::fft_pow2(s.v, s.rows, s.cols, c, +1);
}

}  // namespace qrtx
