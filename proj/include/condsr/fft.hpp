#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace condsr {

using cplx = std::complex<double>;

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place radix-2 Cooley-Tukey FFT. `inverse` applies the conjugate
/// transform without the 1/n factor; callers scale as needed.
inline void fft_inplace(std::vector<cplx>& a, bool inverse) {
    const int n = static_cast<int>(a.size());
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * std::numbers::pi / len * (inverse ? 1.0 : -1.0);
        cplx wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            cplx w(1.0);
            for (int j = 0; j < len / 2; ++j) {
                cplx u = a[i + j];
                cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// 2D FFT of an h x w plane (row-major). Forward transform, no scaling.
inline std::vector<cplx> fft2(const std::vector<cplx>& plane, int h, int w) {
    std::vector<cplx> out = plane;
    std::vector<cplx> line;
    for (int r = 0; r < h; ++r) {
        line.assign(out.begin() + static_cast<std::ptrdiff_t>(r) * w,
                    out.begin() + static_cast<std::ptrdiff_t>(r + 1) * w);
        fft_inplace(line, false);
        std::copy(line.begin(), line.end(), out.begin() + static_cast<std::ptrdiff_t>(r) * w);
    }
    line.resize(h);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) line[r] = out[static_cast<std::size_t>(r) * w + c];
        fft_inplace(line, false);
        for (int r = 0; r < h; ++r) out[static_cast<std::size_t>(r) * w + c] = line[r];
    }
    return out;
}

/// 2D inverse FFT including the 1/(h*w) factor.
inline std::vector<cplx> ifft2(const std::vector<cplx>& plane, int h, int w) {
    std::vector<cplx> out = plane;
    std::vector<cplx> line;
    for (int r = 0; r < h; ++r) {
        line.assign(out.begin() + static_cast<std::ptrdiff_t>(r) * w,
                    out.begin() + static_cast<std::ptrdiff_t>(r + 1) * w);
        fft_inplace(line, true);
        std::copy(line.begin(), line.end(), out.begin() + static_cast<std::ptrdiff_t>(r) * w);
    }
    line.resize(h);
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) line[r] = out[static_cast<std::size_t>(r) * w + c];
        fft_inplace(line, true);
        for (int r = 0; r < h; ++r) out[static_cast<std::size_t>(r) * w + c] = line[r] * scale;
    }
    return out;
}

/// Signed frequency index for bin k of an n-point transform.
inline int signed_freq(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace condsr
