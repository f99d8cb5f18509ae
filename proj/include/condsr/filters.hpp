#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "condsr/field.hpp"
#include "condsr/tensor.hpp"

namespace condsr {

/// Block-mean observation operator g: each LR pixel is the arithmetic
/// mean of its delta x delta HR block. The block sum is pairwise so the
/// mean of identical values is exact for power-of-two block sizes,
/// which keeps g idempotent on the upsampled range.
inline LRField box_filter_coarsen(const HRField& hr, int delta) {
    const int h = hr.height(), w = hr.width();
    if (delta < 1 || h % delta != 0 || w % delta != 0)
        throw std::invalid_argument("box_filter_coarsen: dims not divisible by delta");
    const int lh = h / delta, lw = w / delta;
    Tensor out(kFieldChannels, lh, lw);
    std::vector<double> block(static_cast<std::size_t>(delta) * delta);
    const double inv = 1.0 / (static_cast<double>(delta) * delta);
    for (int ch = 0; ch < kFieldChannels; ++ch)
        for (int r = 0; r < lh; ++r)
            for (int c = 0; c < lw; ++c) {
                std::size_t k = 0;
                for (int dr = 0; dr < delta; ++dr)
                    for (int dc = 0; dc < delta; ++dc)
                        block[k++] = hr.data(ch, r * delta + dr, c * delta + dc);
                out(ch, r, c) = pairwise_sum(block) * inv;
            }
    return LRField(std::move(out), delta);
}

/// Replicates each LR value over its delta x delta block.
inline HRField upsample_nearest(const LRField& lr, int delta) {
    const int lh = lr.height(), lw = lr.width();
    if (delta < 1) throw std::invalid_argument("upsample_nearest: delta must be >= 1");
    Tensor out(kFieldChannels, lh * delta, lw * delta);
    for (int ch = 0; ch < kFieldChannels; ++ch)
        for (int r = 0; r < lh * delta; ++r)
            for (int c = 0; c < lw * delta; ++c)
                out(ch, r, c) = lr.data(ch, r / delta, c / delta);
    return HRField(std::move(out));
}

inline HRField upsample_nearest(const LRField& lr) { return upsample_nearest(lr, lr.delta); }

/// Discrete Gaussian kernel exp(-6 d^2 / delta^2) truncated at radius
/// ceil(1.5 delta) and renormalized to unit mass. The continuous prefactor
/// drops out in the renormalization.
inline std::vector<double> gaussian_kernel_1d(int delta) {
    if (delta < 1) throw std::invalid_argument("gaussian_kernel_1d: delta must be >= 1");
    const int radius = static_cast<int>(std::ceil(1.5 * delta));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-6.0 * i * i / (static_cast<double>(delta) * delta));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Periodic convolution with the separable discrete Gaussian; no coarsening.
inline HRField gaussian_filter(const HRField& hr, int delta) {
    const int h = hr.height(), w = hr.width();
    const auto k = gaussian_kernel_1d(delta);
    const int radius = (static_cast<int>(k.size()) - 1) / 2;
    Tensor tmp(kFieldChannels, h, w), out(kFieldChannels, h, w);
    // rows
    for (int ch = 0; ch < kFieldChannels; ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int cc = ((c + i) % w + w) % w;
                    s += k[i + radius] * hr.data(ch, r, cc);
                }
                tmp(ch, r, c) = s;
            }
    // columns
    for (int ch = 0; ch < kFieldChannels; ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int rr = ((r + i) % h + h) % h;
                    s += k[i + radius] * tmp(ch, rr, c);
                }
                out(ch, r, c) = s;
            }
    return HRField(std::move(out));
}

/// 5-point Laplacian, periodic boundaries, unit grid spacing.
inline HRField laplacian(const HRField& f) {
    const int h = f.height(), w = f.width();
    Tensor out(kFieldChannels, h, w);
    for (int ch = 0; ch < kFieldChannels; ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                int rn = (r + h - 1) % h, rs = (r + 1) % h;
                int cw = (c + w - 1) % w, ce = (c + 1) % w;
                out(ch, r, c) = f.data(ch, rn, c) + f.data(ch, rs, c) +
                                f.data(ch, r, cw) + f.data(ch, r, ce) -
                                4.0 * f.data(ch, r, c);
            }
    return HRField(std::move(out));
}

}  // namespace condsr
