#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "condsr/fft.hpp"
#include "condsr/field.hpp"
#include "condsr/filters.hpp"
#include "condsr/rng.hpp"
#include "condsr/tensor.hpp"

namespace condsr {

/// Parameters of the spectral synthesis; kept with the dataset so the
/// analytic conditional-moment oracle can rebuild the covariance.
struct SynthParams {
    int height = 32;
    int width = 32;
    double slope = -5.0 / 3.0;
    double warp = 0.0;
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<HRField> samples;
    int delta = 4;
    SynthParams params;
    std::string provenance;

    // Optional per-sample conditional moment fields (mean, variance),
    // each [2, H, W]; empty when not attached.
    std::vector<Tensor> moment_mean;
    std::vector<Tensor> moment_var;

    bool has_moments() const { return !moment_mean.empty(); }

    int height() const { return samples.empty() ? 0 : samples.front().height(); }
    int width() const { return samples.empty() ? 0 : samples.front().width(); }
};

/// Spectral amplitude for wavenumber magnitude k: A ~ k^((slope-1)/2),
/// zero at k = 0, normalized afterwards so the field variance is 1.
inline std::vector<double> synth_amplitudes(int h, int w, double slope) {
    std::vector<double> amp(static_cast<std::size_t>(h) * w, 0.0);
    double power = 0.0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            int kr = signed_freq(r, h), kc = signed_freq(c, w);
            double k = std::sqrt(static_cast<double>(kr) * kr + static_cast<double>(kc) * kc);
            if (k == 0.0) continue;
            double a = std::pow(k, 0.5 * (slope - 1.0));
            amp[static_cast<std::size_t>(r) * w + c] = a;
            power += a * a;
        }
    const double norm = std::sqrt(power / (static_cast<double>(h) * w));
    for (double& a : amp) a /= norm;
    return amp;
}

/// One spectrally colored Gaussian plane: real part of F^-1(A . F(white)).
inline std::vector<double> synth_plane(int h, int w, const std::vector<double>& amp, Rng& rng) {
    std::vector<cplx> plane(static_cast<std::size_t>(h) * w);
    for (auto& v : plane) v = cplx(rng.normal(), 0.0);
    auto spec = fft2(plane, h, w);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= amp[i];
    auto field = ifft2(spec, h, w);
    std::vector<double> out(field.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = field[i].real();
    return out;
}

/// Periodic Gaussian random fields with radial spectrum E(k) ~ k^slope,
/// optionally warped pointwise by x -> (1-warp) x + warp tanh(x).
inline Dataset synth_dataset(int n, int h, int w, double slope, double warp,
                             std::uint64_t seed, int delta = 4) {
    if (!is_power_of_two(h) || !is_power_of_two(w))
        throw std::invalid_argument("synth_dataset: dims must be powers of two");
    if (n < 1) throw std::invalid_argument("synth_dataset: n must be >= 1");
    if (slope >= 0.0) throw std::invalid_argument("synth_dataset: slope must be negative");
    if (warp < 0.0 || warp > 1.0) throw std::invalid_argument("synth_dataset: warp must be in [0,1]");

    const auto amp = synth_amplitudes(h, w, slope);
    Dataset ds;
    ds.delta = delta;
    ds.params = {h, w, slope, warp, seed};
    ds.provenance = "synth";
    ds.samples.reserve(n);
    for (int s = 0; s < n; ++s) {
        Tensor t(kFieldChannels, h, w);
        for (int ch = 0; ch < kFieldChannels; ++ch) {
            Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(s) * kFieldChannels + ch);
            auto plane = synth_plane(h, w, amp, rng);
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    double x = plane[static_cast<std::size_t>(r) * w + c];
                    t(ch, r, c) = (1.0 - warp) * x + warp * std::tanh(x);
                }
        }
        ds.samples.emplace_back(std::move(t));
    }
    return ds;
}

/// HR = upsample(LR) + SF decomposition under the box filter.
inline std::pair<LRField, SubfilterField> sf_decompose(const HRField& hr, int delta) {
    LRField lr = box_filter_coarsen(hr, delta);
    HRField up = upsample_nearest(lr, delta);
    Tensor sf = hr.data - up.data;
    return {std::move(lr), SubfilterField(std::move(sf))};
}

// ---------------------------------------------------------------------------
// CGF1 binary container:
//   bytes "CGF1"; little-endian u32 version=1, n_samples, n_channels,
//   height, width, delta; then float32 payload, sample-major,
//   channel-major, row-major. n_channels is 2 for a plain dataset and 6
//   when conditional moment fields (mean, variance) are attached.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("CGF1: truncated payload");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32_plane(std::ostream& os, const Tensor& t, int ch) {
    std::vector<float> buf(static_cast<std::size_t>(t.height()) * t.width());
    std::size_t k = 0;
    for (int r = 0; r < t.height(); ++r)
        for (int c = 0; c < t.width(); ++c) buf[k++] = static_cast<float>(t(ch, r, c));
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline void get_f32_plane(std::istream& is, Tensor& t, int ch) {
    std::vector<float> buf(static_cast<std::size_t>(t.height()) * t.width());
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw std::runtime_error("CGF1: truncated payload");
    std::size_t k = 0;
    for (int r = 0; r < t.height(); ++r)
        for (int c = 0; c < t.width(); ++c) t(ch, r, c) = buf[k++];
}

}  // namespace detail

inline void write_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_dataset: cannot open " + path);
    const int n = static_cast<int>(ds.samples.size());
    const int nch = ds.has_moments() ? 6 : 2;
    os.write("CGF1", 4);
    detail::put_u32(os, 1);
    detail::put_u32(os, static_cast<std::uint32_t>(n));
    detail::put_u32(os, static_cast<std::uint32_t>(nch));
    detail::put_u32(os, static_cast<std::uint32_t>(ds.height()));
    detail::put_u32(os, static_cast<std::uint32_t>(ds.width()));
    detail::put_u32(os, static_cast<std::uint32_t>(ds.delta));
    for (int s = 0; s < n; ++s) {
        for (int ch = 0; ch < kFieldChannels; ++ch)
            detail::put_f32_plane(os, ds.samples[s].data, ch);
        if (ds.has_moments()) {
            for (int ch = 0; ch < kFieldChannels; ++ch)
                detail::put_f32_plane(os, ds.moment_mean[s], ch);
            for (int ch = 0; ch < kFieldChannels; ++ch)
                detail::put_f32_plane(os, ds.moment_var[s], ch);
        }
    }
    if (!os) throw std::runtime_error("write_dataset: write failed for " + path);
}

inline Dataset read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_dataset: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CGF1", 4) != 0)
        throw std::runtime_error("read_dataset: bad magic");
    const std::uint32_t version = detail::get_u32(is);
    if (version != 1) throw std::runtime_error("read_dataset: unsupported version");
    const std::uint32_t n = detail::get_u32(is);
    const std::uint32_t nch = detail::get_u32(is);
    const std::uint32_t h = detail::get_u32(is);
    const std::uint32_t w = detail::get_u32(is);
    const std::uint32_t delta = detail::get_u32(is);
    if (nch != 2 && nch != 6) throw std::runtime_error("read_dataset: unsupported channel count");
    if (h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16) || n > (1u << 24))
        throw std::runtime_error("read_dataset: dimension overflow");

    Dataset ds;
    ds.delta = static_cast<int>(delta);
    ds.provenance = path;
    ds.samples.reserve(n);
    for (std::uint32_t s = 0; s < n; ++s) {
        Tensor t(kFieldChannels, static_cast<int>(h), static_cast<int>(w));
        for (int ch = 0; ch < kFieldChannels; ++ch) detail::get_f32_plane(is, t, ch);
        ds.samples.emplace_back(std::move(t));
        if (nch == 6) {
            Tensor mean(kFieldChannels, static_cast<int>(h), static_cast<int>(w));
            Tensor var(kFieldChannels, static_cast<int>(h), static_cast<int>(w));
            for (int ch = 0; ch < kFieldChannels; ++ch) detail::get_f32_plane(is, mean, ch);
            for (int ch = 0; ch < kFieldChannels; ++ch) detail::get_f32_plane(is, var, ch);
            ds.moment_mean.emplace_back(std::move(mean));
            ds.moment_var.emplace_back(std::move(var));
        }
    }
    return ds;
}

/// Disjoint, exhaustive, seed-deterministic shuffle split.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction,
                                                 std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split_dataset: fraction must be in (0,1)");
    const std::size_t n = ds.samples.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);
    const std::size_t n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

    auto take = [&](std::size_t lo, std::size_t hi) {
        Dataset out;
        out.delta = ds.delta;
        out.params = ds.params;
        out.provenance = ds.provenance;
        for (std::size_t i = lo; i < hi; ++i) {
            out.samples.push_back(ds.samples[idx[i]]);
            if (ds.has_moments()) {
                out.moment_mean.push_back(ds.moment_mean[idx[i]]);
                out.moment_var.push_back(ds.moment_var[idx[i]]);
            }
        }
        return out;
    };
    return {take(0, n_train), take(n_train, n)};
}

}  // namespace condsr
