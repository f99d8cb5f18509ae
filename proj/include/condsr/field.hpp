#pragma once

#include <stdexcept>

#include "condsr/tensor.hpp"

namespace condsr {

inline constexpr int kFieldChannels = 2;  // easterly, northerly

/// Fine-resolution 2-channel velocity snapshot.
struct HRField {
    Tensor data;  // [2, H, W]

    HRField() = default;
    explicit HRField(Tensor t) : data(std::move(t)) {
        if (data.channels() != kFieldChannels)
            throw std::invalid_argument("HRField: channel count must be 2");
    }
    HRField(int h, int w) : data(kFieldChannels, h, w) {}

    int height() const { return data.height(); }
    int width() const { return data.width(); }
};

/// Coarse observation of an HRField; `delta` is the filter size in HR pixels.
struct LRField {
    Tensor data;  // [2, H/delta, W/delta]
    int delta = 1;

    LRField() = default;
    LRField(Tensor t, int d) : data(std::move(t)), delta(d) {
        if (data.channels() != kFieldChannels)
            throw std::invalid_argument("LRField: channel count must be 2");
        if (d < 1) throw std::invalid_argument("LRField: delta must be >= 1");
    }

    int height() const { return data.height(); }
    int width() const { return data.width(); }
};

/// Residual HR minus nearest-neighbour-upsampled LR.
struct SubfilterField {
    Tensor data;  // [2, H, W]

    SubfilterField() = default;
    explicit SubfilterField(Tensor t) : data(std::move(t)) {
        if (data.channels() != kFieldChannels)
            throw std::invalid_argument("SubfilterField: channel count must be 2");
    }
};

}  // namespace condsr
