#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>

#include "condsr/field.hpp"

namespace condsr {

/// Cell classes of the 5x5 LR stencil around the cell N0 containing the
/// target HR pixel. N1: edge-adjacent ring-1 cells, C1: ring-1 corners,
/// C2: ring-2 corners, N2: the remaining 12 ring-2 cells.
enum class StencilClass { N0, N1, C1, N2, C2 };

/// Flattened cell order: N0, N1[4], C1[4], N2[12], C2[4]. Within N1 and
/// C1 the order is clockwise (up first for N1, up-left first for C1), so
/// "adjacent" is the next index mod 4 and "opposite" is index+2 mod 4.
struct StencilLayout {
    static constexpr int kCells = 25;
    static constexpr int kSlots = kCells * kFieldChannels;

    // (row offset, col offset) per flattened cell.
    static constexpr std::array<std::array<int, 2>, kCells> offsets = {{
        {0, 0},                                        // N0
        {-1, 0}, {0, 1}, {1, 0}, {0, -1},              // N1 clockwise from up
        {-1, -1}, {-1, 1}, {1, 1}, {1, -1},            // C1 clockwise from up-left
        {-2, -1}, {-2, 0}, {-2, 1},                    // N2: top edge
        {-1, 2}, {0, 2}, {1, 2},                       //     right edge
        {2, 1}, {2, 0}, {2, -1},                       //     bottom edge
        {1, -2}, {0, -2}, {-1, -2},                    //     left edge
        {-2, -2}, {-2, 2}, {2, 2}, {2, -2},            // C2 clockwise from up-left
    }};

    static constexpr int n0() { return 0; }
    static constexpr int n1(int i) { return 1 + i; }
    static constexpr int c1(int i) { return 5 + i; }
    static constexpr int n2(int i) { return 9 + i; }
    static constexpr int c2(int i) { return 21 + i; }
};

/// LR velocities over the 5x5 stencil; out-of-domain cells replicate the
/// nearest in-domain cell (zero-gradient).
struct StencilNeighborhood {
    // slot = cell * 2 + component, in StencilLayout order.
    std::array<double, StencilLayout::kSlots> slots{};

    double value(int cell, int comp) const { return slots[cell * 2 + comp]; }
};

inline StencilNeighborhood build_stencil(const LRField& lr, int hr_row, int hr_col, int delta) {
    const int lh = lr.height(), lw = lr.width();
    if (hr_row < 0 || hr_col < 0 || hr_row >= lh * delta || hr_col >= lw * delta)
        throw std::out_of_range("build_stencil: pixel out of bounds");
    const int cr = hr_row / delta, cc = hr_col / delta;
    StencilNeighborhood st;
    for (int cell = 0; cell < StencilLayout::kCells; ++cell) {
        int r = std::clamp(cr + StencilLayout::offsets[cell][0], 0, lh - 1);
        int c = std::clamp(cc + StencilLayout::offsets[cell][1], 0, lw - 1);
        for (int comp = 0; comp < kFieldChannels; ++comp)
            st.slots[cell * 2 + comp] = lr.data(comp, r, c);
    }
    return st;
}

/// Stencil built directly from an LR cell index; all HR pixels inside an
/// LR cell share the same stencil.
inline StencilNeighborhood build_stencil_cell(const LRField& lr, int cell_row, int cell_col) {
    const int lh = lr.height(), lw = lr.width();
    if (cell_row < 0 || cell_col < 0 || cell_row >= lh || cell_col >= lw)
        throw std::out_of_range("build_stencil_cell: cell out of bounds");
    StencilNeighborhood st;
    for (int cell = 0; cell < StencilLayout::kCells; ++cell) {
        int r = std::clamp(cell_row + StencilLayout::offsets[cell][0], 0, lh - 1);
        int c = std::clamp(cell_col + StencilLayout::offsets[cell][1], 0, lw - 1);
        for (int comp = 0; comp < kFieldChannels; ++comp)
            st.slots[cell * 2 + comp] = lr.data(comp, r, c);
    }
    return st;
}

}  // namespace condsr
