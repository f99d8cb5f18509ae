#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "condsr/stencil.hpp"

namespace condsr {

/// One polynomial basis term: a product of 1..3 stencil slots.
struct BasisTerm {
    std::array<std::int16_t, 3> slot{-1, -1, -1};
    std::int8_t degree = 0;
    std::int8_t model = 0;  // model at which the term first appears
};

inline constexpr int kNumBasisModels = 15;

/// Cumulative term counts of the model ladder.
inline constexpr std::array<int, kNumBasisModels> kModelTermCounts = {
    2, 4, 5, 13, 21, 37, 53, 77, 85, 133, 149, 173, 197, 261, 293};

namespace detail {

inline std::vector<BasisTerm> build_term_table() {
    using L = StencilLayout;
    std::vector<BasisTerm> terms;
    terms.reserve(kModelTermCounts.back());

    auto slot = [](int cell, int comp) { return static_cast<std::int16_t>(cell * 2 + comp); };
    auto add1 = [&](int model, int s0) {
        BasisTerm t;
        t.slot[0] = static_cast<std::int16_t>(s0);
        t.degree = 1;
        t.model = static_cast<std::int8_t>(model);
        terms.push_back(t);
    };
    auto add2 = [&](int model, int s0, int s1) {
        BasisTerm t;
        t.slot[0] = static_cast<std::int16_t>(s0);
        t.slot[1] = static_cast<std::int16_t>(s1);
        t.degree = 2;
        t.model = static_cast<std::int8_t>(model);
        terms.push_back(t);
    };
    auto add3 = [&](int model, int s0, int s1, int s2) {
        BasisTerm t;
        t.slot[0] = static_cast<std::int16_t>(s0);
        t.slot[1] = static_cast<std::int16_t>(s1);
        t.slot[2] = static_cast<std::int16_t>(s2);
        t.degree = 3;
        t.model = static_cast<std::int8_t>(model);
        terms.push_back(t);
    };

    // Model 0: N0 components.
    for (int i = 0; i < 2; ++i) add1(0, slot(L::n0(), i));
    // Model 1: N0 squares.
    for (int i = 0; i < 2; ++i) add2(1, slot(L::n0(), i), slot(L::n0(), i));
    // Model 2: N0 cross product.
    add2(2, slot(L::n0(), 0), slot(L::n0(), 1));
    // Model 3 / 4: ring-1 linear terms.
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) add1(3, slot(L::n1(i), j));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) add1(4, slot(L::c1(i), j));
    // Model 5 / 6: N0 x ring-1 products (all component pairs, all cells).
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) add2(5, slot(L::n0(), a), slot(L::n1(i), b));
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) add2(6, slot(L::n0(), a), slot(L::c1(i), b));
    // Model 7 / 8: ring-2 linear terms.
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 2; ++j) add1(7, slot(L::n2(i), j));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) add1(8, slot(L::c2(i), j));
    // Model 9 / 10: N0 x ring-2 products.
    for (int i = 0; i < 12; ++i)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) add2(9, slot(L::n0(), a), slot(L::n2(i), b));
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) add2(10, slot(L::n0(), a), slot(L::c2(i), b));
    // Model 11 / 12: N0 x same-cell ring-1 quadratics (unordered component pairs).
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 2; ++k)
                for (int l = k; l < 2; ++l)
                    add3(11, slot(L::n0(), a), slot(L::n1(i), k), slot(L::n1(i), l));
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 2; ++k)
                for (int l = k; l < 2; ++l)
                    add3(12, slot(L::n0(), a), slot(L::c1(i), k), slot(L::c1(i), l));
    // Model 13: N0 x ring-1 cell x clockwise-adjacent cell.
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    add3(13, slot(L::n0(), a), slot(L::n1(i), k), slot(L::n1((i + 1) % 4), l));
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    add3(13, slot(L::n0(), a), slot(L::c1(i), k), slot(L::c1((i + 1) % 4), l));
    // Model 14: N0 x ring-1 cell x opposite cell, each pair once.
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    add3(14, slot(L::n0(), a), slot(L::n1(i), k), slot(L::n1(i + 2), l));
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    add3(14, slot(L::n0(), a), slot(L::c1(i), k), slot(L::c1(i + 2), l));

    return terms;
}

}  // namespace detail

/// Full nested term table (Model 14); every model's basis is a prefix.
inline const std::vector<BasisTerm>& basis_terms() {
    static const std::vector<BasisTerm> table = detail::build_term_table();
    return table;
}

/// Nested basis selector. `term_index` is the explicit list of term
/// indices into the full table; the default is the prefix 0..q-1 of the
/// requested model, and `linear_subset` restricts to its degree-1 terms.
struct BasisSpec {
    int model_id = 0;
    std::vector<int> term_index;

    static BasisSpec model(int id) {
        if (id < 0 || id >= kNumBasisModels) throw std::invalid_argument("BasisSpec: unknown model_id");
        BasisSpec s;
        s.model_id = id;
        s.term_index.resize(kModelTermCounts[id]);
        for (int i = 0; i < kModelTermCounts[id]; ++i) s.term_index[i] = i;
        return s;
    }

    static BasisSpec linear_subset(int id) {
        if (id < 0 || id >= kNumBasisModels) throw std::invalid_argument("BasisSpec: unknown model_id");
        BasisSpec s;
        s.model_id = id;
        const auto& table = basis_terms();
        for (int i = 0; i < kModelTermCounts[id]; ++i)
            if (table[i].degree == 1) s.term_index.push_back(i);
        return s;
    }

    int q() const { return static_cast<int>(term_index.size()); }
};

/// Evaluates `n` leading terms of the full table on a stencil.
inline void basis_eval_prefix(const StencilNeighborhood& st, int n, double* out) {
    const auto& table = basis_terms();
    if (n < 0 || n > static_cast<int>(table.size()))
        throw std::invalid_argument("basis_eval_prefix: bad term count");
    for (int i = 0; i < n; ++i) {
        const BasisTerm& t = table[i];
        double v = st.slots[t.slot[0]];
        if (t.degree > 1) v *= st.slots[t.slot[1]];
        if (t.degree > 2) v *= st.slots[t.slot[2]];
        out[i] = v;
    }
}

inline std::vector<double> basis_eval(const BasisSpec& spec, const StencilNeighborhood& st) {
    const auto& table = basis_terms();
    std::vector<double> out(spec.term_index.size());
    for (std::size_t i = 0; i < spec.term_index.size(); ++i) {
        const BasisTerm& t = table[spec.term_index[i]];
        double v = st.slots[t.slot[0]];
        if (t.degree > 1) v *= st.slots[t.slot[1]];
        if (t.degree > 2) v *= st.slots[t.slot[2]];
        out[i] = v;
    }
    return out;
}

}  // namespace condsr
