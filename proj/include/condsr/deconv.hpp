#pragma once

#include <functional>
#include <stdexcept>

#include "condsr/filters.hpp"

namespace condsr {

using FilterOp = std::function<HRField(const HRField&)>;

/// Truncated Neumann-series inverse: xi ~ xi_bar + sum_{i=1..n} (I-g)^i xi_bar.
inline HRField adm_deconvolve(const HRField& filtered, const FilterOp& filter_op, int n = 5) {
    if (n < 0) throw std::invalid_argument("adm_deconvolve: n must be >= 0");
    HRField out = filtered;
    HRField term = filtered;
    for (int i = 1; i <= n; ++i) {
        HRField g = filter_op(term);
        term = HRField(term.data - g.data);  // (I-g)^i xi_bar
        out.data += term.data;
    }
    return out;
}

/// Wraps box+coarsen as an HR->HR operator; idempotent, so ADM on it is a no-op.
inline FilterOp box_upsample_filter(int delta) {
    return [delta](const HRField& f) { return upsample_nearest(box_filter_coarsen(f, delta), delta); };
}

inline FilterOp gaussian_filter_op(int delta) {
    return [delta](const HRField& f) { return gaussian_filter(f, delta); };
}

/// First-order Taylor inversion: xi ~ xi_bar - delta^2/24 lap(xi_bar).
inline HRField taylor_deconvolve(const HRField& filtered, int delta) {
    HRField lap = laplacian(filtered);
    const double coef = static_cast<double>(delta) * delta / 24.0;
    return HRField(filtered.data - coef * lap.data);
}

}  // namespace condsr
