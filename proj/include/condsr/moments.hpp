#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "condsr/basis.hpp"
#include "condsr/grid.hpp"
#include "condsr/stencil.hpp"

namespace condsr {

inline constexpr double kVarianceFloor = 1e-12;

/// Evaluated conditional mean and variance on the HR grid.
struct MomentField {
    Tensor mean;  // [2, H, W]
    Tensor var;   // [2, H, W], clamped at kVarianceFloor
};

/// Per-pixel, per-channel estimator f(lr) = A + sum_j B_j (b_j - mu_j),
/// where mu is the training-sample mean of the basis terms (shared by
/// all HR pixels inside an LR cell).
struct MomentModel {
    int model_id = 0;
    int p = 1;
    bool centered = false;  // p=2 fitted on (sf - mean_est)^2
    int H = 0, W = 0, delta = 1;
    std::vector<int> term_index;  // indices into basis_terms()

    // A[(ch*H + r)*W + c]; B[pixel_channel * q + j]; mu[cell * q + j]
    std::vector<double> A;
    std::vector<double> B;
    std::vector<double> mu;

    int q() const { return static_cast<int>(term_index.size()); }
    int lh() const { return H / delta; }
    int lw() const { return W / delta; }

    /// f evaluated for every HR pixel and channel of one LR field.
    Tensor evaluate(const LRField& lr) const {
        if (lr.height() != lh() || lr.width() != lw())
            throw std::invalid_argument("MomentModel::evaluate: shape mismatch");
        const int nq = q();
        Tensor out(kFieldChannels, H, W);
        std::vector<double> b(nq);
        for (int cr = 0; cr < lh(); ++cr)
            for (int cc = 0; cc < lw(); ++cc) {
                StencilNeighborhood st = build_stencil_cell(lr, cr, cc);
                const auto& table = basis_terms();
                for (int j = 0; j < nq; ++j) {
                    const BasisTerm& t = table[term_index[j]];
                    double v = st.slots[t.slot[0]];
                    if (t.degree > 1) v *= st.slots[t.slot[1]];
                    if (t.degree > 2) v *= st.slots[t.slot[2]];
                    b[j] = v;
                }
                const double* cell_mu = mu.data() + static_cast<std::size_t>(cr * lw() + cc) * nq;
                for (int dr = 0; dr < delta; ++dr)
                    for (int dc = 0; dc < delta; ++dc) {
                        const int r = cr * delta + dr, c = cc * delta + dc;
                        for (int ch = 0; ch < kFieldChannels; ++ch) {
                            const std::size_t px = (static_cast<std::size_t>(ch) * H + r) * W + c;
                            const double* coef = B.data() + px * nq;
                            double f = A[px];
                            for (int j = 0; j < nq; ++j) f += coef[j] * (b[j] - cell_mu[j]);
                            out[px] = f;
                        }
                    }
            }
        return out;
    }
};

/// Raw moment accumulators over a training set, computed once for the
/// leading `nterms` of the full basis table; any model whose terms fall
/// inside the prefix can be solved from them.
struct MomentAccum {
    int n = 0;
    int H = 0, W = 0, delta = 1, lh = 0, lw = 0;
    int nterms = 0;
    int p = 1;
    bool centered = false;

    std::vector<double> s1;   // [cell][nterms] sum of terms
    std::vector<double> s2;   // [cell][lower triangle] sum of term products
    std::vector<double> st;   // [px_ch] sum of targets
    std::vector<double> st2;  // [px_ch] sum of squared targets
    std::vector<double> sbt;  // [px_ch][nterms] sum of term * target

    std::size_t tri_size() const { return static_cast<std::size_t>(nterms) * (nterms + 1) / 2; }
};

/// One pass over the dataset. For p=2 the targets are centered squares
/// (sf - center(lr))^2; `center` is the fitted p=1 estimator.
inline MomentAccum accumulate_moments(const Dataset& ds, int p, int nterms,
                                      const MomentModel* center = nullptr) {
    if (p != 1 && p != 2) throw std::invalid_argument("accumulate_moments: p must be 1 or 2");
    if (p == 2 && center == nullptr)
        throw std::invalid_argument("accumulate_moments: p=2 requires a centering model");
    if (ds.samples.empty()) throw std::invalid_argument("accumulate_moments: empty dataset");

    MomentAccum acc;
    acc.H = ds.height();
    acc.W = ds.width();
    acc.delta = ds.delta;
    acc.lh = acc.H / acc.delta;
    acc.lw = acc.W / acc.delta;
    acc.nterms = nterms;
    acc.p = p;
    acc.centered = (p == 2);
    const int ncells = acc.lh * acc.lw;
    const std::size_t npx = static_cast<std::size_t>(acc.H) * acc.W * kFieldChannels;
    acc.s1.assign(static_cast<std::size_t>(ncells) * nterms, 0.0);
    acc.s2.assign(static_cast<std::size_t>(ncells) * acc.tri_size(), 0.0);
    acc.st.assign(npx, 0.0);
    acc.st2.assign(npx, 0.0);
    acc.sbt.assign(npx * nterms, 0.0);

    std::vector<double> b(nterms);
    for (const HRField& hr : ds.samples) {
        auto [lr, sf] = sf_decompose(hr, acc.delta);
        Tensor center_mean;
        if (p == 2) center_mean = center->evaluate(lr);
        for (int cr = 0; cr < acc.lh; ++cr)
            for (int cc = 0; cc < acc.lw; ++cc) {
                const int cell = cr * acc.lw + cc;
                StencilNeighborhood stn = build_stencil_cell(lr, cr, cc);
                basis_eval_prefix(stn, nterms, b.data());
                double* s1 = acc.s1.data() + static_cast<std::size_t>(cell) * nterms;
                double* s2 = acc.s2.data() + static_cast<std::size_t>(cell) * acc.tri_size();
                std::size_t k = 0;
                for (int j = 0; j < nterms; ++j) {
                    s1[j] += b[j];
                    const double bj = b[j];
                    for (int l = 0; l <= j; ++l) s2[k++] += bj * b[l];
                }
                for (int dr = 0; dr < acc.delta; ++dr)
                    for (int dc = 0; dc < acc.delta; ++dc) {
                        const int r = cr * acc.delta + dr, c = cc * acc.delta + dc;
                        for (int ch = 0; ch < kFieldChannels; ++ch) {
                            const std::size_t px = (static_cast<std::size_t>(ch) * acc.H + r) * acc.W + c;
                            double t = sf.data(ch, r, c);
                            if (p == 2) {
                                const double d = t - center_mean(ch, r, c);
                                t = d * d;
                            }
                            acc.st[px] += t;
                            acc.st2[px] += t * t;
                            double* sbt = acc.sbt.data() + px * nterms;
                            for (int j = 0; j < nterms; ++j) sbt[j] += b[j] * t;
                        }
                    }
            }
        ++acc.n;
    }
    return acc;
}

struct FitResult {
    MomentModel model;
    double train_mse = 0.0;
};

/// Solves the per-pixel normal equations from the accumulators for one
/// term subset. Basis terms are centered and standardized before the
/// ridge-regularized solve; coefficients are de-standardized after.
inline FitResult solve_moment_model(const MomentAccum& acc, const BasisSpec& spec,
                                    double ridge, bool homogeneous = false) {
    const int nq = spec.q();
    for (int idx : spec.term_index)
        if (idx < 0 || idx >= acc.nterms)
            throw std::invalid_argument("solve_moment_model: term outside accumulated prefix");

    FitResult res;
    MomentModel& mm = res.model;
    mm.model_id = spec.model_id;
    mm.p = acc.p;
    mm.centered = acc.centered;
    mm.H = acc.H;
    mm.W = acc.W;
    mm.delta = acc.delta;
    mm.term_index = spec.term_index;
    const int lh = acc.lh, lw = acc.lw, delta = acc.delta;
    const int ncells = lh * lw;
    const std::size_t npx = static_cast<std::size_t>(acc.H) * acc.W * kFieldChannels;
    mm.A.assign(npx, 0.0);
    mm.B.assign(npx * nq, 0.0);
    mm.mu.assign(static_cast<std::size_t>(ncells) * nq, 0.0);

    const double inv_n = 1.0 / acc.n;
    auto tri_at = [&](const double* s2, int j, int l) {
        // lower-triangle storage over the accumulated prefix
        int a = std::max(j, l), bidx = std::min(j, l);
        return s2[static_cast<std::size_t>(a) * (a + 1) / 2 + bidx];
    };

    double mse_sum = 0.0;

    // Pooled statistics for the homogeneity shortcut: one system per
    // within-block offset and channel, pooled over interior LR cells.
    Eigen::MatrixXd pooled_gram;
    Eigen::VectorXd pooled_mean_b;
    std::vector<Eigen::VectorXd> pooled_rhs;
    std::vector<double> pooled_a, pooled_t2;
    int pooled_cells = 0;

    if (homogeneous) {
        pooled_gram = Eigen::MatrixXd::Zero(nq, nq);
        pooled_mean_b = Eigen::VectorXd::Zero(nq);
        const int noff = delta * delta * kFieldChannels;
        pooled_rhs.assign(noff, Eigen::VectorXd::Zero(nq));
        pooled_a.assign(noff, 0.0);
        pooled_t2.assign(noff, 0.0);
        for (int cr = 2; cr + 2 < lh; ++cr)
            for (int cc = 2; cc + 2 < lw; ++cc) {
                const int cell = cr * lw + cc;
                const double* s1 = acc.s1.data() + static_cast<std::size_t>(cell) * acc.nterms;
                const double* s2 = acc.s2.data() + static_cast<std::size_t>(cell) * acc.tri_size();
                for (int j = 0; j < nq; ++j) {
                    pooled_mean_b[j] += s1[spec.term_index[j]] * inv_n;
                    for (int l = 0; l <= j; ++l)
                        pooled_gram(j, l) += tri_at(s2, spec.term_index[j], spec.term_index[l]) * inv_n;
                }
                for (int dr = 0; dr < delta; ++dr)
                    for (int dc = 0; dc < delta; ++dc)
                        for (int ch = 0; ch < kFieldChannels; ++ch) {
                            const int r = cr * delta + dr, c = cc * delta + dc;
                            const std::size_t px = (static_cast<std::size_t>(ch) * acc.H + r) * acc.W + c;
                            const int off = (dr * delta + dc) * kFieldChannels + ch;
                            pooled_a[off] += acc.st[px] * inv_n;
                            pooled_t2[off] += acc.st2[px] * inv_n;
                            const double* sbt = acc.sbt.data() + px * acc.nterms;
                            for (int j = 0; j < nq; ++j)
                                pooled_rhs[off][j] += sbt[spec.term_index[j]] * inv_n;
                        }
                ++pooled_cells;
            }
        if (pooled_cells == 0)
            throw std::invalid_argument("solve_moment_model: grid too small for homogeneous mode");
    }

    Eigen::MatrixXd gram(nq, nq);
    Eigen::VectorXd mean_b(nq), rhs(nq), scale(nq), beta(nq);

    auto solve_cell = [&](const Eigen::MatrixXd& raw_gram_lower, const Eigen::VectorXd& mb,
                          Eigen::LDLT<Eigen::MatrixXd>& ldlt, Eigen::MatrixXd& cgram,
                          Eigen::VectorXd& sc) {
        // centered Gram
        cgram = raw_gram_lower.selfadjointView<Eigen::Lower>();
        cgram.noalias() -= mb * mb.transpose();
        for (int j = 0; j < nq; ++j) {
            double d = std::sqrt(std::max(cgram(j, j), 0.0));
            sc[j] = d > 1e-300 ? d : 1.0;
        }
        Eigen::MatrixXd std_gram = cgram;
        for (int j = 0; j < nq; ++j)
            for (int l = 0; l < nq; ++l) std_gram(j, l) /= sc[j] * sc[l];
        const double lambda = ridge * std_gram.trace() / nq;
        std_gram.diagonal().array() += lambda;
        ldlt.compute(std_gram);
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("solve_moment_model: singular system despite ridge");
    };

    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    Eigen::MatrixXd cgram(nq, nq);

    if (homogeneous) {
        pooled_mean_b /= pooled_cells;
        pooled_gram /= pooled_cells;
        solve_cell(pooled_gram, pooled_mean_b, ldlt, cgram, scale);
    }

    for (int cr = 0; cr < lh; ++cr)
        for (int cc = 0; cc < lw; ++cc) {
            const int cell = cr * lw + cc;
            const double* s1 = acc.s1.data() + static_cast<std::size_t>(cell) * acc.nterms;
            const double* s2 = acc.s2.data() + static_cast<std::size_t>(cell) * acc.tri_size();
            for (int j = 0; j < nq; ++j) mean_b[j] = s1[spec.term_index[j]] * inv_n;
            double* cell_mu = mm.mu.data() + static_cast<std::size_t>(cell) * nq;
            if (homogeneous) {
                for (int j = 0; j < nq; ++j) cell_mu[j] = pooled_mean_b[j];
            } else {
                for (int j = 0; j < nq; ++j) cell_mu[j] = mean_b[j];
                for (int j = 0; j < nq; ++j)
                    for (int l = 0; l <= j; ++l)
                        gram(j, l) = tri_at(s2, spec.term_index[j], spec.term_index[l]) * inv_n;
                solve_cell(gram, mean_b, ldlt, cgram, scale);
            }

            for (int dr = 0; dr < delta; ++dr)
                for (int dc = 0; dc < delta; ++dc)
                    for (int ch = 0; ch < kFieldChannels; ++ch) {
                        const int r = cr * delta + dr, c = cc * delta + dc;
                        const std::size_t px = (static_cast<std::size_t>(ch) * acc.H + r) * acc.W + c;
                        const int off = (dr * delta + dc) * kFieldChannels + ch;
                        double a, t2;
                        if (homogeneous) {
                            a = pooled_a[off] / pooled_cells;
                            t2 = pooled_t2[off] / pooled_cells;
                            rhs = pooled_rhs[off] / pooled_cells;
                            rhs.noalias() -= pooled_mean_b * a;
                        } else {
                            a = acc.st[px] * inv_n;
                            t2 = acc.st2[px] * inv_n;
                            const double* sbt = acc.sbt.data() + px * acc.nterms;
                            for (int j = 0; j < nq; ++j)
                                rhs[j] = sbt[spec.term_index[j]] * inv_n - mean_b[j] * a;
                        }
                        Eigen::VectorXd std_rhs = rhs.cwiseQuotient(scale);
                        beta = ldlt.solve(std_rhs);
                        if (!beta.allFinite())
                            throw std::runtime_error("solve_moment_model: singular system despite ridge");
                        Eigen::VectorXd coef = beta.cwiseQuotient(scale);
                        mm.A[px] = a;
                        double* bp = mm.B.data() + px * nq;
                        for (int j = 0; j < nq; ++j) bp[j] = coef[j];
                        // training MSE: E[t^2] - A^2 - 2 B.r + B' G B
                        double quad = coef.dot(cgram.selfadjointView<Eigen::Lower>() * coef);
                        double mse = t2 - a * a - 2.0 * coef.dot(rhs) + quad;
                        mse_sum += std::max(mse, 0.0);
                    }
        }

    res.train_mse = mse_sum / static_cast<double>(npx);
    return res;
}

/// Per-pixel stochastic estimation on one basis spec.
inline FitResult fit_stochastic(const Dataset& ds, int p, const BasisSpec& spec,
                                double ridge = 1e-8, const MomentModel* center = nullptr,
                                bool homogeneous = false) {
    int nterms = 0;
    for (int idx : spec.term_index) nterms = std::max(nterms, idx + 1);
    MomentAccum acc = accumulate_moments(ds, p, nterms, center);
    return solve_moment_model(acc, spec, ridge, homogeneous);
}

/// Mean from the p=1 model, variance from the centered p=2 model.
inline MomentField eval_moments(const MomentModel& mm_p1, const MomentModel& mm_p2,
                                const LRField& lr) {
    if (mm_p1.p != 1 || mm_p2.p != 2)
        throw std::invalid_argument("eval_moments: expected a p=1 and a p=2 model");
    MomentField mf;
    mf.mean = mm_p1.evaluate(lr);
    mf.var = mm_p2.evaluate(lr);
    for (std::size_t i = 0; i < mf.var.size(); ++i)
        mf.var[i] = std::max(mf.var[i], kVarianceFloor);
    return mf;
}

/// Out-of-sample MSE of a fitted model; the target matches the fit
/// (sf for p=1, centered squares for p=2).
inline double validation_mse(const MomentModel& mm, const Dataset& ds,
                             const MomentModel* center = nullptr) {
    if (mm.p == 2 && center == nullptr)
        throw std::invalid_argument("validation_mse: p=2 requires a centering model");
    double sum = 0.0;
    std::size_t count = 0;
    for (const HRField& hr : ds.samples) {
        auto [lr, sf] = sf_decompose(hr, mm.delta);
        Tensor pred = mm.evaluate(lr);
        Tensor center_mean;
        if (mm.p == 2) center_mean = center->evaluate(lr);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            double t = sf.data[i];
            if (mm.p == 2) {
                const double d = t - center_mean[i];
                t = d * d;
            }
            const double e = t - pred[i];
            sum += e * e;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

struct ModelSweepEntry {
    int model_id = 0;
    int q = 0;
    double train_mse = 0.0;
    double valid_mse = 0.0;
};

struct ModelSweepReport {
    std::vector<ModelSweepEntry> entries;
    int selected_model = 0;
};

/// Fits every requested model from one shared accumulation pass and
/// selects the smallest model within 0.5% of the best validation MSE.
inline ModelSweepReport sweep_models(const Dataset& ds_train, const Dataset& ds_valid, int p,
                                     const std::vector<int>& model_ids, double ridge = 1e-8,
                                     const MomentModel* center_train = nullptr) {
    if (model_ids.empty()) throw std::invalid_argument("sweep_models: empty model list");
    int nterms = 0;
    for (int id : model_ids) {
        if (id < 0 || id >= kNumBasisModels) throw std::invalid_argument("sweep_models: unknown model_id");
        nterms = std::max(nterms, kModelTermCounts[id]);
    }
    MomentAccum acc = accumulate_moments(ds_train, p, nterms, center_train);

    ModelSweepReport report;
    std::vector<MomentModel> fitted;
    for (int id : model_ids) {
        FitResult fr = solve_moment_model(acc, BasisSpec::model(id), ridge);
        ModelSweepEntry e;
        e.model_id = id;
        e.q = kModelTermCounts[id];
        e.train_mse = fr.train_mse;
        e.valid_mse = validation_mse(fr.model, ds_valid, center_train);
        report.entries.push_back(e);
        fitted.push_back(std::move(fr.model));
    }
    double best = report.entries.front().valid_mse;
    for (const auto& e : report.entries) best = std::min(best, e.valid_mse);
    // smallest model (by term count) within 0.5% of the best
    int sel = -1;
    int sel_q = 0;
    for (const auto& e : report.entries)
        if (e.valid_mse <= best * 1.005 && (sel < 0 || e.q < sel_q)) {
            sel = e.model_id;
            sel_q = e.q;
        }
    report.selected_model = sel;
    return report;
}

// ---------------------------------------------------------------------------
// MomentModel container ("CGM1"): CGF1-style header plus a u32 field
// block (model_id, p, q, centered) before the float64 payload.
// ---------------------------------------------------------------------------

inline void write_moment_model(const MomentModel& mm, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_moment_model: cannot open " + path);
    os.write("CGM1", 4);
    detail::put_u32(os, 1);
    detail::put_u32(os, static_cast<std::uint32_t>(mm.model_id));
    detail::put_u32(os, static_cast<std::uint32_t>(mm.p));
    detail::put_u32(os, static_cast<std::uint32_t>(mm.q()));
    detail::put_u32(os, mm.centered ? 1 : 0);
    detail::put_u32(os, static_cast<std::uint32_t>(mm.H));
    detail::put_u32(os, static_cast<std::uint32_t>(mm.W));
    detail::put_u32(os, static_cast<std::uint32_t>(mm.delta));
    for (int idx : mm.term_index) detail::put_u32(os, static_cast<std::uint32_t>(idx));
    auto put_f64 = [&](const std::vector<double>& v) {
        os.write(reinterpret_cast<const char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    put_f64(mm.A);
    put_f64(mm.B);
    put_f64(mm.mu);
    if (!os) throw std::runtime_error("write_moment_model: write failed");
}

inline MomentModel read_moment_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_moment_model: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CGM1", 4) != 0)
        throw std::runtime_error("read_moment_model: bad magic");
    if (detail::get_u32(is) != 1) throw std::runtime_error("read_moment_model: unsupported version");
    MomentModel mm;
    mm.model_id = static_cast<int>(detail::get_u32(is));
    mm.p = static_cast<int>(detail::get_u32(is));
    const int nq = static_cast<int>(detail::get_u32(is));
    mm.centered = detail::get_u32(is) != 0;
    mm.H = static_cast<int>(detail::get_u32(is));
    mm.W = static_cast<int>(detail::get_u32(is));
    mm.delta = static_cast<int>(detail::get_u32(is));
    if (mm.H <= 0 || mm.W <= 0 || mm.delta <= 0 || nq < 0 || nq > kModelTermCounts.back())
        throw std::runtime_error("read_moment_model: dimension overflow");
    mm.term_index.resize(nq);
    for (int j = 0; j < nq; ++j) mm.term_index[j] = static_cast<int>(detail::get_u32(is));
    auto get_f64 = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        is.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw std::runtime_error("read_moment_model: truncated payload");
    };
    const std::size_t npx = static_cast<std::size_t>(mm.H) * mm.W * kFieldChannels;
    get_f64(mm.A, npx);
    get_f64(mm.B, npx * nq);
    get_f64(mm.mu, static_cast<std::size_t>(mm.lh()) * mm.lw() * nq);
    return mm;
}

}  // namespace condsr
