#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "condsr/filters.hpp"
#include "condsr/grid.hpp"
#include "condsr/moments.hpp"

namespace condsr {

/// Stationary covariance of the warp=0 spectral synthesis, evaluated as
/// the inverse transform of the power spectrum; circulant on the torus.
inline Eigen::MatrixXd synthesis_covariance(const SynthParams& sp) {
    const int h = sp.height, w = sp.width;
    const auto amp = synth_amplitudes(h, w, sp.slope);
    std::vector<cplx> power(amp.size());
    for (std::size_t i = 0; i < amp.size(); ++i) power[i] = cplx(amp[i] * amp[i], 0.0);
    auto cov_plane = ifft2(power, h, w);  // c(dr, dc)

    const int n = h * w;
    Eigen::MatrixXd C(n, n);
    for (int r1 = 0; r1 < h; ++r1)
        for (int c1 = 0; c1 < w; ++c1)
            for (int r2 = 0; r2 < h; ++r2)
                for (int c2 = 0; c2 < w; ++c2) {
                    int dr = ((r1 - r2) % h + h) % h;
                    int dc = ((c1 - c2) % w + w) % w;
                    C(r1 * w + c1, r2 * w + c2) = cov_plane[static_cast<std::size_t>(dr) * w + dc].real();
                }
    return C;
}

/// Exact conditional moments of the subfilter field for a Gaussian prior
/// under the box+coarsen observation operator:
///   mean = C G' (G C G')^-1 y - up(y),  var = diag(C - C G' (G C G')^-1 G C).
/// The posterior gain depends only on (params, delta) and is cached so
/// per-field evaluation is a matrix-vector product.
class GaussianOracle {
public:
    GaussianOracle(const SynthParams& sp, int delta) : sp_(sp), delta_(delta) {
        build();
    }

    MomentField evaluate(const LRField& lr) const;

    const SynthParams& params() const { return sp_; }
    int delta() const { return delta_; }

private:
    void build();

    SynthParams sp_;
    int delta_ = 1;
    Eigen::MatrixXd gain_;    // n x m posterior gain
    Eigen::VectorXd var_;     // posterior variance diagonal
};

inline void GaussianOracle::build() {
    const int h = sp_.height, w = sp_.width;
    const int delta = delta_;
    if (sp_.warp != 0.0) throw std::invalid_argument("gaussian_oracle: requires warp=0 parameters");
    if (h * w > 1024) throw std::invalid_argument("gaussian_oracle: grid too large for dense algebra");
    if (h % delta != 0 || w % delta != 0)
        throw std::invalid_argument("gaussian_oracle: dims not divisible by delta");
    const int n = h * w;
    const int lh = h / delta, lw = w / delta;
    const int m = lh * lw;

    Eigen::MatrixXd C = synthesis_covariance(sp_);

    // CG' columns: block means of C's columns. K = G C G'.
    Eigen::MatrixXd CGt(n, m);
    const double inv_block = 1.0 / (static_cast<double>(delta) * delta);
    for (int br = 0; br < lh; ++br)
        for (int bc = 0; bc < lw; ++bc) {
            const int col = br * lw + bc;
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
            for (int dr = 0; dr < delta; ++dr)
                for (int dc = 0; dc < delta; ++dc)
                    acc += C.col((br * delta + dr) * w + (bc * delta + dc));
            CGt.col(col) = acc * inv_block;
        }
    Eigen::MatrixXd K(m, m);
    for (int br = 0; br < lh; ++br)
        for (int bc = 0; bc < lw; ++bc) {
            const int row = br * lw + bc;
            for (int col = 0; col < m; ++col) {
                double s = 0.0;
                for (int dr = 0; dr < delta; ++dr)
                    for (int dc = 0; dc < delta; ++dc)
                        s += CGt((br * delta + dr) * w + (bc * delta + dc), col);
                K(row, col) = s * inv_block;
            }
        }

    // K is singular by construction whenever the synthesis pins the
    // spatial mean (A(0)=0 makes the block means sum to zero), so the
    // posterior gain uses the eigenvalue-thresholded pseudo-inverse;
    // observations always lie in range(K).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("gaussian_oracle: eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double emax = ev.maxCoeff();
    if (!(emax > 0.0))
        throw std::runtime_error("gaussian_oracle: ill-conditioned observation covariance");
    const double tol = 1e-10 * emax;
    int rank = 0;
    Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i)
        if (ev[i] > tol) {
            inv_ev[i] = 1.0 / ev[i];
            ++rank;
        }
    if (rank < m / 2)
        throw std::runtime_error("gaussian_oracle: ill-conditioned observation covariance");

    // Posterior gain W = C G' K^+ and variance diag(C - W (C G')').
    Eigen::MatrixXd Kpinv =
        es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
    gain_ = CGt * Kpinv;  // n x m
    var_.resize(n);
    for (int i = 0; i < n; ++i)
        var_[i] = C(i, i) - gain_.row(i).dot(CGt.row(i));
}

inline MomentField GaussianOracle::evaluate(const LRField& lr) const {
    const int h = sp_.height, w = sp_.width;
    const int delta = delta_;
    const int lh = h / delta, lw = w / delta;
    const int m = lh * lw;
    if (lr.height() != lh || lr.width() != lw)
        throw std::invalid_argument("gaussian_oracle: LR shape mismatch");

    MomentField mf;
    mf.mean = Tensor(kFieldChannels, h, w);
    mf.var = Tensor(kFieldChannels, h, w);
    for (int ch = 0; ch < kFieldChannels; ++ch) {
        Eigen::VectorXd y(m);
        for (int br = 0; br < lh; ++br)
            for (int bc = 0; bc < lw; ++bc) y[br * lw + bc] = lr.data(ch, br, bc);
        Eigen::VectorXd post_mean = gain_ * y;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const int i = r * w + c;
                const double up = y[(r / delta) * lw + (c / delta)];
                mf.mean(ch, r, c) = post_mean[i] - up;  // subfilter mean
                mf.var(ch, r, c) = std::max(var_[i], kVarianceFloor);
            }
    }
    return mf;
}

inline MomentField gaussian_oracle(const SynthParams& sp, int delta, const LRField& lr) {
    return GaussianOracle(sp, delta).evaluate(lr);
}

/// Attaches oracle conditional moments to every sample of a dataset.
inline void attach_oracle_moments(Dataset& ds) {
    GaussianOracle orc(ds.params, ds.delta);
    ds.moment_mean.clear();
    ds.moment_var.clear();
    for (const HRField& hr : ds.samples) {
        MomentField mf = orc.evaluate(box_filter_coarsen(hr, ds.delta));
        ds.moment_mean.push_back(std::move(mf.mean));
        ds.moment_var.push_back(std::move(mf.var));
    }
}

}  // namespace condsr
