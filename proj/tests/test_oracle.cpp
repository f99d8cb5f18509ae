#include <catch2/catch_amalgamated.hpp>

#include "condsr/oracle.hpp"

using namespace condsr;

TEST_CASE("synthesis covariance is a valid stationary covariance") {
    SynthParams sp{16, 16, -5.0 / 3.0, 0.0, 0};
    Eigen::MatrixXd C = synthesis_covariance(sp);
    const int n = 16 * 16;
    REQUIRE(C.rows() == n);
    // unit field variance on the diagonal
    for (int i = 0; i < n; ++i) REQUIRE(C(i, i) == Catch::Approx(1.0).margin(1e-10));
    REQUIRE((C - C.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    // circulant: covariance depends only on the periodic lag
    REQUIRE(C(0, 1) == Catch::Approx(C(17, 18)).margin(1e-12));
    REQUIRE(C(0, 15) == Catch::Approx(C(0, 1)).margin(1e-12));  // wraparound lag
    // positive semidefinite
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("synthesis covariance matches a Monte Carlo estimate") {
    SynthParams sp{16, 16, -2.0, 0.0, 0};
    Eigen::MatrixXd C = synthesis_covariance(sp);
    auto ds = synth_dataset(4000, 16, 16, -2.0, 0.0, 271);
    // a handful of entries, channel 0
    for (auto [i, j] : {std::pair{0, 0}, {0, 1}, {0, 17}, {5, 200}, {100, 101}}) {
        double acc = 0.0;
        for (const auto& hr : ds.samples) acc += hr.data[i] * hr.data[j];
        acc /= ds.samples.size();
        REQUIRE(acc == Catch::Approx(C(i, j)).margin(0.08));
    }
}

TEST_CASE("delta=1 observation pins the field exactly") {
    SynthParams sp{8, 8, -2.0, 0.0, 0};
    auto ds = synth_dataset(1, 8, 8, -2.0, 0.0, 5, 1);
    LRField lr = box_filter_coarsen(ds.samples[0], 1);
    MomentField mf = gaussian_oracle(sp, 1, lr);
    for (std::size_t j = 0; j < mf.mean.size(); ++j) {
        REQUIRE(std::abs(mf.mean[j]) < 1e-8);              // subfilter mean is zero
        REQUIRE(mf.var[j] == Catch::Approx(kVarianceFloor).margin(1e-8));
    }
}

TEST_CASE("posterior mean reproduces the observation") {
    SynthParams sp{16, 16, -5.0 / 3.0, 0.0, 0};
    auto ds = synth_dataset(3, 16, 16, -5.0 / 3.0, 0.0, 87, 4);
    GaussianOracle orc(sp, 4);
    for (const auto& hr : ds.samples) {
        LRField lr = box_filter_coarsen(hr, 4);
        MomentField mf = orc.evaluate(lr);
        // box-filtering (up(lr) + sf_mean) must return lr: the posterior
        // mean is consistent with what was observed
        HRField post(16, 16);
        HRField up = upsample_nearest(lr);
        for (std::size_t j = 0; j < post.data.size(); ++j)
            post.data[j] = up.data[j] + mf.mean[j];
        LRField back = box_filter_coarsen(post, 4);
        for (std::size_t j = 0; j < back.data.size(); ++j)
            REQUIRE(back.data[j] == Catch::Approx(lr.data[j]).margin(1e-8));
    }
}

TEST_CASE("posterior variance is between zero and the prior") {
    SynthParams sp{16, 16, -3.0, 0.0, 0};
    auto ds = synth_dataset(1, 16, 16, -3.0, 0.0, 3, 4);
    MomentField mf = gaussian_oracle(sp, 4, box_filter_coarsen(ds.samples[0], 4));
    for (std::size_t j = 0; j < mf.var.size(); ++j) {
        REQUIRE(mf.var[j] >= kVarianceFloor);
        REQUIRE(mf.var[j] <= 1.0 + 1e-9);  // prior variance is one
    }
    // conditioning on a coarse observation must leave some spread
    double vbar = 0.0;
    for (std::size_t j = 0; j < mf.var.size(); ++j) vbar += mf.var[j];
    REQUIRE(vbar / mf.var.size() > 0.01);
}

TEST_CASE("oracle conditional mean is the least-squares optimum") {
    // regress SF on all LR cells over many samples; the global linear
    // fit must converge to the oracle gain's prediction
    const int size = 16, delta = 4;
    SynthParams sp{size, size, -5.0 / 3.0, 0.0, 0};
    GaussianOracle orc(sp, delta);
    const int n = 40000;
    auto ds = synth_dataset(n, size, size, -5.0 / 3.0, 0.0, 42, delta);
    const int m = (size / delta) * (size / delta);

    // normal equations for one target pixel, channel 0
    const int pr = 6, pc = 6;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (const auto& hr : ds.samples) {
        auto [lr, sf] = sf_decompose(hr, delta);
        Eigen::VectorXd y(m);
        for (int j = 0; j < m; ++j) y[j] = lr.data[j];
        G += y * y.transpose();
        rhs += y * sf.data(0, pr, pc);
    }
    Eigen::VectorXd beta = G.ldlt().solve(rhs);

    // compare predictions on fresh fields
    auto dsv = synth_dataset(5, size, size, -5.0 / 3.0, 0.0, 999, delta);
    for (const auto& hr : dsv.samples) {
        LRField lr = box_filter_coarsen(hr, delta);
        Eigen::VectorXd y(m);
        for (int j = 0; j < m; ++j) y[j] = lr.data[j];
        const double fitted = beta.dot(y);
        MomentField mf = orc.evaluate(lr);
        REQUIRE(fitted == Catch::Approx(mf.mean(0, pr, pc)).margin(0.05));
    }
}

TEST_CASE("moment attachment covers every sample") {
    auto ds = synth_dataset(4, 16, 16, -2.0, 0.0, 64, 4);
    attach_oracle_moments(ds);
    REQUIRE(ds.moment_mean.size() == 4);
    REQUIRE(ds.moment_var.size() == 4);
    for (const auto& v : ds.moment_var)
        for (std::size_t j = 0; j < v.size(); ++j) REQUIRE(v[j] >= kVarianceFloor);
}

TEST_CASE("oracle rejects unsupported configurations") {
    REQUIRE_THROWS(GaussianOracle(SynthParams{16, 16, -2.0, 0.5, 0}, 4));   // warped
    REQUIRE_THROWS(GaussianOracle(SynthParams{64, 64, -2.0, 0.0, 0}, 4));   // too large
    REQUIRE_THROWS(GaussianOracle(SynthParams{16, 16, -2.0, 0.0, 0}, 3));   // not divisible
    GaussianOracle orc(SynthParams{16, 16, -2.0, 0.0, 0}, 4);
    REQUIRE_THROWS(orc.evaluate(LRField(Tensor(2, 8, 8), 2)));              // shape mismatch
}
