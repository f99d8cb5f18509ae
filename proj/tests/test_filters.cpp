#include <catch2/catch_amalgamated.hpp>

#include "condsr/fft.hpp"
#include "condsr/filters.hpp"
#include "condsr/grid.hpp"
#include "condsr/rng.hpp"

using namespace condsr;

TEST_CASE("box filter computes exact block means") {
    HRField hr(4, 4);
    double v = 0.0;
    for (std::size_t j = 0; j < hr.data.size(); ++j) hr.data[j] = v += 1.0;
    LRField lr = box_filter_coarsen(hr, 2);
    REQUIRE(lr.height() == 2);
    REQUIRE(lr.delta == 2);
    REQUIRE(lr.data(0, 0, 0) == Catch::Approx((1 + 2 + 5 + 6) / 4.0).epsilon(1e-15));
    REQUIRE(lr.data(0, 1, 1) == Catch::Approx((11 + 12 + 15 + 16) / 4.0).epsilon(1e-15));
}

TEST_CASE("box filter is idempotent on its range, bitwise") {
    auto ds = synth_dataset(4, 32, 32, -5.0 / 3.0, 0.4, 21);
    for (int delta : {2, 4, 8}) {
        for (const auto& hr : ds.samples) {
            LRField lr = box_filter_coarsen(hr, delta);
            LRField again = box_filter_coarsen(upsample_nearest(lr), delta);
            for (std::size_t j = 0; j < lr.data.size(); ++j)
                REQUIRE(lr.data[j] == again.data[j]);
        }
    }
}

TEST_CASE("box filter is linear") {
    auto ds = synth_dataset(2, 16, 16, -2.0, 0.0, 3);
    const HRField &a = ds.samples[0], &b = ds.samples[1];
    HRField combo(16, 16);
    for (std::size_t j = 0; j < combo.data.size(); ++j)
        combo.data[j] = 2.0 * a.data[j] - 3.0 * b.data[j];
    LRField la = box_filter_coarsen(a, 4), lb = box_filter_coarsen(b, 4);
    LRField lc = box_filter_coarsen(combo, 4);
    for (std::size_t j = 0; j < lc.data.size(); ++j)
        REQUIRE(lc.data[j] == Catch::Approx(2.0 * la.data[j] - 3.0 * lb.data[j]).margin(1e-13));
}

TEST_CASE("upsample replicates each coarse cell") {
    LRField lr(Tensor(2, 2, 2), 3);
    for (std::size_t j = 0; j < lr.data.size(); ++j) lr.data[j] = static_cast<double>(j);
    HRField up = upsample_nearest(lr);
    REQUIRE(up.height() == 6);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            REQUIRE(up.data(1, r, c) == lr.data(1, r / 3, c / 3));
    REQUIRE_THROWS(upsample_nearest(lr, 0));
}

TEST_CASE("gaussian kernel is a symmetric partition of unity") {
    for (int delta : {1, 2, 4}) {
        auto k = gaussian_kernel_1d(delta);
        double sum = 0.0;
        for (double v : k) {
            REQUIRE(v > 0.0);
            sum += v;
        }
        REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-14));
        for (std::size_t i = 0; i < k.size(); ++i)
            REQUIRE(k[i] == Catch::Approx(k[k.size() - 1 - i]).epsilon(1e-14));
    }
    REQUIRE_THROWS(gaussian_kernel_1d(0));
}

TEST_CASE("gaussian filter matches its analytic transfer function") {
    // single row-direction Fourier mode: column pass is the identity, so
    // the attenuation equals the kernel's 1-D DFT at that frequency
    const int n = 32, delta = 4, mode = 3;
    HRField hr(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            hr.data(0, r, c) = std::sin(2.0 * M_PI * mode * c / n);
            hr.data(1, r, c) = std::cos(2.0 * M_PI * mode * c / n);
        }
    const auto k = gaussian_kernel_1d(delta);
    const int radius = (static_cast<int>(k.size()) - 1) / 2;
    double transfer = 0.0;
    for (int i = -radius; i <= radius; ++i)
        transfer += k[i + radius] * std::cos(2.0 * M_PI * mode * i / n);

    HRField out = gaussian_filter(hr, delta);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            REQUIRE(out.data(0, r, c) == Catch::Approx(transfer * hr.data(0, r, c)).margin(1e-12));
            REQUIRE(out.data(1, r, c) == Catch::Approx(transfer * hr.data(1, r, c)).margin(1e-12));
        }
}

TEST_CASE("gaussian filter preserves constants") {
    HRField hr(8, 8);
    for (std::size_t j = 0; j < hr.data.size(); ++j) hr.data[j] = 2.5;
    HRField out = gaussian_filter(hr, 2);
    for (std::size_t j = 0; j < out.data.size(); ++j)
        REQUIRE(out.data[j] == Catch::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("laplacian has the discrete Fourier eigenvalues") {
    const int n = 16;
    for (auto [kx, ky] : {std::pair{1, 0}, {0, 2}, {3, 5}}) {
        HRField hr(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double ph = 2.0 * M_PI * (kx * c + ky * r) / n;
                hr.data(0, r, c) = std::sin(ph);
                hr.data(1, r, c) = std::cos(ph);
            }
        const double lam = -4.0 * (std::pow(std::sin(M_PI * kx / n), 2) +
                                   std::pow(std::sin(M_PI * ky / n), 2));
        HRField out = laplacian(hr);
        for (std::size_t j = 0; j < out.data.size(); ++j)
            REQUIRE(out.data[j] == Catch::Approx(lam * hr.data[j]).margin(1e-12));
    }
}

TEST_CASE("fft round-trips and matches a direct DFT") {
    const int h = 8, w = 16;
    Rng rng(77);
    std::vector<cplx> plane(static_cast<std::size_t>(h) * w);
    for (auto& v : plane) v = cplx(rng.normal(), rng.normal());
    auto spec = fft2(plane, h, w);
    // one direct coefficient as a cross-check
    cplx direct(0.0, 0.0);
    const int kr = 3, kc = 5;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double ph = -2.0 * M_PI * (static_cast<double>(kr) * r / h +
                                             static_cast<double>(kc) * c / w);
            direct += plane[static_cast<std::size_t>(r) * w + c] * cplx(std::cos(ph), std::sin(ph));
        }
    REQUIRE(std::abs(spec[static_cast<std::size_t>(kr) * w + kc] - direct) < 1e-10);
    auto back = ifft2(spec, h, w);
    for (std::size_t j = 0; j < plane.size(); ++j) REQUIRE(std::abs(back[j] - plane[j]) < 1e-12);
}
