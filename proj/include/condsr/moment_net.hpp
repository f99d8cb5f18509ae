#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "condsr/autonet.hpp"
#include "condsr/grid.hpp"
#include "condsr/moments.hpp"

namespace condsr {

/// Architecture knob of the network-assisted estimator ladder.
struct MomentNetArch {
    int blocks = 2;
    int filters = 4;
};

struct MomentNetConfig {
    int epochs = 20;
    int batch = 8;
    std::uint64_t seed = 0;
    net::AdamHyper adam{1e-3, 0.9, 0.999, 1e-8};
};

/// Fully convolutional LR -> HR regressor: expand, residual trunk, one
/// depth-to-space stage covering the full upsampling factor delta.
inline net::Network make_moment_net(const MomentNetArch& arch, int delta, Rng& rng) {
    net::Network n;
    n.add<net::Conv3x3>(2, arch.filters);
    n.add<net::Relu>();
    for (int b = 0; b < arch.blocks; ++b) n.add<net::ResidualBlock>(arch.filters);
    n.add<net::Conv3x3>(arch.filters, kFieldChannels * delta * delta);
    n.add<net::DepthToSpace>(delta);
    n.init_weights(rng);
    return n;
}

struct MomentNetResult {
    net::Network network;
    std::vector<double> train_mse;  // per epoch
    std::vector<double> valid_mse;  // per epoch
};

namespace detail_mnet {

/// Regression target for one sample: SF for p=1, centered squares for p=2.
inline Tensor target_for(const HRField& hr, int delta, int p, const net::Network* center_net,
                         const MomentModel* center_model) {
    auto [lr, sf] = sf_decompose(hr, delta);
    if (p == 1) return sf.data;
    Tensor mean = center_net ? center_net->forward(lr.data) : center_model->evaluate(lr);
    Tensor t = sf.data;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = t[i] - mean[i];
        t[i] = d * d;
    }
    return t;
}

inline double mse_of(const net::Network& nw, const Dataset& ds, int p,
                     const net::Network* center_net, const MomentModel* center_model) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const HRField& hr : ds.samples) {
        LRField lr = box_filter_coarsen(hr, ds.delta);
        Tensor pred = nw.forward(lr.data);
        Tensor t = target_for(hr, ds.delta, p, center_net, center_model);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double e = pred[i] - t[i];
            sum += e * e;
        }
        count += t.size();
    }
    return sum / static_cast<double>(count);
}

}  // namespace detail_mnet

/// Supervised MSE regression of the conditional moment; for p=2 one of
/// the centering estimators must be supplied.
inline MomentNetResult fit_moment_network(const Dataset& ds_train, const Dataset& ds_valid, int p,
                                          const MomentNetArch& arch, const MomentNetConfig& cfg,
                                          const net::Network* center_net = nullptr,
                                          const MomentModel* center_model = nullptr) {
    if (p != 1 && p != 2) throw std::invalid_argument("fit_moment_network: p must be 1 or 2");
    if (p == 2 && center_net == nullptr && center_model == nullptr)
        throw std::invalid_argument("fit_moment_network: p=2 requires a centering estimator");
    if (ds_train.samples.empty()) throw std::invalid_argument("fit_moment_network: empty dataset");

    Rng rng(cfg.seed);
    MomentNetResult res;
    res.network = make_moment_net(arch, ds_train.delta, rng);
    net::AdamState state = net::AdamState::for_network(res.network);

    const std::size_t n = ds_train.samples.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // shuffled minibatch SGD
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        for (std::size_t start = 0; start < n; start += cfg.batch) {
            const std::size_t stop = std::min(start + cfg.batch, n);
            net::Gradients grads = res.network.zero_grads();
            for (std::size_t i = start; i < stop; ++i) {
                const HRField& hr = ds_train.samples[order[i]];
                LRField lr = box_filter_coarsen(hr, ds_train.delta);
                net::Tape tape;
                Tensor pred = res.network.forward(lr.data, nullptr, &tape);
                Tensor t = detail_mnet::target_for(hr, ds_train.delta, p, center_net, center_model);
                Tensor up = pred;
                up -= t;
                // L = mean squared error over pixels and the minibatch
                up *= 2.0 / (static_cast<double>(t.size()) * (stop - start));
                res.network.backward(tape, up, grads);
            }
            net::adam_step(res.network, grads, state, cfg.adam);
        }
        const double tm = detail_mnet::mse_of(res.network, ds_train, p, center_net, center_model);
        const double vm = detail_mnet::mse_of(res.network, ds_valid, p, center_net, center_model);
        if (!std::isfinite(tm) || !std::isfinite(vm))
            throw std::runtime_error("fit_moment_network: divergent training (non-finite loss)");
        res.train_mse.push_back(tm);
        res.valid_mse.push_back(vm);
    }
    return res;
}

struct ArchSweepEntry {
    MomentNetArch arch;
    double valid_mse = 0.0;
};

struct ArchSweepReport {
    std::vector<ArchSweepEntry> entries;
    int selected = 0;  // index into entries
};

/// Default desk-scale ladder {(2,4),(4,8),(8,16)}; selects the smallest
/// architecture within 2% of the best validation MSE.
inline ArchSweepReport sweep_moment_net(const Dataset& ds_train, const Dataset& ds_valid, int p,
                                        const MomentNetConfig& cfg,
                                        const std::vector<MomentNetArch>& ladder =
                                            {{2, 4}, {4, 8}, {8, 16}},
                                        const net::Network* center_net = nullptr,
                                        const MomentModel* center_model = nullptr) {
    if (ladder.empty()) throw std::invalid_argument("sweep_moment_net: empty ladder");
    ArchSweepReport report;
    for (const auto& arch : ladder) {
        MomentNetResult r = fit_moment_network(ds_train, ds_valid, p, arch, cfg, center_net,
                                               center_model);
        report.entries.push_back({arch, r.valid_mse.back()});
    }
    double best = report.entries.front().valid_mse;
    for (const auto& e : report.entries) best = std::min(best, e.valid_mse);
    int sel = -1;
    long long sel_size = 0;
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        const auto& e = report.entries[i];
        const long long size = static_cast<long long>(e.arch.blocks) * e.arch.filters;
        if (e.valid_mse <= best * 1.02 && (sel < 0 || size < sel_size)) {
            sel = static_cast<int>(i);
            sel_size = size;
        }
    }
    report.selected = sel;
    return report;
}

}  // namespace condsr
