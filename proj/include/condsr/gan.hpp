#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "condsr/autonet.hpp"
#include "condsr/filters.hpp"
#include "condsr/grid.hpp"
#include "condsr/moments.hpp"
#include "condsr/rng.hpp"

namespace condsr {

inline constexpr double kLogClamp = 1e-7;
inline constexpr int kNoiseChannels = 4;

struct LossWeights {
    double alpha = 1.0;
    double beta = 0.01;
    double gamma = 1.0;
};

enum class LossVariant { diversity, dsgan, gensim, none };

inline LossVariant parse_variant(const std::string& s) {
    if (s == "diversity") return LossVariant::diversity;
    if (s == "dsgan") return LossVariant::dsgan;
    if (s == "gensim") return LossVariant::gensim;
    if (s == "none") return LossVariant::none;
    throw std::invalid_argument("unknown loss variant: " + s);
}

struct TrainConfig {
    int m = 4;           // LR fields per step
    int r = 8;           // SR samples per LR field
    int steps = 2000;
    std::uint64_t seed = 0;
    LossVariant variant = LossVariant::diversity;
    net::AdamHyper adam_g{2e-4, 0.9, 0.999, 1e-8};
    net::AdamHyper adam_d{2e-4, 0.9, 0.999, 1e-8};
    // generator/discriminator balance thresholds on L_advG
    double theta_lo = 0.45 * 0.6931471805599453;
    double theta_hi = 2.0 * 0.6931471805599453;
    int k_max = 5;  // max consecutive one-sided skips
};

struct TrainLogEntry {
    int step = 0;
    double l_content = 0.0;
    double l_adv_g = 0.0;
    double l_adv_d = 0.0;
    double l_div = 0.0;  // value of the chosen diversity-type loss
    std::string action;  // both | g_only | d_only
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("TrainLog: cannot open " + path);
        os << "step,l_content,l_adv_g,l_adv_d,l_div,action\n";
        os.precision(17);
        for (const auto& e : entries)
            os << e.step << ',' << e.l_content << ',' << e.l_adv_g << ',' << e.l_adv_d << ','
               << e.l_div << ',' << e.action << '\n';
        if (!os) throw std::runtime_error("TrainLog: write failed");
    }
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

inline double clamp_prob(double p) { return std::clamp(p, kLogClamp, 1.0 - kLogClamp); }

/// (L_D, L_advG) for one batch of discriminator outputs.
inline std::pair<double, double> adversarial_losses(const std::vector<double>& d_real,
                                                    const std::vector<double>& d_fake) {
    if (d_real.empty() || d_fake.empty())
        throw std::invalid_argument("adversarial_losses: empty batch");
    double lr = 0.0, lf = 0.0, lg = 0.0;
    for (double p : d_real) lr -= std::log(clamp_prob(p));
    for (double p : d_fake) {
        lf -= std::log(1.0 - clamp_prob(p));
        lg -= std::log(clamp_prob(p));
    }
    const double l_d = lf / d_fake.size() + lr / d_real.size();
    return {l_d, lg / d_fake.size()};
}

/// Mean over the batch of ||g(sr) - lr||_2.
inline double content_loss(const std::vector<HRField>& sr_batch,
                           const std::vector<LRField>& lr_batch, int delta) {
    if (sr_batch.size() != lr_batch.size() || sr_batch.empty())
        throw std::invalid_argument("content_loss: batch mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < sr_batch.size(); ++i) {
        LRField g = box_filter_coarsen(sr_batch[i], delta);
        if (!g.data.same_shape(lr_batch[i].data))
            throw std::invalid_argument("content_loss: shape mismatch");
        Tensor d = g.data;
        d -= lr_batch[i].data;
        sum += d.l2_norm();
    }
    return sum / static_cast<double>(sr_batch.size());
}

namespace detail_gan {

/// Per-pixel sample mean and variance (1/r normalization) of r fields.
inline void sample_moments(const std::vector<Tensor>& samples, Tensor& mean, Tensor& var) {
    const std::size_t r = samples.size();
    mean = samples[0];
    for (std::size_t s = 1; s < r; ++s) mean += samples[s];
    mean *= 1.0 / static_cast<double>(r);
    var = Tensor(mean.channels(), mean.height(), mean.width());
    for (std::size_t s = 0; s < r; ++s)
        for (std::size_t i = 0; i < var.size(); ++i) {
            const double d = samples[s][i] - mean[i];
            var[i] += d * d;
        }
    var *= 1.0 / static_cast<double>(r);
}

}  // namespace detail_gan

/// Diagonal-Gaussian Frechet distance between sample moments of the r
/// subfilter samples and the reference moment field.
inline double diversity_loss(const std::vector<Tensor>& sf_samples, const MomentField& mf) {
    if (sf_samples.size() < 2) throw std::invalid_argument("diversity_loss: need r >= 2 samples");
    Tensor mean, var;
    detail_gan::sample_moments(sf_samples, mean, var);
    double sq = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        const double dm = mean[i] - mf.mean[i];
        const double v = mf.var[i], vh = var[i];
        sq += dm * dm + v + vh - 2.0 * std::sqrt(std::max(v * vh, 0.0));
    }
    return std::sqrt(std::max(sq, 0.0));
}

/// Capped noise-sensitivity ratio, negated.
inline double dsgan_loss(const Tensor& sr_a, const Tensor& sr_b, const Tensor& z_a,
                         const Tensor& z_b, double tau) {
    Tensor dz = z_a;
    dz -= z_b;
    const double nz = dz.l2_norm();
    if (nz == 0.0) throw std::invalid_argument("dsgan_loss: coincident noise vectors");
    Tensor ds = sr_a;
    ds -= sr_b;
    return -std::min(ds.l2_norm() / nz, tau);
}

/// tau = ||sigma(SF|LR)||_2 / ||sigma(z)||_2 with uniform[-1,1] noise.
inline double dsgan_tau(const MomentField& mf, std::size_t noise_dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < mf.var.size(); ++i) s += std::max(mf.var[i], 0.0);
    const double sigma_z = std::sqrt(static_cast<double>(noise_dim) / 3.0);
    return std::sqrt(s) / sigma_z;
}

/// Negative mean per-pixel sample standard deviation.
inline double gensim_loss(const std::vector<Tensor>& sr_samples) {
    if (sr_samples.size() < 2) throw std::invalid_argument("gensim_loss: need r >= 2 samples");
    Tensor mean, var;
    detail_gan::sample_moments(sr_samples, mean, var);
    double s = 0.0;
    for (std::size_t i = 0; i < var.size(); ++i) s += std::sqrt(std::max(var[i], 0.0));
    return -s / static_cast<double>(var.size());
}

// ---------------------------------------------------------------------------
// Desk-scale architectures
// ---------------------------------------------------------------------------

/// LR [2,lh,lw] -> SF [2,4lh,4lw]: expand to 12 channels, append 4
/// uniform noise channels, 4 residual blocks of 16 filters, two
/// depth-to-space super-resolution stages.
inline net::Network make_generator(Rng& rng) {
    net::Network g;
    g.add<net::Conv3x3>(2, 12);
    g.add<net::AppendNoise>(kNoiseChannels);
    g.add<net::ResidualBlock>(16);
    g.add<net::ResidualBlock>(16);
    g.add<net::ResidualBlock>(16);
    g.add<net::ResidualBlock>(16);
    g.add<net::DepthToSpace>(2);  // 4 ch at 2x
    g.add<net::Conv3x3>(4, 16);
    g.add<net::Relu>();
    g.add<net::DepthToSpace>(2);  // 4 ch at 4x
    g.add<net::Conv3x3>(4, 2);
    g.init_weights(rng);
    return g;
}

/// HR [2,h,w] -> probability; 4 convs with leaky ReLU and
/// space-to-depth downsampling, then 2 dense layers and a sigmoid.
inline net::Network make_discriminator(int h, int w, Rng& rng) {
    if (h % 16 != 0 || w % 16 != 0)
        throw std::invalid_argument("make_discriminator: dims must be divisible by 16");
    net::Network d;
    d.add<net::Conv3x3>(2, 4);
    d.add<net::LeakyRelu>(0.2);
    d.add<net::SpaceToDepth>(2);  // 16 ch
    d.add<net::Conv3x3>(16, 8);
    d.add<net::LeakyRelu>(0.2);
    d.add<net::SpaceToDepth>(2);  // 32 ch
    d.add<net::Conv3x3>(32, 8);
    d.add<net::LeakyRelu>(0.2);
    d.add<net::SpaceToDepth>(2);  // 32 ch
    d.add<net::Conv3x3>(32, 8);
    d.add<net::LeakyRelu>(0.2);
    d.add<net::SpaceToDepth>(2);  // 32 ch at h/16
    d.add<net::Dense>(32 * (h / 16) * (w / 16), 32);
    d.add<net::LeakyRelu>(0.2);
    d.add<net::Dense>(32, 1);
    d.add<net::Sigmoid>();
    d.init_weights(rng);
    return d;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainResult {
    net::Network generator;
    net::Network discriminator;
    TrainLog log;
};

inline TrainResult train(const TrainConfig& cfg, const Dataset& ds, const LossWeights& weights) {
    if (cfg.m < 1 || cfg.r < 1 || cfg.steps < 1)
        throw std::invalid_argument("train: m, r, steps must be >= 1");
    if ((cfg.variant == LossVariant::diversity || cfg.variant == LossVariant::dsgan) &&
        !ds.has_moments())
        throw std::invalid_argument("train: variant requires attached moment fields");
    if (cfg.variant == LossVariant::dsgan && cfg.r < 2)
        throw std::invalid_argument("train: dsgan requires r >= 2");
    if (ds.samples.empty()) throw std::invalid_argument("train: empty dataset");

    const int delta = ds.delta;
    const int h = ds.height(), w = ds.width();
    const int lh = h / delta, lw = w / delta;
    const std::size_t npx = static_cast<std::size_t>(kFieldChannels) * h * w;
    // gensim's weight is capped at 0.01 regardless of the configured gamma
    const double gamma_eff =
        cfg.variant == LossVariant::gensim ? std::min(weights.gamma, 0.01) : weights.gamma;

    Rng rng(cfg.seed);
    TrainResult out;
    out.generator = make_generator(rng);
    out.discriminator = make_discriminator(h, w, rng);
    net::AdamState state_g = net::AdamState::for_network(out.generator);
    net::AdamState state_d = net::AdamState::for_network(out.discriminator);

    int g_skips = 0, d_skips = 0;
    const int rm = cfg.r * cfg.m;

    std::vector<std::size_t> lr_idx(cfg.m), real_idx(rm);
    std::vector<Tensor> noise(rm);
    std::vector<Tensor> fakes(rm);       // SF outputs of G
    std::vector<net::Tape> tapes(rm);
    std::vector<LRField> lrs(cfg.m);
    std::vector<Tensor> ups(cfg.m);

    for (int step = 0; step < cfg.steps; ++step) {
        // all randomness drawn serially up front for reproducibility
        for (int i = 0; i < cfg.m; ++i) lr_idx[i] = rng.below(ds.samples.size());
        for (int i = 0; i < rm; ++i) real_idx[i] = rng.below(ds.samples.size());
        for (int i = 0; i < rm; ++i) {
            noise[i] = Tensor(kNoiseChannels, lh, lw);
            for (std::size_t j = 0; j < noise[i].size(); ++j) noise[i][j] = rng.uniform(-1.0, 1.0);
        }

        for (int i = 0; i < cfg.m; ++i) {
            lrs[i] = box_filter_coarsen(ds.samples[lr_idx[i]], delta);
            ups[i] = upsample_nearest(lrs[i], delta).data;
        }
        for (int i = 0; i < cfg.m; ++i)
            for (int s = 0; s < cfg.r; ++s) {
                const int k = i * cfg.r + s;
                fakes[k] = out.generator.forward(lrs[i].data, &noise[k], &tapes[k]);
            }

        // discriminator outputs on all fakes (needed for balancing and L_advG)
        std::vector<double> d_fake(rm);
        for (int k = 0; k < rm; ++k) {
            Tensor sr = fakes[k];
            sr += ups[k / cfg.r];
            d_fake[k] = out.discriminator.forward(sr)[0];
        }
        double l_adv_g = 0.0;
        for (double p : d_fake) l_adv_g -= std::log(clamp_prob(p));
        l_adv_g /= rm;

        bool do_g = true, do_d = true;
        std::string action = "both";
        if (l_adv_g > cfg.theta_hi && d_skips < cfg.k_max) {
            do_d = false;
            action = "g_only";
        } else if (l_adv_g < cfg.theta_lo && g_skips < cfg.k_max) {
            do_g = false;
            action = "d_only";
        }
        d_skips = do_d ? 0 : d_skips + 1;
        g_skips = do_g ? 0 : g_skips + 1;

        // ---- discriminator loss (always evaluated for the log) ----
        std::vector<double> d_real(rm);
        std::vector<net::Tape> d_tapes_real(rm);
        for (int k = 0; k < rm; ++k)
            d_real[k] = out.discriminator
                            .forward(ds.samples[real_idx[k]].data, nullptr,
                                     do_d ? &d_tapes_real[k] : nullptr)[0];
        auto [l_adv_d, l_adv_g_check] = adversarial_losses(d_real, d_fake);
        (void)l_adv_g_check;

        if (do_d) {
            net::Gradients dg = out.discriminator.zero_grads();
            Tensor up1(1, 1, 1);
            for (int k = 0; k < rm; ++k) {
                // fake term: -log(1 - D); re-run with a tape
                net::Tape t;
                Tensor sr = fakes[k];
                sr += ups[k / cfg.r];
                const double p = clamp_prob(out.discriminator.forward(sr, nullptr, &t)[0]);
                up1[0] = 1.0 / ((1.0 - p) * rm);
                out.discriminator.backward(t, up1, dg);
                // real term: -log D
                const double pr = clamp_prob(d_real[k]);
                up1[0] = -1.0 / (pr * rm);
                out.discriminator.backward(d_tapes_real[k], up1, dg);
            }
            net::adam_step(out.discriminator, dg, state_d, cfg.adam_d);
        }

        // ---- generator loss ----
        double l_content = 0.0, l_div = 0.0;
        std::vector<Tensor> dsf(rm, Tensor(kFieldChannels, h, w));

        // content: mean_k ||g(sr_k) - lr||
        for (int k = 0; k < rm; ++k) {
            Tensor sr = fakes[k];
            sr += ups[k / cfg.r];
            LRField g = box_filter_coarsen(HRField(sr), delta);
            Tensor diff = g.data;
            diff -= lrs[k / cfg.r].data;
            const double nrm = diff.l2_norm();
            l_content += nrm / rm;
            if (do_g && nrm > 0.0) {
                const double scale =
                    weights.alpha / (nrm * rm * static_cast<double>(delta) * delta);
                for (int ch = 0; ch < kFieldChannels; ++ch)
                    for (int r2 = 0; r2 < h; ++r2)
                        for (int c2 = 0; c2 < w; ++c2)
                            dsf[k](ch, r2, c2) += scale * diff(ch, r2 / delta, c2 / delta);
            }
        }

        // adversarial: -mean_k log D(sr_k); backprop through D into sf
        if (do_g && weights.beta != 0.0) {
            net::Gradients scratch = out.discriminator.zero_grads();
            Tensor up1(1, 1, 1);
            for (int k = 0; k < rm; ++k) {
                net::Tape t;
                Tensor sr = fakes[k];
                sr += ups[k / cfg.r];
                const double p = clamp_prob(out.discriminator.forward(sr, nullptr, &t)[0]);
                up1[0] = -weights.beta / (p * rm);
                Tensor din = out.discriminator.backward(t, up1, scratch);
                dsf[k] += din;
            }
        }

        // diversity-type term, per LR field
        for (int i = 0; i < cfg.m; ++i) {
            std::vector<Tensor> samples(fakes.begin() + static_cast<std::ptrdiff_t>(i) * cfg.r,
                                        fakes.begin() + static_cast<std::ptrdiff_t>(i + 1) * cfg.r);
            if (cfg.variant == LossVariant::diversity) {
                MomentField mf;
                mf.mean = ds.moment_mean[lr_idx[i]];
                mf.var = ds.moment_var[lr_idx[i]];
                Tensor mean, var;
                detail_gan::sample_moments(samples, mean, var);
                double sq = 0.0;
                for (std::size_t j = 0; j < npx; ++j) {
                    const double dm = mean[j] - mf.mean[j];
                    const double v = std::max(mf.var[j], 0.0);
                    const double vh = std::max(var[j], 0.0);
                    sq += dm * dm + v + vh - 2.0 * std::sqrt(v * vh);
                }
                const double ld = std::sqrt(std::max(sq, 0.0));
                l_div += ld / cfg.m;
                if (do_g && ld > 1e-12) {
                    const double pref = gamma_eff / (2.0 * ld * cfg.m);
                    for (int s = 0; s < cfg.r; ++s) {
                        Tensor& g = dsf[i * cfg.r + s];
                        const Tensor& sf = samples[s];
                        for (std::size_t j = 0; j < npx; ++j) {
                            const double vh = std::max(var[j], kVarianceFloor);
                            const double dmu = 2.0 * (mean[j] - mf.mean[j]) / cfg.r;
                            const double dvar = (1.0 - std::sqrt(std::max(mf.var[j], 0.0) / vh)) *
                                                2.0 * (sf[j] - mean[j]) / cfg.r;
                            g[j] += pref * (dmu + dvar);
                        }
                    }
                }
            } else if (cfg.variant == LossVariant::gensim) {
                Tensor mean, var;
                detail_gan::sample_moments(samples, mean, var);
                double s = 0.0;
                for (std::size_t j = 0; j < npx; ++j) s += std::sqrt(std::max(var[j], 0.0));
                const double lg = -s / static_cast<double>(npx);
                l_div += lg / cfg.m;
                if (do_g) {
                    const double pref = gamma_eff / (static_cast<double>(npx) * cfg.r * cfg.m);
                    for (int s2 = 0; s2 < cfg.r; ++s2) {
                        Tensor& g = dsf[i * cfg.r + s2];
                        const Tensor& sf = samples[s2];
                        for (std::size_t j = 0; j < npx; ++j) {
                            const double sd = std::sqrt(std::max(var[j], kVarianceFloor));
                            g[j] -= pref * (sf[j] - mean[j]) / sd;
                        }
                    }
                }
            } else if (cfg.variant == LossVariant::dsgan) {
                MomentField mf;
                mf.mean = ds.moment_mean[lr_idx[i]];
                mf.var = ds.moment_var[lr_idx[i]];
                const double tau = dsgan_tau(mf, noise[0].size());
                const int npairs = cfg.r / 2;
                for (int pr = 0; pr < npairs; ++pr) {
                    const int ka = i * cfg.r + 2 * pr, kb = ka + 1;
                    Tensor dsr = fakes[ka];
                    dsr -= fakes[kb];
                    Tensor dz = noise[ka];
                    dz -= noise[kb];
                    const double nz = dz.l2_norm();
                    const double nd = dsr.l2_norm();
                    const double ratio = nd / nz;
                    l_div += -std::min(ratio, tau) / (npairs * cfg.m);
                    if (do_g && ratio < tau && nd > 0.0) {
                        const double pref = gamma_eff / (nd * nz * npairs * cfg.m);
                        for (std::size_t j = 0; j < npx; ++j) {
                            dsf[ka][j] -= pref * dsr[j];
                            dsf[kb][j] += pref * dsr[j];
                        }
                    }
                }
            }
        }

        if (do_g) {
            net::Gradients gg = out.generator.zero_grads();
            for (int k = 0; k < rm; ++k) out.generator.backward(tapes[k], dsf[k], gg);
            net::adam_step(out.generator, gg, state_g, cfg.adam_g);
        } else {
            for (int k = 0; k < rm; ++k) tapes[k].consumed = true;
        }

        const double l_total = weights.alpha * l_content + weights.beta * l_adv_g +
                               gamma_eff * l_div;
        if (!std::isfinite(l_total) || !std::isfinite(l_adv_d))
            throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));

        out.log.entries.push_back({step, l_content, l_adv_g, l_adv_d, l_div, action});
    }
    return out;
}

/// Draws `count` SR fields for one LR field from a trained generator.
inline std::vector<HRField> sample(const net::Network& generator, const LRField& lr, int count,
                                   std::uint64_t seed) {
    const int delta = lr.delta;
    Tensor up = upsample_nearest(lr, delta).data;
    Rng rng(seed);
    std::vector<HRField> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Tensor z(kNoiseChannels, lr.height(), lr.width());
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = rng.uniform(-1.0, 1.0);
        Tensor sf = generator.forward(lr.data, &z);
        sf += up;
        out.emplace_back(std::move(sf));
    }
    return out;
}

}  // namespace condsr
