#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "condsr/fft.hpp"
#include "condsr/filters.hpp"
#include "condsr/grid.hpp"
#include "condsr/moments.hpp"

namespace condsr {

struct MetricsReport {
    double diversity_pct = 0.0;
    double diversity_stderr = 0.0;
    double consistency_pct = 0.0;
    double consistency_stderr = 0.0;
    std::vector<double> spectrum_k;
    std::vector<double> spectrum_E;
    std::vector<double> dissipation_E;
    std::vector<double> zeta_bins;  // bin centers
    std::vector<double> zeta_pdf;
    std::vector<double> sf_bins;
    std::vector<double> sf_pdf;
};

namespace detail_eval {

inline std::pair<double, double> mean_stderr(const std::vector<double>& v) {
    const std::size_t n = v.size();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    if (n < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

/// Per-pixel sample standard deviation over an ensemble (1/r convention,
/// matching the diversity loss).
inline Tensor ensemble_std(const std::vector<HRField>& ensemble) {
    const std::size_t r = ensemble.size();
    Tensor mean = ensemble[0].data;
    for (std::size_t s = 1; s < r; ++s) mean += ensemble[s].data;
    mean *= 1.0 / static_cast<double>(r);
    Tensor var(mean.channels(), mean.height(), mean.width());
    for (std::size_t s = 0; s < r; ++s)
        for (std::size_t i = 0; i < var.size(); ++i) {
            const double d = ensemble[s].data[i] - mean[i];
            var[i] += d * d;
        }
    for (std::size_t i = 0; i < var.size(); ++i)
        var[i] = std::sqrt(var[i] / static_cast<double>(r));
    return var;
}

}  // namespace detail_eval

/// E_lr[ ||sigma_ref - sigma_hat||_2 / ||sigma_ref||_2 ] * 100.
inline std::pair<double, double> diversity_metric(const std::vector<std::vector<HRField>>& ensembles,
                                                  const std::vector<MomentField>& mf_per_lr) {
    if (ensembles.empty() || ensembles.size() != mf_per_lr.size())
        throw std::invalid_argument("diversity_metric: ensemble/moment list mismatch");
    std::vector<double> per_lr;
    per_lr.reserve(ensembles.size());
    for (std::size_t i = 0; i < ensembles.size(); ++i) {
        if (ensembles[i].size() < 2)
            throw std::invalid_argument("diversity_metric: ensembles need >= 2 members");
        Tensor shat = detail_eval::ensemble_std(ensembles[i]);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < shat.size(); ++j) {
            const double sref = std::sqrt(std::max(mf_per_lr[i].var[j], 0.0));
            const double d = sref - shat[j];
            num += d * d;
            den += sref * sref;
        }
        if (den == 0.0) throw std::invalid_argument("diversity_metric: all-zero reference sigma");
        per_lr.push_back(100.0 * std::sqrt(num / den));
    }
    return detail_eval::mean_stderr(per_lr);
}

/// E_lr[ (1/||lr||) E_sample ||g(sr) - lr|| ] * 100.
inline std::pair<double, double> consistency_metric(const std::vector<std::vector<HRField>>& ensembles,
                                                    const std::vector<LRField>& lrs, int delta) {
    if (ensembles.empty() || ensembles.size() != lrs.size())
        throw std::invalid_argument("consistency_metric: ensemble/LR list mismatch");
    std::vector<double> per_lr;
    per_lr.reserve(ensembles.size());
    for (std::size_t i = 0; i < ensembles.size(); ++i) {
        if (ensembles[i].empty())
            throw std::invalid_argument("consistency_metric: empty ensemble");
        const double nlr = lrs[i].data.l2_norm();
        if (nlr == 0.0) throw std::invalid_argument("consistency_metric: zero-norm LR");
        double acc = 0.0;
        for (const HRField& sr : ensembles[i]) {
            LRField g = box_filter_coarsen(sr, delta);
            Tensor d = g.data;
            d -= lrs[i].data;
            acc += d.l2_norm();
        }
        per_lr.push_back(100.0 * acc / (static_cast<double>(ensembles[i].size()) * nlr));
    }
    return detail_eval::mean_stderr(per_lr);
}

/// Radially binned energy spectrum over integer-|k| annuli, both
/// channels summed, averaged over fields; sum of bins equals the
/// (channel-summed) spatial variance under this normalization.
inline void radial_spectrum(const std::vector<HRField>& fields, std::vector<double>& k_out,
                            std::vector<double>& e_out) {
    const int h = fields.front().height(), w = fields.front().width();
    const int kmax = static_cast<int>(std::floor(
        std::sqrt(static_cast<double>(h / 2) * (h / 2) + static_cast<double>(w / 2) * (w / 2))));
    e_out.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
    const double norm = 1.0 / (static_cast<double>(h) * w * h * w);
    for (const HRField& f : fields)
        for (int ch = 0; ch < kFieldChannels; ++ch) {
            std::vector<cplx> plane(static_cast<std::size_t>(h) * w);
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c)
                    plane[static_cast<std::size_t>(r) * w + c] = cplx(f.data(ch, r, c), 0.0);
            auto spec = fft2(plane, h, w);
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    const int kr = signed_freq(r, h), kc = signed_freq(c, w);
                    if (kr == 0 && kc == 0) continue;  // mean carries no energy
                    const int bin = static_cast<int>(std::lround(
                        std::sqrt(static_cast<double>(kr) * kr + static_cast<double>(kc) * kc)));
                    const cplx v = spec[static_cast<std::size_t>(r) * w + c];
                    e_out[std::min(bin, kmax)] += std::norm(v) * norm;
                }
        }
    for (double& e : e_out) e /= static_cast<double>(fields.size());
    k_out.resize(e_out.size());
    for (std::size_t i = 0; i < k_out.size(); ++i) k_out[i] = static_cast<double>(i);
}

/// Normalized histogram over [lo, hi] with out-of-range values folded
/// into the end bins; masses (pdf * width) sum to 1.
inline void histogram(const std::vector<double>& values, double lo, double hi, int nbins,
                      std::vector<double>& centers, std::vector<double>& pdf) {
    if (values.empty()) throw std::invalid_argument("histogram: no values");
    const double width = (hi - lo) / nbins;
    std::vector<double> counts(nbins, 0.0);
    for (double v : values) {
        int b = static_cast<int>(std::floor((v - lo) / width));
        counts[std::clamp(b, 0, nbins - 1)] += 1.0;
    }
    centers.resize(nbins);
    pdf.resize(nbins);
    const double total = static_cast<double>(values.size());
    for (int b = 0; b < nbins; ++b) {
        centers[b] = lo + (b + 0.5) * width;
        pdf[b] = counts[b] / (total * width);
    }
}

/// Spectra and PDF statistics of an HR field collection.
inline MetricsReport stats_report(const std::vector<HRField>& fields, int delta, int nbins = 41) {
    if (fields.empty()) throw std::invalid_argument("stats_report: no fields");
    MetricsReport rep;
    radial_spectrum(fields, rep.spectrum_k, rep.spectrum_E);
    rep.dissipation_E.resize(rep.spectrum_E.size());
    for (std::size_t i = 0; i < rep.spectrum_E.size(); ++i)
        rep.dissipation_E[i] = rep.spectrum_k[i] * rep.spectrum_k[i] * rep.spectrum_E[i];

    // longitudinal gradient zeta = (dU1/dx) / rms, central differences
    std::vector<double> grads;
    const int h = fields.front().height(), w = fields.front().width();
    grads.reserve(fields.size() * static_cast<std::size_t>(h) * w);
    double ss = 0.0;
    for (const HRField& f : fields)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const double g =
                    0.5 * (f.data(0, r, (c + 1) % w) - f.data(0, r, (c + w - 1) % w));
                grads.push_back(g);
                ss += g * g;
            }
    const double rms = std::sqrt(ss / static_cast<double>(grads.size()));
    if (rms == 0.0) throw std::invalid_argument("stats_report: zero gradient rms (constant field)");
    for (double& g : grads) g /= rms;
    histogram(grads, -5.0, 5.0, nbins, rep.zeta_bins, rep.zeta_pdf);

    // subfilter easterly velocity PDF
    std::vector<double> sfv;
    sfv.reserve(grads.size());
    double amax = 0.0;
    for (const HRField& f : fields) {
        auto [lr, sf] = sf_decompose(f, delta);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const double v = sf.data(0, r, c);
                sfv.push_back(v);
                amax = std::max(amax, std::abs(v));
            }
    }
    if (amax == 0.0) amax = 1.0;
    histogram(sfv, -amax, amax, nbins, rep.sf_bins, rep.sf_pdf);
    return rep;
}

/// JSON report plus companion CSVs (<stem>_spectrum.csv, _zeta.csv,
/// _sf.csv) for plotting.
inline void emit_report(const MetricsReport& rep, const std::string& path) {
    if (rep.spectrum_k.size() != rep.spectrum_E.size() ||
        rep.spectrum_k.size() != rep.dissipation_E.size() ||
        rep.zeta_bins.size() != rep.zeta_pdf.size() || rep.sf_bins.size() != rep.sf_pdf.size() ||
        rep.spectrum_k.empty() || rep.zeta_bins.empty())
        throw std::invalid_argument("emit_report: inconsistent or empty report arrays");

    nlohmann::json j;
    j["diversity_pct"] = rep.diversity_pct;
    j["diversity_stderr"] = rep.diversity_stderr;
    j["consistency_pct"] = rep.consistency_pct;
    j["consistency_stderr"] = rep.consistency_stderr;
    j["spectrum_k"] = rep.spectrum_k;
    j["spectrum_E"] = rep.spectrum_E;
    j["dissipation_E"] = rep.dissipation_E;
    j["zeta_bins"] = rep.zeta_bins;
    j["zeta_pdf"] = rep.zeta_pdf;
    j["sf_bins"] = rep.sf_bins;
    j["sf_pdf"] = rep.sf_pdf;

    std::ofstream os(path);
    if (!os) throw std::runtime_error("emit_report: cannot open " + path);
    os << j.dump(2) << '\n';
    if (!os) throw std::runtime_error("emit_report: write failed");

    std::string stem = path;
    const auto dot = stem.rfind('.');
    if (dot != std::string::npos && stem.find('/', dot) == std::string::npos)
        stem.resize(dot);
    auto write_csv = [&](const std::string& suffix, const std::string& header,
                         const std::vector<double>& a, const std::vector<double>& b,
                         const std::vector<double>* c) {
        std::ofstream cs(stem + suffix);
        if (!cs) throw std::runtime_error("emit_report: cannot open " + stem + suffix);
        cs.precision(17);
        cs << header << '\n';
        for (std::size_t i = 0; i < a.size(); ++i) {
            cs << a[i] << ',' << b[i];
            if (c) cs << ',' << (*c)[i];
            cs << '\n';
        }
        if (!cs) throw std::runtime_error("emit_report: write failed");
    };
    write_csv("_spectrum.csv", "k,E,dissipation", rep.spectrum_k, rep.spectrum_E,
              &rep.dissipation_E);
    write_csv("_zeta.csv", "zeta,pdf", rep.zeta_bins, rep.zeta_pdf, nullptr);
    write_csv("_sf.csv", "sf,pdf", rep.sf_bins, rep.sf_pdf, nullptr);
}

/// Round-trip loader for tests and plotting scripts.
inline MetricsReport read_report(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_report: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    MetricsReport rep;
    rep.diversity_pct = j.at("diversity_pct").get<double>();
    rep.diversity_stderr = j.at("diversity_stderr").get<double>();
    rep.consistency_pct = j.at("consistency_pct").get<double>();
    rep.consistency_stderr = j.at("consistency_stderr").get<double>();
    rep.spectrum_k = j.at("spectrum_k").get<std::vector<double>>();
    rep.spectrum_E = j.at("spectrum_E").get<std::vector<double>>();
    rep.dissipation_E = j.at("dissipation_E").get<std::vector<double>>();
    rep.zeta_bins = j.at("zeta_bins").get<std::vector<double>>();
    rep.zeta_pdf = j.at("zeta_pdf").get<std::vector<double>>();
    rep.sf_bins = j.at("sf_bins").get<std::vector<double>>();
    rep.sf_pdf = j.at("sf_pdf").get<std::vector<double>>();
    return rep;
}

}  // namespace condsr
