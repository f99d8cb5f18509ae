// Command-line front end: dataset generation, moment estimation,
// basis sweeps, GAN training, classical deconvolution, and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "condsr/deconv.hpp"
#include "condsr/eval.hpp"
#include "condsr/gan.hpp"
#include "condsr/grid.hpp"
#include "condsr/moment_net.hpp"
#include "condsr/moments.hpp"
#include "condsr/oracle.hpp"

namespace {

using namespace condsr;

std::vector<int> parse_models(const std::string& spec) {
    std::vector<int> ids;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t comma = spec.find(',', pos);
        std::string tok = spec.substr(pos, comma == std::string::npos ? comma : comma - pos);
        const auto dots = tok.find("..");
        if (dots != std::string::npos) {
            int lo = std::stoi(tok.substr(0, dots));
            int hi = std::stoi(tok.substr(dots + 2));
            for (int i = lo; i <= hi; ++i) ids.push_back(i);
        } else if (!tok.empty()) {
            ids.push_back(std::stoi(tok));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return ids;
}

int cmd_gen_data(int n, int size, int delta, double slope, double warp, std::uint64_t seed,
                 const std::string& out) {
    Dataset ds = synth_dataset(n, size, size, slope, warp, seed, delta);
    write_dataset(ds, out);
    std::printf("wrote %d samples (%dx%d, delta %d) to %s\n", n, size, size, delta, out.c_str());
    return 0;
}

int cmd_fit_moments(const std::string& data, const std::string& estimator, int model_id,
                    double ridge, bool homogeneous, int blocks, int filters, int epochs,
                    std::uint64_t seed, double split, const std::string& out_prefix,
                    const std::string& attach) {
    if (estimator != "stochastic" && estimator != "network")
        throw CLI::ValidationError("--estimator must be stochastic or network");
    Dataset ds = read_dataset(data);
    if (estimator == "stochastic") {
        auto fr1 = fit_stochastic(ds, 1, BasisSpec::model(model_id), ridge, nullptr, homogeneous);
        auto fr2 = fit_stochastic(ds, 2, BasisSpec::model(model_id), ridge, &fr1.model,
                                  homogeneous);
        write_moment_model(fr1.model, out_prefix + "_p1.cgm");
        write_moment_model(fr2.model, out_prefix + "_p2.cgm");
        std::printf("model %d: train MSE p1 %.6g, p2 %.6g\n", model_id, fr1.train_mse,
                    fr2.train_mse);
        if (!attach.empty()) {
            ds.moment_mean.clear();
            ds.moment_var.clear();
            for (const HRField& hr : ds.samples) {
                LRField lr = box_filter_coarsen(hr, ds.delta);
                MomentField mf = eval_moments(fr1.model, fr2.model, lr);
                ds.moment_mean.push_back(std::move(mf.mean));
                ds.moment_var.push_back(std::move(mf.var));
            }
            write_dataset(ds, attach);
            std::printf("attached moment fields -> %s\n", attach.c_str());
        }
    } else if (estimator == "network") {
        auto [tr, va] = split_dataset(ds, split, seed);
        MomentNetArch arch{blocks, filters};
        MomentNetConfig cfg;
        cfg.epochs = epochs;
        cfg.seed = seed;
        auto r1 = fit_moment_network(tr, va, 1, arch, cfg);
        auto r2 = fit_moment_network(tr, va, 2, arch, cfg, &r1.network);
        net::write_network_file(r1.network, out_prefix + "_p1.cgn");
        net::write_network_file(r2.network, out_prefix + "_p2.cgn");
        std::printf("network (%d,%d): valid MSE p1 %.6g, p2 %.6g\n", blocks, filters,
                    r1.valid_mse.back(), r2.valid_mse.back());
        if (!attach.empty()) {
            ds.moment_mean.clear();
            ds.moment_var.clear();
            for (const HRField& hr : ds.samples) {
                LRField lr = box_filter_coarsen(hr, ds.delta);
                Tensor mean = r1.network.forward(lr.data);
                Tensor var = r2.network.forward(lr.data);
                for (std::size_t i = 0; i < var.size(); ++i)
                    var[i] = std::max(var[i], kVarianceFloor);
                ds.moment_mean.push_back(std::move(mean));
                ds.moment_var.push_back(std::move(var));
            }
            write_dataset(ds, attach);
            std::printf("attached moment fields -> %s\n", attach.c_str());
        }
    } else {
        throw CLI::ValidationError("--estimator must be stochastic or network");
    }
    return 0;
}

int cmd_sweep_basis(const std::string& data, const std::string& models, int p, double ridge,
                    double split, std::uint64_t seed, const std::string& out) {
    Dataset ds = read_dataset(data);
    auto [tr, va] = split_dataset(ds, split, seed);
    auto ids = parse_models(models);
    MomentModel center;
    const MomentModel* center_ptr = nullptr;
    if (p == 2) {
        // center p=2 targets with the largest requested model's mean fit
        int widest = ids.front();
        for (int id : ids) widest = std::max(widest, id);
        center = fit_stochastic(tr, 1, BasisSpec::model(widest), ridge).model;
        center_ptr = &center;
    }
    auto rep = sweep_models(tr, va, p, ids, ridge, center_ptr);
    std::printf("model,q,train_mse,valid_mse,selected\n");
    std::ofstream os;
    if (!out.empty()) {
        os.open(out);
        if (!os) throw std::runtime_error("cannot open " + out);
        os << "model,q,train_mse,valid_mse,selected\n";
        os.precision(17);
    }
    for (const auto& e : rep.entries) {
        std::printf("%d,%d,%.10g,%.10g,%d\n", e.model_id, e.q, e.train_mse, e.valid_mse,
                    e.model_id == rep.selected_model);
        if (os.is_open())
            os << e.model_id << ',' << e.q << ',' << e.train_mse << ',' << e.valid_mse << ','
               << (e.model_id == rep.selected_model) << '\n';
    }
    return 0;
}

int cmd_train(const std::string& data, const std::string& variant, int steps, int m, int r,
              std::uint64_t seed, double alpha, double beta, double gamma, double lr_g,
              double lr_d, const std::string& out_gen, const std::string& out_disc,
              const std::string& log) {
    Dataset ds = read_dataset(data);
    TrainConfig cfg;
    cfg.variant = parse_variant(variant);
    cfg.steps = steps;
    cfg.m = m;
    cfg.r = r;
    cfg.seed = seed;
    cfg.adam_g.lr = lr_g;
    cfg.adam_d.lr = lr_d;
    LossWeights w{alpha, beta, gamma};
    TrainResult res = train(cfg, ds, w);
    net::write_network_file(res.generator, out_gen);
    if (!out_disc.empty()) net::write_network_file(res.discriminator, out_disc);
    if (!log.empty()) res.log.write_csv(log);
    const auto& e = res.log.entries.back();
    std::printf("trained %d steps: content %.4g adv_g %.4g adv_d %.4g div %.4g\n", steps,
                e.l_content, e.l_adv_g, e.l_adv_d, e.l_div);
    return 0;
}

int cmd_deconv(const std::string& data, const std::string& mode, int delta, int n_iter,
               const std::string& checkpoint, int count, std::uint64_t seed,
               const std::string& out) {
    Dataset ds = read_dataset(data);
    Dataset result;
    result.delta = ds.delta;
    result.provenance = mode;
    if (mode == "adm" || mode == "taylor") {
        for (const HRField& hr : ds.samples) {
            HRField filtered = gaussian_filter(hr, delta);
            HRField rec = mode == "adm"
                              ? adm_deconvolve(filtered, gaussian_filter_op(delta), n_iter)
                              : taylor_deconvolve(filtered, delta);
            result.samples.push_back(std::move(rec));
        }
    } else if (mode == "gan") {
        net::Network gen = net::read_network_file(checkpoint);
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            LRField lr = box_filter_coarsen(ds.samples[i], ds.delta);
            auto ens = sample(gen, lr, count, seed + i);
            for (auto& f : ens) result.samples.push_back(std::move(f));
        }
    } else {
        throw CLI::ValidationError("--mode must be adm, taylor, or gan");
    }
    write_dataset(result, out);
    std::printf("wrote %zu fields to %s\n", result.samples.size(), out.c_str());
    return 0;
}

int cmd_evaluate(const std::string& data, const std::string& checkpoint, int count,
                 std::uint64_t seed, const std::string& moments, double slope, double warp,
                 const std::string& mean_model, const std::string& var_model,
                 const std::string& report) {
    Dataset ds = read_dataset(data);
    const int delta = ds.delta;
    std::vector<LRField> lrs;
    for (const HRField& hr : ds.samples) lrs.push_back(box_filter_coarsen(hr, delta));

    std::vector<std::vector<HRField>> ensembles;
    if (checkpoint.empty()) {
        // baseline: upsampled-LR ensembles (count identical members)
        for (const LRField& lr : lrs)
            ensembles.emplace_back(static_cast<std::size_t>(count), upsample_nearest(lr));
    } else {
        net::Network gen = net::read_network_file(checkpoint);
        for (std::size_t i = 0; i < lrs.size(); ++i)
            ensembles.push_back(sample(gen, lrs[i], count, seed + i));
    }

    std::vector<MomentField> mfs;
    if (moments == "oracle") {
        SynthParams sp{ds.height(), ds.width(), slope, warp, 0};
        GaussianOracle orc(sp, delta);
        for (const LRField& lr : lrs) mfs.push_back(orc.evaluate(lr));
    } else if (moments == "model") {
        MomentModel m1 = read_moment_model(mean_model);
        MomentModel m2 = read_moment_model(var_model);
        for (const LRField& lr : lrs) mfs.push_back(eval_moments(m1, m2, lr));
    } else if (moments == "attached") {
        if (!ds.has_moments()) throw std::runtime_error("dataset has no attached moment fields");
        for (std::size_t i = 0; i < lrs.size(); ++i)
            mfs.push_back({ds.moment_mean[i], ds.moment_var[i]});
    } else {
        throw CLI::ValidationError("--moments must be oracle, model, or attached");
    }

    std::vector<HRField> pool;
    for (const auto& e : ensembles) pool.insert(pool.end(), e.begin(), e.end());
    MetricsReport rep = stats_report(pool, delta);
    auto [dp, dse] = diversity_metric(ensembles, mfs);
    auto [cp, cse] = consistency_metric(ensembles, lrs, delta);
    rep.diversity_pct = dp;
    rep.diversity_stderr = dse;
    rep.consistency_pct = cp;
    rep.consistency_stderr = cse;
    emit_report(rep, report);
    std::printf("diversity %.4g%% +- %.4g, consistency %.4g%% +- %.4g -> %s\n", dp, dse, cp, cse,
                report.c_str());
    return 0;
}

int cmd_oracle(const std::string& data, double slope, double warp, const std::string& out) {
    Dataset ds = read_dataset(data);
    ds.params.height = ds.height();
    ds.params.width = ds.width();
    ds.params.slope = slope;
    ds.params.warp = warp;
    attach_oracle_moments(ds);
    write_dataset(ds, out);
    std::printf("attached oracle moments -> %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional super-resolution toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = auto)");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    int g_n = 64, g_size = 32, g_delta = 4;
    double g_slope = -5.0 / 3.0, g_warp = 0.0;
    std::uint64_t g_seed = 0;
    std::string g_out;
    gen->add_option("--n", g_n, "sample count");
    gen->add_option("--size", g_size, "grid size (power of two)");
    gen->add_option("--delta", g_delta, "filter size in pixels");
    gen->add_option("--slope", g_slope, "radial spectrum exponent");
    gen->add_option("--warp", g_warp, "tanh warp strength in [0,1]");
    gen->add_option("--seed", g_seed, "RNG seed");
    gen->add_option("--out", g_out, "output dataset path")->required();

    // fit-moments
    auto* fit = app.add_subcommand("fit-moments", "fit conditional moment estimators");
    std::string f_data, f_estimator = "stochastic", f_prefix = "moments", f_attach;
    int f_model = 3, f_blocks = 2, f_filters = 4, f_epochs = 20;
    double f_ridge = 1e-8, f_split = 0.9;
    bool f_homog = false;
    std::uint64_t f_seed = 0;
    fit->add_option("--data", f_data, "input dataset")->required();
    fit->add_option("--estimator", f_estimator, "stochastic | network");
    fit->add_option("--model", f_model, "basis model id (stochastic)");
    fit->add_option("--ridge", f_ridge, "ridge factor");
    fit->add_flag("--homogeneous", f_homog, "tie coefficients across interior cells");
    fit->add_option("--blocks", f_blocks, "residual blocks (network)");
    fit->add_option("--filters", f_filters, "filters (network)");
    fit->add_option("--epochs", f_epochs, "training epochs (network)");
    fit->add_option("--split", f_split, "train fraction (network)");
    fit->add_option("--seed", f_seed, "RNG seed");
    fit->add_option("--out-prefix", f_prefix, "output prefix for model files");
    fit->add_option("--attach", f_attach, "write dataset with attached moment fields");

    // sweep-basis
    auto* sweep = app.add_subcommand("sweep-basis", "MSE sweep over the basis model ladder");
    std::string s_data, s_models = "0..14", s_out;
    int s_p = 1;
    double s_ridge = 1e-8, s_split = 0.9;
    std::uint64_t s_seed = 0;
    sweep->add_option("--data", s_data, "input dataset")->required();
    sweep->add_option("--models", s_models, "model list, e.g. 0..14 or 0,3,6");
    sweep->add_option("--p", s_p, "moment order (1 or 2)");
    sweep->add_option("--ridge", s_ridge, "ridge factor");
    sweep->add_option("--split", s_split, "train fraction");
    sweep->add_option("--seed", s_seed, "split seed");
    sweep->add_option("--out", s_out, "CSV report path");

    // train
    auto* tr = app.add_subcommand("train", "train the conditional GAN");
    std::string t_data, t_variant = "diversity", t_gen = "generator.cgn", t_disc, t_log;
    int t_steps = 2000, t_m = 4, t_r = 8;
    double t_alpha = 1.0, t_beta = 0.01, t_gamma = 1.0, t_lrg = 2e-4, t_lrd = 2e-4;
    std::uint64_t t_seed = 0;
    tr->add_option("--data", t_data, "dataset with attached moment fields")->required();
    tr->add_option("--variant", t_variant, "diversity | dsgan | gensim | none");
    tr->add_option("--steps", t_steps, "training steps");
    tr->add_option("--m", t_m, "LR minibatch size");
    tr->add_option("--r", t_r, "samples per LR field");
    tr->add_option("--seed", t_seed, "RNG seed");
    tr->add_option("--alpha", t_alpha, "content weight");
    tr->add_option("--beta", t_beta, "adversarial weight");
    tr->add_option("--gamma", t_gamma, "diversity weight");
    tr->add_option("--lr-g", t_lrg, "generator learning rate");
    tr->add_option("--lr-d", t_lrd, "discriminator learning rate");
    tr->add_option("--out-generator", t_gen, "generator checkpoint path");
    tr->add_option("--out-discriminator", t_disc, "discriminator checkpoint path");
    tr->add_option("--log", t_log, "training log CSV path");

    // deconv
    auto* de = app.add_subcommand("deconv", "classical deconvolution or GAN sampling");
    std::string d_data, d_mode = "adm", d_ckpt, d_out;
    int d_delta = 4, d_niter = 5, d_count = 1;
    std::uint64_t d_seed = 0;
    de->add_option("--data", d_data, "input dataset")->required();
    de->add_option("--mode", d_mode, "adm | taylor | gan");
    de->add_option("--delta", d_delta, "filter size for adm/taylor");
    de->add_option("--n-iter", d_niter, "ADM series length");
    de->add_option("--checkpoint", d_ckpt, "generator checkpoint (gan)");
    de->add_option("--count", d_count, "samples per LR field (gan)");
    de->add_option("--seed", d_seed, "RNG seed");
    de->add_option("--out", d_out, "output dataset path")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "metrics and statistics report");
    std::string e_data, e_ckpt, e_moments = "oracle", e_mean, e_var, e_report = "report.json";
    int e_count = 16;
    double e_slope = -5.0 / 3.0, e_warp = 0.0;
    std::uint64_t e_seed = 0;
    ev->add_option("--data", e_data, "validation dataset")->required();
    ev->add_option("--checkpoint", e_ckpt, "generator checkpoint (empty = upsample baseline)");
    ev->add_option("--count", e_count, "ensemble size per LR field");
    ev->add_option("--seed", e_seed, "sampling seed");
    ev->add_option("--moments", e_moments, "reference sigma: oracle | model | attached");
    ev->add_option("--slope", e_slope, "oracle spectrum exponent");
    ev->add_option("--warp", e_warp, "oracle warp (must be 0)");
    ev->add_option("--mean-model", e_mean, "p=1 model file (moments=model)");
    ev->add_option("--var-model", e_var, "p=2 model file (moments=model)");
    ev->add_option("--report", e_report, "JSON report path");

    // oracle
    auto* orc = app.add_subcommand("oracle", "attach analytic Gaussian conditional moments");
    std::string o_data, o_out;
    double o_slope = -5.0 / 3.0, o_warp = 0.0;
    orc->add_option("--data", o_data, "input dataset")->required();
    orc->add_option("--slope", o_slope, "spectrum exponent of the generating process");
    orc->add_option("--warp", o_warp, "warp (must be 0)");
    orc->add_option("--out", o_out, "output dataset path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) return cmd_gen_data(g_n, g_size, g_delta, g_slope, g_warp, g_seed, g_out);
        if (*fit)
            return cmd_fit_moments(f_data, f_estimator, f_model, f_ridge, f_homog, f_blocks,
                                   f_filters, f_epochs, f_seed, f_split, f_prefix, f_attach);
        if (*sweep) return cmd_sweep_basis(s_data, s_models, s_p, s_ridge, s_split, s_seed, s_out);
        if (*tr)
            return cmd_train(t_data, t_variant, t_steps, t_m, t_r, t_seed, t_alpha, t_beta,
                             t_gamma, t_lrg, t_lrd, t_gen, t_disc, t_log);
        if (*de) return cmd_deconv(d_data, d_mode, d_delta, d_niter, d_ckpt, d_count, d_seed, d_out);
        if (*ev)
            return cmd_evaluate(e_data, e_ckpt, e_count, e_seed, e_moments, e_slope, e_warp,
                                e_mean, e_var, e_report);
        if (*orc) return cmd_oracle(o_data, o_slope, o_warp, o_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
