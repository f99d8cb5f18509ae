#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "condsr/rng.hpp"
#include "condsr/tensor.hpp"

namespace condsr::net {

// ---------------------------------------------------------------------------
// conv3x3 with periodic padding; weights [out][in][3][3] then bias [out]
// ---------------------------------------------------------------------------

inline Tensor pad_periodic1(const Tensor& x) {
    const int c = x.channels(), h = x.height(), w = x.width();
    Tensor p(c, h + 2, w + 2);
    for (int ch = 0; ch < c; ++ch)
        for (int r = -1; r <= h; ++r)
            for (int cc = -1; cc <= w; ++cc)
                p(ch, r + 1, cc + 1) = x(ch, (r + h) % h, (cc + w) % w);
    return p;
}

inline Tensor conv3x3_forward(const Tensor& x, const double* weights, const double* bias,
                              int out_ch) {
    const int in_ch = x.channels(), h = x.height(), w = x.width();
    Tensor xp = pad_periodic1(x);
    Tensor y(out_ch, h, w);
    for (int co = 0; co < out_ch; ++co) {
        for (int r = 0; r < h; ++r) {
            double* yrow = &y(co, r, 0);
            for (int c = 0; c < w; ++c) yrow[c] = bias[co];
        }
        for (int ci = 0; ci < in_ch; ++ci) {
            const double* wk = weights + (static_cast<std::size_t>(co) * in_ch + ci) * 9;
            for (int dr = 0; dr < 3; ++dr)
                for (int dc = 0; dc < 3; ++dc) {
                    const double wv = wk[dr * 3 + dc];
                    for (int r = 0; r < h; ++r) {
                        const double* xrow = &xp(ci, r + dr, dc);
                        double* yrow = &y(co, r, 0);
                        for (int c = 0; c < w; ++c) yrow[c] += wv * xrow[c];
                    }
                }
        }
    }
    return y;
}

inline Tensor conv3x3_backward_data(const Tensor& dy, const double* weights, int in_ch) {
    const int out_ch = dy.channels(), h = dy.height(), w = dy.width();
    Tensor dyp = pad_periodic1(dy);
    Tensor dx(in_ch, h, w);
    for (int ci = 0; ci < in_ch; ++ci)
        for (int co = 0; co < out_ch; ++co) {
            const double* wk = weights + (static_cast<std::size_t>(co) * in_ch + ci) * 9;
            for (int dr = 0; dr < 3; ++dr)
                for (int dc = 0; dc < 3; ++dc) {
                    const double wv = wk[(2 - dr) * 3 + (2 - dc)];
                    for (int r = 0; r < h; ++r) {
                        const double* drow = &dyp(co, r + dr, dc);
                        double* xrow = &dx(ci, r, 0);
                        for (int c = 0; c < w; ++c) xrow[c] += wv * drow[c];
                    }
                }
        }
    return dx;
}

inline void conv3x3_backward_weights(const Tensor& dy, const Tensor& x, double* dweights,
                                     double* dbias) {
    const int out_ch = dy.channels(), in_ch = x.channels(), h = x.height(), w = x.width();
    Tensor xp = pad_periodic1(x);
    for (int co = 0; co < out_ch; ++co) {
        double db = 0.0;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) db += dy(co, r, c);
        dbias[co] += db;
        for (int ci = 0; ci < in_ch; ++ci) {
            double* dwk = dweights + (static_cast<std::size_t>(co) * in_ch + ci) * 9;
            for (int dr = 0; dr < 3; ++dr)
                for (int dc = 0; dc < 3; ++dc) {
                    double s = 0.0;
                    for (int r = 0; r < h; ++r) {
                        const double* xrow = &xp(ci, r + dr, dc);
                        const double* drow = dy.data() + (static_cast<std::size_t>(co) * h + r) * w;
                        for (int c = 0; c < w; ++c) s += xrow[c] * drow[c];
                    }
                    dwk[dr * 3 + dc] += s;
                }
        }
    }
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

/// Recorded forward values for one reverse sweep; consumed exactly once.
struct Tape {
    std::vector<std::vector<Tensor>> saved;  // per layer
    bool consumed = false;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    /// `save` receives the tensors needed by backward, in layer-defined order.
    virtual Tensor forward(const Tensor& x, const Tensor* noise,
                           std::vector<Tensor>* save) const = 0;
    /// Returns dx and accumulates parameter gradients into `grad`
    /// (same length as params()).
    virtual Tensor backward(const Tensor& dy, const std::vector<Tensor>& saved,
                            std::vector<double>& grad) const = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;

    /// Serialization: integer layer attributes (shape, hyperparameters).
    virtual std::vector<std::uint32_t> attrs() const = 0;

protected:
    std::vector<double> params_;
};

class Conv3x3 : public Layer {
public:
    Conv3x3(int in_ch, int out_ch) : in_(in_ch), out_(out_ch) {
        params_.assign(static_cast<std::size_t>(out_) * in_ * 9 + out_, 0.0);
    }
    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_) * 9);
        for (double& v : params_) v = rng.uniform(-bound, bound);
        for (int i = 0; i < out_; ++i) params_[params_.size() - out_ + i] = 0.0;
    }
    std::string kind() const override { return "conv3x3"; }
    std::vector<std::uint32_t> attrs() const override {
        return {static_cast<std::uint32_t>(in_), static_cast<std::uint32_t>(out_)};
    }
    Tensor forward(const Tensor& x, const Tensor*, std::vector<Tensor>* save) const override {
        if (x.channels() != in_) throw std::invalid_argument("conv3x3: channel mismatch");
        if (save) save->push_back(x);
        return conv3x3_forward(x, params_.data(), params_.data() + params_.size() - out_, out_);
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>& saved,
                    std::vector<double>& grad) const override {
        conv3x3_backward_weights(dy, saved[0], grad.data(), grad.data() + grad.size() - out_);
        return conv3x3_backward_data(dy, params_.data(), in_);
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv3x3>(*this); }

    int in_, out_;
};

class Dense : public Layer {
public:
    Dense(int in_n, int out_n) : in_(in_n), out_(out_n) {
        params_.assign(static_cast<std::size_t>(out_) * in_ + out_, 0.0);
    }
    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
        for (double& v : params_) v = rng.uniform(-bound, bound);
        for (int i = 0; i < out_; ++i) params_[params_.size() - out_ + i] = 0.0;
    }
    std::string kind() const override { return "dense"; }
    std::vector<std::uint32_t> attrs() const override {
        return {static_cast<std::uint32_t>(in_), static_cast<std::uint32_t>(out_)};
    }
    Tensor forward(const Tensor& x, const Tensor*, std::vector<Tensor>* save) const override {
        if (static_cast<int>(x.size()) != in_) throw std::invalid_argument("dense: size mismatch");
        if (save) save->push_back(x);
        Tensor y(out_, 1, 1);
        const double* b = params_.data() + static_cast<std::size_t>(out_) * in_;
        for (int o = 0; o < out_; ++o) {
            const double* wrow = params_.data() + static_cast<std::size_t>(o) * in_;
            double s = b[o];
            for (int i = 0; i < in_; ++i) s += wrow[i] * x[i];
            y[o] = s;
        }
        return y;
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>& saved,
                    std::vector<double>& grad) const override {
        const Tensor& x = saved[0];
        Tensor dx(x.channels(), x.height(), x.width());
        double* db = grad.data() + static_cast<std::size_t>(out_) * in_;
        for (int o = 0; o < out_; ++o) {
            const double g = dy[o];
            db[o] += g;
            double* dwrow = grad.data() + static_cast<std::size_t>(o) * in_;
            const double* wrow = params_.data() + static_cast<std::size_t>(o) * in_;
            for (int i = 0; i < in_; ++i) {
                dwrow[i] += g * x[i];
                dx[i] += g * wrow[i];
            }
        }
        return dx;
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    int in_, out_;
};

class LeakyRelu : public Layer {
public:
    explicit LeakyRelu(double alpha = 0.2) : alpha_(alpha) {}
    std::string kind() const override { return "leaky_relu"; }
    std::vector<std::uint32_t> attrs() const override {
        // alpha stored in thousandths; 0.2 and 0.0 are the only values used
        return {static_cast<std::uint32_t>(std::lround(alpha_ * 1000.0))};
    }
    Tensor forward(const Tensor& x, const Tensor*, std::vector<Tensor>* save) const override {
        if (save) save->push_back(x);
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] < 0.0) y[i] *= alpha_;
        return y;
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>& saved,
                    std::vector<double>&) const override {
        const Tensor& x = saved[0];
        Tensor dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (x[i] < 0.0) dx[i] *= alpha_;
        return dx;
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<LeakyRelu>(*this); }

    double alpha_;
};

class Relu : public LeakyRelu {
public:
    Relu() : LeakyRelu(0.0) {}
    std::string kind() const override { return "relu"; }
};

class Sigmoid : public Layer {
public:
    std::string kind() const override { return "sigmoid"; }
    std::vector<std::uint32_t> attrs() const override { return {}; }
    Tensor forward(const Tensor& x, const Tensor*, std::vector<Tensor>* save) const override {
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
        if (save) save->push_back(y);
        return y;
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>& saved,
                    std::vector<double>&) const override {
        const Tensor& y = saved[0];
        Tensor dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (1.0 - y[i]);
        return dx;
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(*this); }
};

/// [C, h, w] -> [C/r^2, h*r, w*r]; input channel c*r^2 + r*dy + dx feeds
/// output pixel offset (dy, dx) of output channel c.
class DepthToSpace : public Layer {
public:
    explicit DepthToSpace(int r) : r_(r) {}
    std::string kind() const override { return "depth_to_space"; }
    std::vector<std::uint32_t> attrs() const override { return {static_cast<std::uint32_t>(r_)}; }
    Tensor forward(const Tensor& x, const Tensor*, std::vector<Tensor>*) const override {
        const int r2 = r_ * r_;
        if (x.channels() % r2 != 0) throw std::invalid_argument("depth_to_space: channels not divisible");
        Tensor y(x.channels() / r2, x.height() * r_, x.width() * r_);
        for (int c = 0; c < y.channels(); ++c)
            for (int dy0 = 0; dy0 < r_; ++dy0)
                for (int dx0 = 0; dx0 < r_; ++dx0)
                    for (int rr = 0; rr < x.height(); ++rr)
                        for (int cc = 0; cc < x.width(); ++cc)
                            y(c, rr * r_ + dy0, cc * r_ + dx0) =
                                x(c * r2 + dy0 * r_ + dx0, rr, cc);
        return y;
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>&,
                    std::vector<double>&) const override {
        const int r2 = r_ * r_;
        Tensor dx(dy.channels() * r2, dy.height() / r_, dy.width() / r_);
        for (int c = 0; c < dy.channels(); ++c)
            for (int dy0 = 0; dy0 < r_; ++dy0)
                for (int dx0 = 0; dx0 < r_; ++dx0)
                    for (int rr = 0; rr < dx.height(); ++rr)
                        for (int cc = 0; cc < dx.width(); ++cc)
                            dx(c * r2 + dy0 * r_ + dx0, rr, cc) =
                                dy(c, rr * r_ + dy0, cc * r_ + dx0);
        return dx;
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<DepthToSpace>(*this); }

    int r_;
};

/// Exact inverse of DepthToSpace with the same r.
class SpaceToDepth : public Layer {
public:
    explicit SpaceToDepth(int r) : r_(r) {}
    std::string kind() const override { return "space_to_depth"; }
    std::vector<std::uint32_t> attrs() const override { return {static_cast<std::uint32_t>(r_)}; }
    Tensor forward(const Tensor& x, const Tensor*, std::vector<Tensor>*) const override {
        if (x.height() % r_ != 0 || x.width() % r_ != 0)
            throw std::invalid_argument("space_to_depth: dims not divisible");
        const int r2 = r_ * r_;
        Tensor y(x.channels() * r2, x.height() / r_, x.width() / r_);
        for (int c = 0; c < x.channels(); ++c)
            for (int dy0 = 0; dy0 < r_; ++dy0)
                for (int dx0 = 0; dx0 < r_; ++dx0)
                    for (int rr = 0; rr < y.height(); ++rr)
                        for (int cc = 0; cc < y.width(); ++cc)
                            y(c * r2 + dy0 * r_ + dx0, rr, cc) =
                                x(c, rr * r_ + dy0, cc * r_ + dx0);
        return y;
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>&,
                    std::vector<double>&) const override {
        const int r2 = r_ * r_;
        Tensor dx(dy.channels() / r2, dy.height() * r_, dy.width() * r_);
        for (int c = 0; c < dx.channels(); ++c)
            for (int dy0 = 0; dy0 < r_; ++dy0)
                for (int dx0 = 0; dx0 < r_; ++dx0)
                    for (int rr = 0; rr < dy.height(); ++rr)
                        for (int cc = 0; cc < dy.width(); ++cc)
                            dx(c, rr * r_ + dy0, cc * r_ + dx0) =
                                dy(c * r2 + dy0 * r_ + dx0, rr, cc);
        return dx;
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<SpaceToDepth>(*this); }

    int r_;
};

/// Concatenates k externally supplied noise channels onto the input.
class AppendNoise : public Layer {
public:
    explicit AppendNoise(int k) : k_(k) {}
    std::string kind() const override { return "append_noise"; }
    std::vector<std::uint32_t> attrs() const override { return {static_cast<std::uint32_t>(k_)}; }
    Tensor forward(const Tensor& x, const Tensor* noise, std::vector<Tensor>*) const override {
        if (noise == nullptr || noise->channels() != k_ || noise->height() != x.height() ||
            noise->width() != x.width())
            throw std::invalid_argument("append_noise: noise tensor missing or mis-shaped");
        Tensor y(x.channels() + k_, x.height(), x.width());
        std::memcpy(y.data(), x.data(), x.size() * sizeof(double));
        std::memcpy(y.data() + x.size(), noise->data(), noise->size() * sizeof(double));
        return y;
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>&,
                    std::vector<double>&) const override {
        Tensor dx(dy.channels() - k_, dy.height(), dy.width());
        std::memcpy(dx.data(), dy.data(), dx.size() * sizeof(double));
        return dx;
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<AppendNoise>(*this); }

    int k_;
};

/// conv3x3 -> relu -> conv3x3 with an identity skip.
class ResidualBlock : public Layer {
public:
    explicit ResidualBlock(int filters) : f_(filters) {
        wsize_ = static_cast<std::size_t>(f_) * f_ * 9;
        params_.assign(2 * (wsize_ + f_), 0.0);
    }
    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(f_) * 9);
        for (double& v : params_) v = rng.uniform(-bound, bound);
        // zero biases
        for (int i = 0; i < f_; ++i) {
            params_[wsize_ + i] = 0.0;
            params_[2 * wsize_ + f_ + i] = 0.0;
        }
    }
    std::string kind() const override { return "residual_block"; }
    std::vector<std::uint32_t> attrs() const override { return {static_cast<std::uint32_t>(f_)}; }
    Tensor forward(const Tensor& x, const Tensor*, std::vector<Tensor>* save) const override {
        if (x.channels() != f_) throw std::invalid_argument("residual_block: channel mismatch");
        const double* w1 = params_.data();
        const double* b1 = w1 + wsize_;
        const double* w2 = b1 + f_;
        const double* b2 = w2 + wsize_;
        Tensor h1 = conv3x3_forward(x, w1, b1, f_);
        Tensor h2 = h1;
        for (std::size_t i = 0; i < h2.size(); ++i)
            if (h2[i] < 0.0) h2[i] = 0.0;
        Tensor y = conv3x3_forward(h2, w2, b2, f_);
        y += x;
        if (save) {
            save->push_back(x);
            save->push_back(std::move(h1));
            save->push_back(std::move(h2));
        }
        return y;
    }
    Tensor backward(const Tensor& dy, const std::vector<Tensor>& saved,
                    std::vector<double>& grad) const override {
        const Tensor& x = saved[0];
        const Tensor& h1 = saved[1];
        const Tensor& h2 = saved[2];
        const double* w1 = params_.data();
        const double* w2 = params_.data() + wsize_ + f_;
        double* dw1 = grad.data();
        double* db1 = dw1 + wsize_;
        double* dw2 = db1 + f_;
        double* db2 = dw2 + wsize_;
        conv3x3_backward_weights(dy, h2, dw2, db2);
        Tensor dh2 = conv3x3_backward_data(dy, w2, f_);
        for (std::size_t i = 0; i < dh2.size(); ++i)
            if (h1[i] < 0.0) dh2[i] = 0.0;
        conv3x3_backward_weights(dh2, x, dw1, db1);
        Tensor dx = conv3x3_backward_data(dh2, w1, f_);
        dx += dy;
        return dx;
    }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ResidualBlock>(*this); }

    int f_;
    std::size_t wsize_;
};

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

using Gradients = std::vector<std::vector<double>>;

class Network {
public:
    Network() = default;
    Network(const Network& o) {
        for (const auto& l : o.layers_) layers_.push_back(l->clone());
    }
    Network& operator=(const Network& o) {
        if (this != &o) {
            layers_.clear();
            for (const auto& l : o.layers_) layers_.push_back(l->clone());
        }
        return *this;
    }
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    template <typename L, typename... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }
    const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

    void init_weights(Rng& rng) {
        for (auto& l : layers_) {
            if (auto* c = dynamic_cast<Conv3x3*>(l.get())) c->init(rng);
            else if (auto* d = dynamic_cast<Dense*>(l.get())) d->init(rng);
            else if (auto* r = dynamic_cast<ResidualBlock*>(l.get())) r->init(rng);
        }
    }

    /// Forward pass. With `tape` non-null, records values for backward.
    Tensor forward(const Tensor& input, const Tensor* noise = nullptr,
                   Tape* tape = nullptr) const {
        Tensor x = input;
        if (tape) {
            tape->saved.assign(layers_.size(), {});
            tape->consumed = false;
        }
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            x = layers_[i]->forward(x, noise, tape ? &tape->saved[i] : nullptr);
            if (!x.all_finite())
                throw std::runtime_error("net_forward: non-finite activation after " +
                                         layers_[i]->kind());
        }
        return x;
    }

    Gradients zero_grads() const {
        Gradients g(layers_.size());
        for (std::size_t i = 0; i < layers_.size(); ++i)
            g[i].assign(layers_[i]->params().size(), 0.0);
        return g;
    }

    /// Reverse sweep; consumes the tape, accumulates into `grads`,
    /// returns the gradient with respect to the network input.
    Tensor backward(Tape& tape, const Tensor& upstream, Gradients& grads) const {
        if (tape.consumed) throw std::runtime_error("net_backward: tape already consumed");
        tape.consumed = true;
        Tensor dy = upstream;
        for (std::size_t i = layers_.size(); i-- > 0;)
            dy = layers_[i]->backward(dy, tape.saved[i], grads[i]);
        return dy;
    }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l->params().size();
        return n;
    }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Gradients m, v;
    long long t = 0;

    static AdamState for_network(const Network& n) {
        AdamState s;
        s.m = n.zero_grads();
        s.v = n.zero_grads();
        return s;
    }
};

/// Standard bias-corrected Adam update, applied in place.
inline void adam_step(Network& nw, const Gradients& grads, AdamState& state,
                      const AdamHyper& hp) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
    for (std::size_t li = 0; li < nw.layers().size(); ++li) {
        auto& p = nw.layers()[li]->params();
        const auto& g = grads[li];
        auto& m = state.m[li];
        auto& v = state.v[li];
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(g[i])) throw std::runtime_error("adam_step: non-finite gradient");
            m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
            v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check on the scalar head L = 0.5 ||out||^2
// ---------------------------------------------------------------------------

inline double grad_check(Network& nw, const Tensor& input, const Tensor* noise = nullptr,
                         double eps = 1e-3) {
    Tape tape;
    Tensor out = nw.forward(input, noise, &tape);
    Gradients grads = nw.zero_grads();
    nw.backward(tape, out, grads);  // dL/dout = out for L = 0.5||out||^2

    auto loss = [&]() {
        Tensor y = nw.forward(input, noise);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * y[i];
        return 0.5 * s;
    };

    double max_rel = 0.0;
    for (std::size_t li = 0; li < nw.layers().size(); ++li) {
        auto& p = nw.layers()[li]->params();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double orig = p[i];
            p[i] = orig + eps;
            const double lp = loss();
            p[i] = orig - eps;
            const double lm = loss();
            p[i] = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            const double an = grads[li][i];
            const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

// ---------------------------------------------------------------------------
// Checkpoint container ("CGN1"): layer descriptors + float64 weights.
// ---------------------------------------------------------------------------

namespace ckpt {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated payload");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint32_t kind_id(const std::string& k) {
    if (k == "conv3x3") return 1;
    if (k == "dense") return 2;
    if (k == "leaky_relu") return 3;
    if (k == "relu") return 4;
    if (k == "sigmoid") return 5;
    if (k == "depth_to_space") return 6;
    if (k == "space_to_depth") return 7;
    if (k == "append_noise") return 8;
    if (k == "residual_block") return 9;
    throw std::runtime_error("checkpoint: unknown layer kind " + k);
}

}  // namespace ckpt

inline void write_network(const Network& nw, std::ostream& os) {
    os.write("CGN1", 4);
    ckpt::put_u32(os, 1);
    ckpt::put_u32(os, static_cast<std::uint32_t>(nw.layers().size()));
    for (const auto& l : nw.layers()) {
        ckpt::put_u32(os, ckpt::kind_id(l->kind()));
        auto at = l->attrs();
        ckpt::put_u32(os, static_cast<std::uint32_t>(at.size()));
        for (auto a : at) ckpt::put_u32(os, a);
        const auto& p = l->params();
        ckpt::put_u32(os, static_cast<std::uint32_t>(p.size()));
        os.write(reinterpret_cast<const char*>(p.data()),
                 static_cast<std::streamsize>(p.size() * sizeof(double)));
    }
}

inline Network read_network(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CGN1", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    if (ckpt::get_u32(is) != 1) throw std::runtime_error("checkpoint: unsupported version");
    const std::uint32_t nlayers = ckpt::get_u32(is);
    Network nw;
    for (std::uint32_t i = 0; i < nlayers; ++i) {
        const std::uint32_t kind = ckpt::get_u32(is);
        const std::uint32_t nattr = ckpt::get_u32(is);
        std::vector<std::uint32_t> at(nattr);
        for (auto& a : at) a = ckpt::get_u32(is);
        switch (kind) {
            case 1: nw.add<Conv3x3>(static_cast<int>(at.at(0)), static_cast<int>(at.at(1))); break;
            case 2: nw.add<Dense>(static_cast<int>(at.at(0)), static_cast<int>(at.at(1))); break;
            case 3: nw.add<LeakyRelu>(static_cast<double>(at.at(0)) / 1000.0); break;
            case 4: nw.add<Relu>(); break;
            case 5: nw.add<Sigmoid>(); break;
            case 6: nw.add<DepthToSpace>(static_cast<int>(at.at(0))); break;
            case 7: nw.add<SpaceToDepth>(static_cast<int>(at.at(0))); break;
            case 8: nw.add<AppendNoise>(static_cast<int>(at.at(0))); break;
            case 9: nw.add<ResidualBlock>(static_cast<int>(at.at(0))); break;
            default: throw std::runtime_error("checkpoint: unknown layer id");
        }
        const std::uint32_t np = ckpt::get_u32(is);
        auto& p = nw.layers().back()->params();
        if (np != p.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
        is.read(reinterpret_cast<char*>(p.data()),
                static_cast<std::streamsize>(np * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated payload");
    }
    return nw;
}

inline void write_network_file(const Network& nw, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
    write_network(nw, os);
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

inline Network read_network_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    return read_network(is);
}

}  // namespace condsr::net
