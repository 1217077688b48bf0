#include "gooddrag/conv_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gooddrag/rng.hpp"

namespace gooddrag {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out[oc] = b[oc] + sum_ic conv(in[ic]); zero padding of one pixel.
void conv_forward(const Conv3x3& L, const double* in, int h, int w, double* out) {
    size_t plane = static_cast<size_t>(h) * w;
    for (int oc = 0; oc < L.out_c; ++oc) {
        double* op = out + oc * plane;
        std::fill(op, op + plane, L.b[oc]);
        for (int ic = 0; ic < L.in_c; ++ic) {
            const double* ip = in + ic * plane;
            const double* wk = &L.w[(static_cast<size_t>(oc) * L.in_c + ic) * 9];
            for (int ky = 0; ky < 3; ++ky) {
                int y0 = std::max(0, 1 - ky), y1 = std::min(h - 1, h - ky);
                for (int kx = 0; kx < 3; ++kx) {
                    double wv = wk[ky * 3 + kx];
                    int x0 = std::max(0, 1 - kx), x1 = std::min(w - 1, w - kx);
                    for (int y = y0; y <= y1; ++y) {
                        double* orow = op + static_cast<size_t>(y) * w;
                        const double* irow = ip + static_cast<size_t>(y + ky - 1) * w + (kx - 1);
                        for (int x = x0; x <= x1; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
}

// din += transpose of the forward map applied to dout; din must be zeroed
// by the caller.
void conv_input_grad(const Conv3x3& L, const double* dout, int h, int w, double* din) {
    size_t plane = static_cast<size_t>(h) * w;
    for (int oc = 0; oc < L.out_c; ++oc) {
        const double* gp = dout + oc * plane;
        for (int ic = 0; ic < L.in_c; ++ic) {
            double* dp = din + ic * plane;
            const double* wk = &L.w[(static_cast<size_t>(oc) * L.in_c + ic) * 9];
            for (int ky = 0; ky < 3; ++ky) {
                int y0 = std::max(0, 1 - ky), y1 = std::min(h - 1, h - ky);
                for (int kx = 0; kx < 3; ++kx) {
                    double wv = wk[ky * 3 + kx];
                    int x0 = std::max(0, 1 - kx), x1 = std::min(w - 1, w - kx);
                    for (int y = y0; y <= y1; ++y) {
                        double* drow = dp + static_cast<size_t>(y + ky - 1) * w + (kx - 1);
                        const double* grow = gp + static_cast<size_t>(y) * w;
                        for (int x = x0; x <= x1; ++x) drow[x] += wv * grow[x];
                    }
                }
            }
        }
    }
}

// g.w += dout correlated with in, g.b += sums of dout.
void conv_param_grad(const double* dout, const double* in, int h, int w, Conv3x3& g) {
    size_t plane = static_cast<size_t>(h) * w;
    for (int oc = 0; oc < g.out_c; ++oc) {
        const double* gp = dout + oc * plane;
        double bsum = 0.0;
        for (size_t i = 0; i < plane; ++i) bsum += gp[i];
        g.b[oc] += bsum;
        for (int ic = 0; ic < g.in_c; ++ic) {
            const double* ip = in + ic * plane;
            double* wk = &g.w[(static_cast<size_t>(oc) * g.in_c + ic) * 9];
            for (int ky = 0; ky < 3; ++ky) {
                int y0 = std::max(0, 1 - ky), y1 = std::min(h - 1, h - ky);
                for (int kx = 0; kx < 3; ++kx) {
                    int x0 = std::max(0, 1 - kx), x1 = std::min(w - 1, w - kx);
                    double acc = 0.0;
                    for (int y = y0; y <= y1; ++y) {
                        const double* grow = gp + static_cast<size_t>(y) * w;
                        const double* irow = ip + static_cast<size_t>(y + ky - 1) * w + (kx - 1);
                        for (int x = x0; x <= x1; ++x) acc += grow[x] * irow[x];
                    }
                    wk[ky * 3 + kx] += acc;
                }
            }
        }
    }
}

void silu_plane(const double* pre, double* act, double* dact, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        double s = sigmoid(pre[i]);
        act[i] = pre[i] * s;
        dact[i] = s * (1.0 + pre[i] * (1.0 - s));
    }
}

struct ConvTrace {
    Tensor pre1, h1, d1;  // d* holds the activation derivative at pre*
    Tensor pre2, h2, d2;
    Tensor pre3, h3, d3;
    Tensor eps;
    std::array<double, kTimeEmbedDim> emb;
};

ConvTrace forward_trace(const ConvParams& P, const Tensor& z, int t) {
    int h = z.height(), w = z.width();
    size_t plane = static_cast<size_t>(h) * w;
    ConvTrace tr;
    tr.emb = time_embedding(t);

    tr.pre1 = Tensor(ConvDenoiser::kHidden1, h, w);
    conv_forward(P.l1, z.data(), h, w, tr.pre1.data());
    for (int c = 0; c < ConvDenoiser::kHidden1; ++c) {
        double bias = P.time_b[c];
        for (int i = 0; i < kTimeEmbedDim; ++i) bias += P.time_w[c * kTimeEmbedDim + i] * tr.emb[i];
        double* p = tr.pre1.channel(c);
        for (size_t i = 0; i < plane; ++i) p[i] += bias;
    }
    tr.h1 = Tensor(ConvDenoiser::kHidden1, h, w);
    tr.d1 = Tensor(ConvDenoiser::kHidden1, h, w);
    silu_plane(tr.pre1.data(), tr.h1.data(), tr.d1.data(), tr.pre1.size());

    tr.pre2 = Tensor(ConvDenoiser::kHidden2, h, w);
    conv_forward(P.l2, tr.h1.data(), h, w, tr.pre2.data());
    tr.h2 = Tensor(ConvDenoiser::kHidden2, h, w);
    tr.d2 = Tensor(ConvDenoiser::kHidden2, h, w);
    silu_plane(tr.pre2.data(), tr.h2.data(), tr.d2.data(), tr.pre2.size());

    tr.pre3 = Tensor(ConvDenoiser::kFeatureChannels, h, w);
    conv_forward(P.l3, tr.h2.data(), h, w, tr.pre3.data());
    tr.h3 = Tensor(ConvDenoiser::kFeatureChannels, h, w);
    tr.d3 = Tensor(ConvDenoiser::kFeatureChannels, h, w);
    silu_plane(tr.pre3.data(), tr.h3.data(), tr.d3.data(), tr.pre3.size());

    tr.eps = Tensor(1, h, w);
    conv_forward(P.l4, tr.h3.data(), h, w, tr.eps.data());
    return tr;
}

class ConvEval final : public DenoiserEval {
public:
    ConvEval(const ConvParams& params, ConvTrace trace)
        : params_(params), tr_(std::move(trace)) {}

    const Tensor& eps() const override { return tr_.eps; }
    const Tensor& features() const override { return tr_.h3; }

    Tensor input_grad(const Tensor* cot_eps, const Tensor* cot_features) const override {
        int h = tr_.eps.height(), w = tr_.eps.width();
        Tensor dh3(ConvDenoiser::kFeatureChannels, h, w);
        if (cot_features) {
            if (!cot_features->same_shape(tr_.h3))
                throw std::invalid_argument("input_grad: feature cotangent shape mismatch");
            dh3 += *cot_features;
        }
        if (cot_eps) {
            if (!cot_eps->same_shape(tr_.eps))
                throw std::invalid_argument("input_grad: eps cotangent shape mismatch");
            conv_input_grad(params_.l4, cot_eps->data(), h, w, dh3.data());
        }
        for (size_t i = 0; i < dh3.size(); ++i) dh3.data()[i] *= tr_.d3.data()[i];

        Tensor dh2(ConvDenoiser::kHidden2, h, w);
        conv_input_grad(params_.l3, dh3.data(), h, w, dh2.data());
        for (size_t i = 0; i < dh2.size(); ++i) dh2.data()[i] *= tr_.d2.data()[i];

        Tensor dh1(ConvDenoiser::kHidden1, h, w);
        conv_input_grad(params_.l2, dh2.data(), h, w, dh1.data());
        for (size_t i = 0; i < dh1.size(); ++i) dh1.data()[i] *= tr_.d1.data()[i];

        Tensor dz(1, h, w);
        conv_input_grad(params_.l1, dh1.data(), h, w, dz.data());
        return dz;
    }

private:
    const ConvParams& params_;
    ConvTrace tr_;
};

}  // namespace

std::array<double, kTimeEmbedDim> time_embedding(int t) {
    std::array<double, kTimeEmbedDim> emb;
    for (int i = 0; i < kTimeEmbedDim / 2; ++i) {
        double omega = std::pow(10000.0, -static_cast<double>(i) / (kTimeEmbedDim / 2));
        emb[2 * i] = std::sin(t * omega);
        emb[2 * i + 1] = std::cos(t * omega);
    }
    return emb;
}

void ConvParams::zero() {
    auto z = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
    z(l1.w); z(l1.b); z(l2.w); z(l2.b); z(l3.w); z(l3.b); z(l4.w); z(l4.b);
    z(time_w); z(time_b);
}

void ConvParams::axpy(double s, const ConvParams& o) {
    auto add = [s](std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size()) throw std::invalid_argument("ConvParams: shape mismatch");
        for (size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
    };
    add(l1.w, o.l1.w); add(l1.b, o.l1.b);
    add(l2.w, o.l2.w); add(l2.b, o.l2.b);
    add(l3.w, o.l3.w); add(l3.b, o.l3.b);
    add(l4.w, o.l4.w); add(l4.b, o.l4.b);
    add(time_w, o.time_w); add(time_b, o.time_b);
}

size_t ConvParams::count() const {
    return l1.w.size() + l1.b.size() + l2.w.size() + l2.b.size() + l3.w.size() + l3.b.size() +
           l4.w.size() + l4.b.size() + time_w.size() + time_b.size();
}

double ConvParams::max_abs() const {
    double m = 0.0;
    auto scan = [&m](const std::vector<double>& v) {
        for (double x : v) m = std::max(m, std::fabs(x));
    };
    scan(l1.w); scan(l1.b); scan(l2.w); scan(l2.b); scan(l3.w); scan(l3.b);
    scan(l4.w); scan(l4.b); scan(time_w); scan(time_b);
    return m;
}

ConvDenoiser::ConvDenoiser(NoiseSchedule sched) : sched_(std::move(sched)) {
    params_.l1.resize(1, kHidden1);
    params_.l2.resize(kHidden1, kHidden2);
    params_.l3.resize(kHidden2, kFeatureChannels);
    params_.l4.resize(kFeatureChannels, 1);
    params_.time_w.assign(static_cast<size_t>(kHidden1) * kTimeEmbedDim, 0.0);
    params_.time_b.assign(kHidden1, 0.0);
}

ConvDenoiser::ConvDenoiser(NoiseSchedule sched, ConvParams params) : ConvDenoiser(std::move(sched)) {
    if (params.l1.w.size() != params_.l1.w.size() || params.l2.w.size() != params_.l2.w.size() ||
        params.l3.w.size() != params_.l3.w.size() || params.l4.w.size() != params_.l4.w.size() ||
        params.time_w.size() != params_.time_w.size() ||
        params.time_b.size() != params_.time_b.size())
        throw std::invalid_argument("ConvDenoiser: parameter shapes do not match architecture");
    params_ = std::move(params);
}

ConvDenoiser ConvDenoiser::random_init(NoiseSchedule sched, uint64_t seed) {
    ConvDenoiser d(std::move(sched));
    auto fill = [](std::vector<double>& w, double stddev, uint64_t s) {
        Rng rng(s);
        for (double& v : w) v = rng.normal(0.0, stddev);
    };
    ConvParams& p = d.params_;
    fill(p.l1.w, std::sqrt(2.0 / (1 * 9)), Rng::derive(seed, "layer1"));
    fill(p.l2.w, std::sqrt(2.0 / (kHidden1 * 9)), Rng::derive(seed, "layer2"));
    fill(p.l3.w, std::sqrt(2.0 / (kHidden2 * 9)), Rng::derive(seed, "layer3"));
    // output layer starts at zero so the initial prediction is unbiased
    fill(p.time_w, 1.0 / std::sqrt(kTimeEmbedDim), Rng::derive(seed, "time"));
    return d;
}

std::unique_ptr<DenoiserEval> ConvDenoiser::evaluate(const Tensor& z, int t) const {
    if (z.channels() != 1)
        throw std::invalid_argument("ConvDenoiser: expected a single-channel latent");
    if (t < 0 || t > sched_.t_max())
        throw std::out_of_range("ConvDenoiser: timestep out of range");
    return std::make_unique<ConvEval>(params_, forward_trace(params_, z, t));
}

double ConvDenoiser::accumulate_loss_grad(const Tensor& z, int t, const Tensor& target_eps,
                                          ConvParams& grads, double grad_scale) const {
    if (!target_eps.same_shape(z))
        throw std::invalid_argument("accumulate_loss_grad: target shape mismatch");
    ConvTrace tr = forward_trace(params_, z, t);
    int h = z.height(), w = z.width();
    size_t n = z.size();

    double loss = 0.0;
    Tensor cot(1, h, w);
    double cscale = 2.0 * grad_scale / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        double diff = tr.eps.data()[i] - target_eps.data()[i];
        loss += diff * diff;
        cot.data()[i] = cscale * diff;
    }
    loss /= static_cast<double>(n);

    conv_param_grad(cot.data(), tr.h3.data(), h, w, grads.l4);
    Tensor dh3(kFeatureChannels, h, w);
    conv_input_grad(params_.l4, cot.data(), h, w, dh3.data());
    for (size_t i = 0; i < dh3.size(); ++i) dh3.data()[i] *= tr.d3.data()[i];

    conv_param_grad(dh3.data(), tr.h2.data(), h, w, grads.l3);
    Tensor dh2(kHidden2, h, w);
    conv_input_grad(params_.l3, dh3.data(), h, w, dh2.data());
    for (size_t i = 0; i < dh2.size(); ++i) dh2.data()[i] *= tr.d2.data()[i];

    conv_param_grad(dh2.data(), tr.h1.data(), h, w, grads.l2);
    Tensor dh1(kHidden1, h, w);
    conv_input_grad(params_.l2, dh2.data(), h, w, dh1.data());
    for (size_t i = 0; i < dh1.size(); ++i) dh1.data()[i] *= tr.d1.data()[i];

    conv_param_grad(dh1.data(), z.data(), h, w, grads.l1);

    size_t plane = static_cast<size_t>(h) * w;
    for (int c = 0; c < kHidden1; ++c) {
        const double* p = dh1.channel(c);
        double s = 0.0;
        for (size_t i = 0; i < plane; ++i) s += p[i];
        grads.time_b[c] += s;
        for (int i = 0; i < kTimeEmbedDim; ++i) grads.time_w[c * kTimeEmbedDim + i] += s * tr.emb[i];
    }
    return loss;
}

}  // namespace gooddrag
