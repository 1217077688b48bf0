#include "gooddrag/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gooddrag {

void require_tag_in_schedule(const Latent& z, const NoiseSchedule& sched) {
    if (z.t < 0 || z.t > sched.t_max())
        throw std::out_of_range("latent timestep " + std::to_string(z.t) +
                                " outside schedule range 0.." + std::to_string(sched.t_max()));
}

Tensor predict_eps(const Denoiser& d, const Latent& z) {
    if (z.t < 1) throw std::out_of_range("predict_eps: latent must be at t >= 1");
    return d.evaluate(z.data, z.t)->eps();
}

Tensor extract_features(const Denoiser& d, const Latent& z) {
    if (z.t < 0) throw std::out_of_range("extract_features: negative timestep");
    return d.evaluate(z.data, z.t)->features();
}

Tensor denoiser_vjp(const Denoiser& d, const Latent& z, const Tensor* cot_eps,
                    const Tensor* cot_features) {
    if (z.t < 0) throw std::out_of_range("denoiser_vjp: negative timestep");
    return d.evaluate(z.data, z.t)->input_grad(cot_eps, cot_features);
}

namespace {

class GaussianEval final : public DenoiserEval {
public:
    GaussianEval(Tensor eps, Tensor features, double deps_dz, double dmean_dz)
        : eps_(std::move(eps)), features_(std::move(features)), deps_dz_(deps_dz),
          dmean_dz_(dmean_dz) {}

    const Tensor& eps() const override { return eps_; }
    const Tensor& features() const override { return features_; }

    Tensor input_grad(const Tensor* cot_eps, const Tensor* cot_features) const override {
        int h = eps_.height(), w = eps_.width();
        Tensor grad(eps_.channels(), h, w);
        if (cot_eps) {
            if (!cot_eps->same_shape(eps_))
                throw std::invalid_argument("input_grad: eps cotangent shape mismatch");
            grad.axpy(deps_dz_, *cot_eps);
        }
        if (cot_features) {
            if (!cot_features->same_shape(features_))
                throw std::invalid_argument("input_grad: feature cotangent shape mismatch");
            // feature channel 0 is the input itself, channel 1 the posterior mean
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    grad.at(0, y, x) +=
                        cot_features->at(0, y, x) + dmean_dz_ * cot_features->at(1, y, x);
        }
        return grad;
    }

private:
    Tensor eps_;
    Tensor features_;
    double deps_dz_;
    double dmean_dz_;
};

}  // namespace

GaussianAnalyticDenoiser::GaussianAnalyticDenoiser(Tensor mean, double sigma0,
                                                   NoiseSchedule schedule)
    : mean_(std::move(mean)), sigma0_(sigma0), sched_(std::move(schedule)) {
    if (!(sigma0_ > 0.0))
        throw std::invalid_argument("GaussianAnalyticDenoiser: sigma0 must be positive");
    if (mean_.channels() != 1)
        throw std::invalid_argument("GaussianAnalyticDenoiser: expected a single channel");
}

Tensor GaussianAnalyticDenoiser::posterior_mean(const Tensor& z, int t) const {
    if (!z.same_shape(mean_))
        throw std::invalid_argument("GaussianAnalyticDenoiser: latent shape mismatch");
    if (t < 0 || t > sched_.t_max())
        throw std::out_of_range("GaussianAnalyticDenoiser: timestep out of range");
    if (t == 0) return z;
    double a = sched_.alpha(t);
    double var = a * sigma0_ * sigma0_ + (1.0 - a);
    double sz = std::sqrt(a) * sigma0_ * sigma0_ / var;
    double sm = (1.0 - a) / var;
    Tensor m(z.channels(), z.height(), z.width());
    for (size_t i = 0; i < z.size(); ++i)
        m.data()[i] = sz * z.data()[i] + sm * mean_.data()[i];
    return m;
}

std::unique_ptr<DenoiserEval> GaussianAnalyticDenoiser::evaluate(const Tensor& z, int t) const {
    Tensor m = posterior_mean(z, t);  // validates shape and t
    int h = z.height(), w = z.width();
    Tensor eps(1, h, w);
    double deps_dz = 0.0, dmean_dz = 1.0;
    if (t > 0) {
        double a = sched_.alpha(t);
        double sa = std::sqrt(a), sb = std::sqrt(1.0 - a);
        double var = a * sigma0_ * sigma0_ + (1.0 - a);
        dmean_dz = sa * sigma0_ * sigma0_ / var;
        deps_dz = (1.0 - sa * dmean_dz) / sb;
        for (size_t i = 0; i < z.size(); ++i)
            eps.data()[i] = (z.data()[i] - sa * m.data()[i]) / sb;
    }
    Tensor features(2, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            features.at(0, y, x) = z.at(0, y, x);
            features.at(1, y, x) = m.at(0, y, x);
        }
    return std::make_unique<GaussianEval>(std::move(eps), std::move(features), deps_dz, dmean_dz);
}

}  // namespace gooddrag
