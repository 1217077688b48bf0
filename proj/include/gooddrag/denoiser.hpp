#pragma once

#include <memory>

#include "gooddrag/latent.hpp"
#include "gooddrag/schedule.hpp"
#include "gooddrag/tensor.hpp"

namespace gooddrag {

// One forward pass of a denoiser, retaining whatever reverse mode needs.
// eps() is the predicted noise, features() the intermediate feature map
// (same spatial size as the input, feature_channels() deep).
class DenoiserEval {
public:
    virtual ~DenoiserEval() = default;
    virtual const Tensor& eps() const = 0;
    virtual const Tensor& features() const = 0;
    // Gradient of <cot_eps, eps()> + <cot_features, features()> with respect
    // to the input latent. Either cotangent may be null (treated as zero).
    virtual Tensor input_grad(const Tensor* cot_eps, const Tensor* cot_features) const = 0;
};

class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual int feature_channels() const = 0;
    // t may be 0; implementations define the clean-data limit explicitly.
    virtual std::unique_ptr<DenoiserEval> evaluate(const Tensor& z, int t) const = 0;
};

// Convenience wrappers over evaluate(). predict_eps requires t >= 1 because
// the noise estimate at t == 0 is degenerate.
Tensor predict_eps(const Denoiser& d, const Latent& z);
Tensor extract_features(const Denoiser& d, const Latent& z);
Tensor denoiser_vjp(const Denoiser& d, const Latent& z, const Tensor* cot_eps,
                    const Tensor* cot_features);

// Closed-form denoiser for a Gaussian prior z0 ~ N(mean, sigma0^2 I).
// posterior_mean is exact, eps follows from it, and the feature map stacks
// the input with the posterior mean, so features carry the denoised signal.
class GaussianAnalyticDenoiser final : public Denoiser {
public:
    GaussianAnalyticDenoiser(Tensor mean, double sigma0, NoiseSchedule schedule);

    int feature_channels() const override { return 2; }
    std::unique_ptr<DenoiserEval> evaluate(const Tensor& z, int t) const override;

    Tensor posterior_mean(const Tensor& z, int t) const;
    const NoiseSchedule& schedule() const { return sched_; }

private:
    Tensor mean_;
    double sigma0_;
    NoiseSchedule sched_;
};

}  // namespace gooddrag
