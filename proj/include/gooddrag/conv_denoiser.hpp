#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gooddrag/denoiser.hpp"
#include "gooddrag/schedule.hpp"
#include "gooddrag/tensor.hpp"

namespace gooddrag {

// 3x3 convolution, zero padding, stride 1. Weights are w[oc][ic][ky][kx].
struct Conv3x3 {
    int in_c = 0, out_c = 0;
    std::vector<double> w;
    std::vector<double> b;

    void resize(int ic, int oc) {
        in_c = ic;
        out_c = oc;
        w.assign(static_cast<size_t>(oc) * ic * 9, 0.0);
        b.assign(oc, 0.0);
    }
};

// All learnable parameters of the noise predictor. Doubles as the gradient
// accumulator because gradients have the same shape.
struct ConvParams {
    Conv3x3 l1, l2, l3, l4;
    std::vector<double> time_w;  // hidden x 8
    std::vector<double> time_b;  // hidden

    void zero();
    void axpy(double s, const ConvParams& o);
    size_t count() const;
    double max_abs() const;
};

inline constexpr int kTimeEmbedDim = 8;

// Sinusoidal timestep encoding: interleaved sin/cos at four geometric
// frequencies.
std::array<double, kTimeEmbedDim> time_embedding(int t);

// Small convolutional eps-predictor: 1 -> 16 -> 32 -> 16 -> 1 channels of
// 3x3 convs with SiLU between, plus a learned per-channel timestep bias
// injected after the first conv. The feature map is the activation after
// the third conv (16 channels at native resolution).
class ConvDenoiser final : public Denoiser {
public:
    static constexpr int kHidden1 = 16;
    static constexpr int kHidden2 = 32;
    static constexpr int kFeatureChannels = 16;

    explicit ConvDenoiser(NoiseSchedule sched);  // all-zero weights
    ConvDenoiser(NoiseSchedule sched, ConvParams params);

    static ConvDenoiser random_init(NoiseSchedule sched, uint64_t seed);

    int feature_channels() const override { return kFeatureChannels; }
    std::unique_ptr<DenoiserEval> evaluate(const Tensor& z, int t) const override;

    // Forward plus parameter-gradient backward for one training sample.
    // Adds grad_scale * d(mean squared eps error)/d(params) into grads and
    // returns this sample's mean squared error.
    double accumulate_loss_grad(const Tensor& z, int t, const Tensor& target_eps,
                                ConvParams& grads, double grad_scale) const;

    ConvParams& params() { return params_; }
    const ConvParams& params() const { return params_; }
    const NoiseSchedule& schedule() const { return sched_; }

private:
    ConvParams params_;
    NoiseSchedule sched_;
};

}  // namespace gooddrag
