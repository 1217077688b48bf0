#pragma once

#include <vector>

#include "gooddrag/denoiser.hpp"
#include "gooddrag/latent.hpp"
#include "gooddrag/schedule.hpp"

namespace gooddrag {

// Forward noising: z_t = sqrt(alpha_t) z_0 + sqrt(1 - alpha_t) eps.
Latent forward_noise(const Latent& z0, int t, const Tensor& eps, const NoiseSchedule& sched);

// One deterministic reverse step t -> t-1.
Latent ddim_denoise_step(const Latent& z, const Denoiser& d, const NoiseSchedule& sched);
// Same algebra with the noise estimate supplied by the caller, so an
// existing forward pass can be reused.
Latent ddim_denoise_from_eps(const Latent& z, const Tensor& eps, const NoiseSchedule& sched);

// One inversion step t-1 -> t, the algebraic inverse of the reverse step
// when the noise estimate is held fixed.
Latent ddim_invert_step(const Latent& z, const Denoiser& d, const NoiseSchedule& sched);
Latent ddim_invert_from_eps(const Latent& z, const Tensor& eps, const NoiseSchedule& sched);

// Latents at every timestep 0..depth() produced by iterated inversion.
// at(0) is the unmodified source.
class InversionTrajectory {
public:
    InversionTrajectory() = default;
    explicit InversionTrajectory(std::vector<Tensor> latents);

    int depth() const { return static_cast<int>(latents_.size()) - 1; }
    const Tensor& at(int t) const;
    Latent latent(int t) const { return Latent{at(t), t}; }

private:
    std::vector<Tensor> latents_;
};

InversionTrajectory invert_trajectory(const Latent& z0, int depth, const Denoiser& d,
                                      const NoiseSchedule& sched);

}  // namespace gooddrag
