#include "gooddrag/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gooddrag {

Latent forward_noise(const Latent& z0, int t, const Tensor& eps, const NoiseSchedule& sched) {
    if (z0.t != 0) throw std::invalid_argument("forward_noise: source must be at t == 0");
    if (t < 1 || t > sched.t_max())
        throw std::out_of_range("forward_noise: target timestep out of range");
    if (!eps.same_shape(z0.data))
        throw std::invalid_argument("forward_noise: noise shape mismatch");
    Tensor out = z0.data;
    out *= sched.sqrt_alpha(t);
    out.axpy(sched.sqrt_one_minus_alpha(t), eps);
    return Latent{std::move(out), t};
}

Latent ddim_denoise_from_eps(const Latent& z, const Tensor& eps, const NoiseSchedule& sched) {
    require_tag_in_schedule(z, sched);
    if (z.t < 1) throw std::out_of_range("ddim_denoise_step: latent already at t == 0");
    if (!eps.same_shape(z.data))
        throw std::invalid_argument("ddim_denoise_step: eps shape mismatch");
    int t = z.t;
    double a_t = sched.alpha(t), a_prev = sched.alpha(t - 1);
    double scale = std::sqrt(a_prev / a_t);
    double shift = std::sqrt(1.0 - a_prev) - std::sqrt(a_prev * (1.0 - a_t) / a_t);
    Tensor out = z.data;
    out *= scale;
    out.axpy(shift, eps);
    return Latent{std::move(out), t - 1};
}

Latent ddim_denoise_step(const Latent& z, const Denoiser& d, const NoiseSchedule& sched) {
    require_tag_in_schedule(z, sched);
    if (z.t < 1) throw std::out_of_range("ddim_denoise_step: latent already at t == 0");
    return ddim_denoise_from_eps(z, d.evaluate(z.data, z.t)->eps(), sched);
}

Latent ddim_invert_from_eps(const Latent& z, const Tensor& eps, const NoiseSchedule& sched) {
    require_tag_in_schedule(z, sched);
    if (z.t >= sched.t_max())
        throw std::out_of_range("ddim_invert_step: latent already at t == t_max");
    if (!eps.same_shape(z.data))
        throw std::invalid_argument("ddim_invert_step: eps shape mismatch");
    int t = z.t + 1;
    double a_t = sched.alpha(t), a_prev = sched.alpha(t - 1);
    double scale = std::sqrt(a_t / a_prev);
    double shift = std::sqrt(1.0 - a_t) - std::sqrt(a_t * (1.0 - a_prev) / a_prev);
    Tensor out = z.data;
    out *= scale;
    out.axpy(shift, eps);
    return Latent{std::move(out), t};
}

Latent ddim_invert_step(const Latent& z, const Denoiser& d, const NoiseSchedule& sched) {
    require_tag_in_schedule(z, sched);
    if (z.t >= sched.t_max())
        throw std::out_of_range("ddim_invert_step: latent already at t == t_max");
    return ddim_invert_from_eps(z, d.evaluate(z.data, z.t)->eps(), sched);
}

InversionTrajectory::InversionTrajectory(std::vector<Tensor> latents)
    : latents_(std::move(latents)) {
    if (latents_.empty())
        throw std::invalid_argument("InversionTrajectory: needs at least the source");
}

const Tensor& InversionTrajectory::at(int t) const {
    if (t < 0 || t > depth())
        throw std::out_of_range("InversionTrajectory: timestep " + std::to_string(t) +
                                " outside 0.." + std::to_string(depth()));
    return latents_[t];
}

InversionTrajectory invert_trajectory(const Latent& z0, int depth, const Denoiser& d,
                                      const NoiseSchedule& sched) {
    if (z0.t != 0) throw std::invalid_argument("invert_trajectory: source must be at t == 0");
    if (depth < 0 || depth > sched.t_max())
        throw std::out_of_range("invert_trajectory: depth out of range");
    std::vector<Tensor> latents;
    latents.reserve(depth + 1);
    latents.push_back(z0.data);
    Latent cur = z0;
    for (int t = 1; t <= depth; ++t) {
        cur = ddim_invert_step(cur, d, sched);
        latents.push_back(cur.data);
    }
    return InversionTrajectory(std::move(latents));
}

}  // namespace gooddrag
