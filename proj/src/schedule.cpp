#include "gooddrag/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gooddrag {

NoiseSchedule::NoiseSchedule(std::vector<double> alphas) {
    if (alphas.size() < 2)
        throw std::invalid_argument("NoiseSchedule: need at least one timestep");
    if (alphas[0] != 1.0)
        throw std::invalid_argument("NoiseSchedule: alpha(0) must be 1");
    for (size_t t = 1; t < alphas.size(); ++t) {
        double a = alphas[t];
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument("NoiseSchedule: alpha(" + std::to_string(t) +
                                        ") outside (0,1)");
        if (!(a < alphas[t - 1]))
            throw std::invalid_argument("NoiseSchedule: alphas must strictly decrease");
    }
    if (!(alphas.back() < 0.05))
        throw std::invalid_argument("NoiseSchedule: alpha(t_max) must be below 0.05");
    alphas_ = std::move(alphas);
    sqrt_alphas_.resize(alphas_.size());
    sqrt_one_minus_.resize(alphas_.size());
    for (size_t t = 0; t < alphas_.size(); ++t) {
        sqrt_alphas_[t] = std::sqrt(alphas_[t]);
        sqrt_one_minus_[t] = std::sqrt(1.0 - alphas_[t]);
    }
}

double NoiseSchedule::alpha(int t) const {
    if (t < 0 || t > t_max())
        throw std::out_of_range("NoiseSchedule: timestep out of range");
    return alphas_[t];
}

double NoiseSchedule::sqrt_alpha(int t) const {
    if (t < 0 || t > t_max())
        throw std::out_of_range("NoiseSchedule: timestep out of range");
    return sqrt_alphas_[t];
}

double NoiseSchedule::sqrt_one_minus_alpha(int t) const {
    if (t < 0 || t > t_max())
        throw std::out_of_range("NoiseSchedule: timestep out of range");
    return sqrt_one_minus_[t];
}

NoiseSchedule build_schedule(int t_max, double beta_min, double beta_max) {
    if (t_max < 2) throw std::invalid_argument("build_schedule: t_max must be >= 2");
    if (!(beta_min > 0.0) || !(beta_max < 1.0) || !(beta_min < beta_max))
        throw std::invalid_argument("build_schedule: betas must satisfy 0 < beta_min < beta_max < 1");
    std::vector<double> alphas(t_max + 1);
    alphas[0] = 1.0;
    double acc = 1.0;
    for (int t = 1; t <= t_max; ++t) {
        double frac = static_cast<double>(t - 1) / (t_max - 1);
        double beta = beta_min + (beta_max - beta_min) * frac;
        acc *= 1.0 - beta;
        alphas[t] = acc;
    }
    return NoiseSchedule(std::move(alphas));
}

NoiseSchedule default_schedule() {
    return build_schedule(kDefaultTMax, kDefaultBetaMin, kDefaultBetaMax);
}

}  // namespace gooddrag
