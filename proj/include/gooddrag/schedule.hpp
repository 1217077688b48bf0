#pragma once

#include <vector>

namespace gooddrag {

// Cumulative signal retention for the forward process. alpha(t) is the
// product of (1 - beta_s) over s = 1..t, with alpha(0) == 1 (clean data).
class NoiseSchedule {
public:
    explicit NoiseSchedule(std::vector<double> alphas);

    int t_max() const { return static_cast<int>(alphas_.size()) - 1; }

    double alpha(int t) const;
    double sqrt_alpha(int t) const;
    double sqrt_one_minus_alpha(int t) const;

private:
    std::vector<double> alphas_;  // index == timestep, [0] == 1
    std::vector<double> sqrt_alphas_;
    std::vector<double> sqrt_one_minus_;
};

// Linearly spaced per-step betas from beta_min to beta_max, accumulated.
NoiseSchedule build_schedule(int t_max, double beta_min, double beta_max);

inline constexpr int kDefaultTMax = 50;
inline constexpr double kDefaultBetaMin = 0.02;
inline constexpr double kDefaultBetaMax = 0.6;

// Constructor arguments for build_schedule, kept around where the schedule
// itself must be recorded (checkpoints, run records).
struct ScheduleSpec {
    int t_max = kDefaultTMax;
    double beta_min = kDefaultBetaMin;
    double beta_max = kDefaultBetaMax;

    NoiseSchedule build() const { return build_schedule(t_max, beta_min, beta_max); }
};

NoiseSchedule default_schedule();

}  // namespace gooddrag
