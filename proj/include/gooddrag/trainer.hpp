#pragma once

#include <cstdint>
#include <vector>

#include "gooddrag/checkpoint.hpp"
#include "gooddrag/schedule.hpp"

namespace gooddrag {

struct TrainConfig {
    int steps = 5000;
    int batch = 16;
    double learning_rate = 1e-3;
    uint64_t seed = 0;
    int canvas = 32;

    void validate() const;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> losses;  // batch-mean squared error per step
};

// Plain SGD on the eps-prediction objective over random blob scenes,
// uniformly sampled timesteps, and fresh Gaussian noise. Bit-reproducible
// for a fixed seed. Throws TrainingDiverged when the loss stops being
// finite.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

TrainResult train_denoiser(const TrainConfig& cfg, const ScheduleSpec& sched_spec);

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses);
std::vector<double> read_loss_csv(const std::filesystem::path& path);

}  // namespace gooddrag
