#pragma once

#include <cstdint>
#include <vector>

#include "gooddrag/denoiser.hpp"
#include "gooddrag/drag.hpp"
#include "gooddrag/latent.hpp"
#include "gooddrag/schedule.hpp"

namespace gooddrag {

// Dragging accuracy index: mean over pairs of the per-pixel squared
// difference between the patch around the handle in the original and the
// patch around the target in the edit. Channel values are summed inside the
// squared norm; the normalizer stays the patch pixel count, so channel
// count scales values consistently across compared methods.
double dai(const Latent& original, const Latent& edited, const std::vector<ControlPair>& pairs,
           int gamma);

double fidelity_mse(const Latent& a, const Latent& b);

struct NoiseAccumulationResult {
    double mse_single = 0.0;       // all perturbations injected at the deepest step
    double mse_distributed = 0.0;  // one perturbation per step, interleaved with denoising
};

// Seeded comparison of the two ways of spending the same noise budget.
NoiseAccumulationResult noise_accumulation_experiment(const Latent& z0, int n, double sigma,
                                                      const NoiseSchedule& sched,
                                                      const Denoiser& den, uint64_t seed);

// Mean feature drift per drag step, averaged over handles.
std::vector<std::pair<int, double>> drift_curve(const DragReport& report);

// Standard deviation (population) of the tracking-distance heatmap around
// each active handle, averaged over active handles.
double heatmap_std(const DragState& st, const DragConfig& cfg, const Denoiser& den);

struct RankTable {
    // rows: images, columns: methods; every row is a permutation of 1..N_m
    std::vector<std::vector<int>> human;
    std::vector<std::vector<int>> metric;
};

double spearman(const RankTable& table);

}  // namespace gooddrag
