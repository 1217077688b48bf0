#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "gooddrag/conv_denoiser.hpp"
#include "gooddrag/schedule.hpp"

namespace gooddrag {

// Checkpoint file: a text header ("ALDDCKPT 1", one line of meta JSON, a
// record count, then one "name offset rank dims..." line per tensor)
// followed by the concatenated binary tensor records. Offsets are relative
// to the start of the binary section.
struct Checkpoint {
    ConvParams params;
    int canvas = 0;
    int t_max = 0;
    double beta_min = 0.0, beta_max = 0.0;
    nlohmann::json train;  // training configuration snapshot

    NoiseSchedule schedule() const { return build_schedule(t_max, beta_min, beta_max); }
    ConvDenoiser denoiser() const { return ConvDenoiser(schedule(), params); }
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gooddrag
