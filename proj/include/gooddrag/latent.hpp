#pragma once

#include "gooddrag/schedule.hpp"
#include "gooddrag/tensor.hpp"

namespace gooddrag {

// A latent image plus the timestep it lives at. t == 0 means clean data.
struct Latent {
    Tensor data;
    int t = 0;
};

void require_tag_in_schedule(const Latent& z, const NoiseSchedule& sched);

}  // namespace gooddrag
