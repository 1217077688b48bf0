#pragma once

#include <vector>

#include "gooddrag/latent.hpp"
#include "gooddrag/rng.hpp"
#include "gooddrag/tensor.hpp"

namespace gooddrag {

struct Blob {
    double cy = 0.0, cx = 0.0;
    double radius = 0.0;
    double intensity = 0.0;
};

// Procedural scene: a few soft blobs on an empty canvas.
struct BlobScene {
    int height = 32, width = 32;
    std::vector<Blob> blobs;

    // 1..3 blobs, centers at least one radius away from every border,
    // intensities in [0.2, 1].
    void validate() const;
};

// Sum of isotropic Gaussian bumps (sigma = radius / 2), clamped to [0, 1].
Latent render_scene(const BlobScene& scene);

BlobScene random_scene(Rng& rng, int height = 32, int width = 32);

}  // namespace gooddrag
