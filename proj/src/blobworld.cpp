#include "gooddrag/blobworld.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gooddrag {

void BlobScene::validate() const {
    if (height < 8 || width < 8)
        throw std::invalid_argument("BlobScene: canvas too small");
    if (blobs.empty() || blobs.size() > 3)
        throw std::invalid_argument("BlobScene: need 1 to 3 blobs, got " +
                                    std::to_string(blobs.size()));
    for (const Blob& b : blobs) {
        if (!(b.radius > 0.0))
            throw std::invalid_argument("BlobScene: blob radius must be positive");
        if (!(b.intensity >= 0.2 && b.intensity <= 1.0))
            throw std::invalid_argument("BlobScene: intensity outside [0.2, 1]");
        if (b.cy < b.radius || b.cy > height - 1 - b.radius || b.cx < b.radius ||
            b.cx > width - 1 - b.radius)
            throw std::invalid_argument("BlobScene: blob center too close to the border");
    }
}

Latent render_scene(const BlobScene& scene) {
    Tensor img(1, scene.height, scene.width);
    for (const Blob& b : scene.blobs) {
        double sigma = b.radius / 2.0;
        double inv = 1.0 / (2.0 * sigma * sigma);
        for (int y = 0; y < scene.height; ++y)
            for (int x = 0; x < scene.width; ++x) {
                double dy = y - b.cy, dx = x - b.cx;
                img.at(0, y, x) += b.intensity * std::exp(-(dy * dy + dx * dx) * inv);
            }
    }
    for (size_t i = 0; i < img.size(); ++i)
        img.data()[i] = std::clamp(img.data()[i], 0.0, 1.0);
    return Latent{std::move(img), 0};
}

BlobScene random_scene(Rng& rng, int height, int width) {
    BlobScene scene;
    scene.height = height;
    scene.width = width;
    int n = rng.uniform_int(1, 3);
    for (int i = 0; i < n; ++i) {
        Blob b;
        b.radius = rng.uniform(3.0, 6.0);
        b.intensity = rng.uniform(0.2, 1.0);
        b.cy = rng.uniform(b.radius, height - 1 - b.radius);
        b.cx = rng.uniform(b.radius, width - 1 - b.radius);
        scene.blobs.push_back(b);
    }
    return scene;
}

}  // namespace gooddrag
