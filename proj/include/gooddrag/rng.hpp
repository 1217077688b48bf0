#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "gooddrag/tensor.hpp"

namespace gooddrag {

// Deterministic random source. mt19937_64 has a fully specified bit stream;
// the distributions are hand-rolled because the standard library ones are
// allowed to differ between implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive range, rejection sampled so every value is equally likely
    int uniform_int(int lo, int hi);

    // Box-Muller, one value per call (no cached second draw)
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    Tensor normal_tensor(int c, int h, int w, double stddev = 1.0);

    // stable sub-stream derivation for named components
    static uint64_t derive(uint64_t seed, const std::string& tag);

private:
    std::mt19937_64 gen_;
};

}  // namespace gooddrag
