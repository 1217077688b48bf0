#include "gooddrag/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gooddrag {

int Rng::uniform_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
    uint64_t bound = (UINT64_MAX / span) * span;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= bound);
    return static_cast<int>(lo + static_cast<int64_t>(x % span));
}

double Rng::normal() {
    // u1 in (0,1] so the log is finite
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor Rng::normal_tensor(int c, int h, int w, double stddev) {
    Tensor t(c, h, w);
    double* p = t.data();
    for (size_t i = 0; i < t.size(); ++i) p[i] = stddev * normal();
    return t;
}

uint64_t Rng::derive(uint64_t seed, const std::string& tag) {
    // FNV-1a over the tag, then splitmix64 finalization mixed with the seed
    uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace gooddrag
