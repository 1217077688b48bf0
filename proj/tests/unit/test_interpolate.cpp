#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gooddrag/interpolate.hpp"
#include "gooddrag/rng.hpp"

using namespace gooddrag;

namespace {

// independently coded scalar bilinear lookup
double bilerp_ref(const Tensor& src, int c, double y, double x) {
    int y0 = static_cast<int>(std::floor(y));
    int x0 = static_cast<int>(std::floor(x));
    y0 = std::min(std::max(y0, 0), src.height() - 2);
    x0 = std::min(std::max(x0, 0), src.width() - 2);
    double fy = y - y0, fx = x - x0;
    return (1 - fy) * (1 - fx) * src.at(c, y0, x0) + (1 - fy) * fx * src.at(c, y0, x0 + 1) +
           fy * (1 - fx) * src.at(c, y0 + 1, x0) + fy * fx * src.at(c, y0 + 1, x0 + 1);
}

}  // namespace

TEST_SUITE("interpolate") {

TEST_CASE("resize of a constant stays constant") {
    Tensor src = Tensor::full(3, 4, 4, 2.5);
    Tensor out = bilinear_resize(src, 8, 8);
    REQUIRE(out.channels() == 3);
    REQUIRE(out.height() == 8);
    REQUIRE(out.width() == 8);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) CHECK(out.at(c, y, x) == doctest::Approx(2.5));
}

TEST_CASE("identity resize copies exactly") {
    Rng rng(31);
    Tensor src = rng.normal_tensor(2, 5, 7);
    Tensor out = bilinear_resize(src, 5, 7);
    CHECK(max_abs_diff(out, src) == 0.0);
}

TEST_CASE("corners are pinned under upsampling") {
    Rng rng(32);
    Tensor src = rng.normal_tensor(1, 3, 3);
    Tensor out = bilinear_resize(src, 9, 9);
    CHECK(out.at(0, 0, 0) == doctest::Approx(src.at(0, 0, 0)));
    CHECK(out.at(0, 0, 8) == doctest::Approx(src.at(0, 0, 2)));
    CHECK(out.at(0, 8, 0) == doctest::Approx(src.at(0, 2, 0)));
    CHECK(out.at(0, 8, 8) == doctest::Approx(src.at(0, 2, 2)));
}

TEST_CASE("checkerboard upsampling matches the direct formula") {
    Tensor src(1, 4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) src.at(0, y, x) = ((y + x) % 2 == 0) ? 1.0 : 0.0;
    Tensor out = bilinear_resize(src, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double sy = y * 3.0 / 7.0, sx = x * 3.0 / 7.0;
            CHECK(out.at(0, y, x) == doctest::Approx(bilerp_ref(src, 0, sy, sx)).epsilon(1e-12));
        }
}

TEST_CASE("resize adjoint satisfies the inner product identity") {
    Rng rng(33);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = rng.normal_tensor(2, 4, 5);
        Tensor y = rng.normal_tensor(2, 7, 6);
        Tensor ax = bilinear_resize(x, 7, 6);
        Tensor aty = bilinear_resize_adjoint(y, 4, 5);
        CHECK(dot(ax, y) == doctest::Approx(dot(x, aty)).epsilon(1e-10));
    }
}

TEST_CASE("sample_point equals the scalar oracle and respects bounds") {
    Rng rng(34);
    Tensor src = rng.normal_tensor(2, 6, 8);
    for (auto [y, x] : {std::pair{0.0, 0.0}, {3.3, 6.8}, {4.999, 0.2}, {5.0, 7.0}}) {
        auto v = sample_point(src, y, x);
        REQUIRE(v.size() == 2);
        for (int c = 0; c < 2; ++c)
            CHECK(v[c] == doctest::Approx(bilerp_ref(src, c, y, x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(sample_point(src, -0.01, 0.0), std::out_of_range);
    CHECK_THROWS_AS(sample_point(src, 0.0, 7.01), std::out_of_range);
}

TEST_CASE("midpoint sample on a linear ramp is the midpoint value") {
    Tensor src(1, 2, 2);
    src.at(0, 0, 0) = 0.0;
    src.at(0, 0, 1) = 1.0;
    src.at(0, 1, 0) = 2.0;
    src.at(0, 1, 1) = 3.0;
    CHECK(sample_point(src, 0.5, 0.0)[0] == doctest::Approx(1.0));
    CHECK(sample_point(src, 0.0, 0.5)[0] == doctest::Approx(0.5));
    CHECK(sample_point(src, 0.5, 0.5)[0] == doctest::Approx(1.5));
}

TEST_CASE("patch bounds follow the rounded-out footprint") {
    CHECK(patch_in_bounds(10, 10, 3.0, 3.0, 3));
    CHECK_FALSE(patch_in_bounds(10, 10, 2.9, 3.0, 3));  // floor(2.9-3) < 0
    CHECK(patch_in_bounds(10, 10, 6.0, 6.0, 3));
    CHECK_FALSE(patch_in_bounds(10, 10, 6.1, 6.0, 3));  // ceil(6.1+3) > 9
    CHECK(patch_in_bounds(10, 10, 5.5, 4.5, 3));
}

TEST_CASE("sample_patch matches per-cell point sampling") {
    Rng rng(35);
    Tensor src = rng.normal_tensor(3, 12, 12);
    double cy = 5.3, cx = 6.8;
    int r = 2;
    Tensor patch = sample_patch(src, cy, cx, r);
    REQUIRE(patch.channels() == 3);
    REQUIRE(patch.height() == 2 * r + 1);
    REQUIRE(patch.width() == 2 * r + 1);
    for (int c = 0; c < 3; ++c)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                CHECK(patch.at(c, dy + r, dx + r) ==
                      doctest::Approx(bilerp_ref(src, c, cy + dy, cx + dx)).epsilon(1e-12));

    CHECK_THROWS(sample_patch(src, 1.0, 6.0, 2));  // footprint exits the canvas
}

TEST_CASE("patch adjoint satisfies the inner product identity") {
    Rng rng(36);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = rng.normal_tensor(2, 9, 9);
        Tensor cot = rng.normal_tensor(2, 5, 5);
        double cy = 3.0 + rng.uniform(), cx = 3.0 + rng.uniform();
        Tensor patch = sample_patch(x, cy, cx, 2);
        Tensor grad = sample_patch_adjoint(cot, cy, cx, 2, 9, 9);
        REQUIRE(grad.same_shape(x));
        CHECK(dot(patch, cot) == doctest::Approx(dot(x, grad)).epsilon(1e-10));
    }
}

}  // TEST_SUITE
