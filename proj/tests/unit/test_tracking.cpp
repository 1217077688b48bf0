#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gooddrag/drag.hpp"
#include "gooddrag/rng.hpp"

using namespace gooddrag;

namespace {

// Features are the latent itself, so tests control the matching field
// directly. eps is zero.
class IdentityDenoiser final : public Denoiser {
    class Eval final : public DenoiserEval {
    public:
        explicit Eval(const Tensor& z) : feat_(z), eps_(z.channels(), z.height(), z.width()) {}
        const Tensor& eps() const override { return eps_; }
        const Tensor& features() const override { return feat_; }
        Tensor input_grad(const Tensor* cot_eps, const Tensor* cot_features) const override {
            Tensor g(feat_.channels(), feat_.height(), feat_.width());
            if (cot_features) g += *cot_features;
            (void)cot_eps;
            return g;
        }

    private:
        Tensor feat_, eps_;
    };

public:
    int feature_channels() const override { return 1; }
    std::unique_ptr<DenoiserEval> evaluate(const Tensor& z, int /*t*/) const override {
        return std::make_unique<Eval>(z);
    }
};

Tensor filled(int h, int w, double v) {
    Tensor t(1, h, w);
    for (size_t i = 0; i < t.size(); ++i) t.data()[i] = v;
    return t;
}

DragState state_for(const Tensor& cur, int t, const InversionTrajectory& traj,
                    std::vector<Pixel> handles, std::vector<Pixel> origins) {
    DragState st;
    st.z = Latent{cur, t};
    st.handles = std::move(handles);
    st.origins = std::move(origins);
    st.targets = st.handles;
    st.frozen.assign(st.handles.size(), false);
    st.trajectory = &traj;
    return st;
}

Pixel brute_track(const Tensor& cur, const Tensor& ref, Pixel p, Pixel p0, int r2) {
    int h = cur.height(), w = cur.width();
    int ylo = std::max(0, p.y - r2), yhi = std::min(h - 1, p.y + r2);
    int xlo = std::max(0, p.x - r2), xhi = std::min(w - 1, p.x + r2);
    Pixel best = p;
    double best_d = std::numeric_limits<double>::infinity();
    int best_linf = std::numeric_limits<int>::max();
    for (int y = ylo; y <= yhi; ++y)
        for (int x = xlo; x <= xhi; ++x) {
            double d = 0.0;
            for (int c = 0; c < cur.channels(); ++c)
                d += std::fabs(cur.at(c, y, x) - ref.at(c, p0.y, p0.x));
            int linf = std::max(std::abs(y - p.y), std::abs(x - p.x));
            if (d < best_d || (d == best_d && linf < best_linf)) {
                best_d = d;
                best_linf = linf;
                best = {y, x};
            }
        }
    return best;
}

}  // namespace

TEST_SUITE("tracking") {

TEST_CASE("agrees with a brute-force search on random fields") {
    IdentityDenoiser den;
    Rng rng(401);
    DragConfig cfg;
    cfg.tracking_radius = 4;
    for (int trial = 0; trial < 30; ++trial) {
        Tensor cur = rng.normal_tensor(1, 15, 13);
        Tensor ref = rng.normal_tensor(1, 15, 13);
        std::vector<Tensor> lat(4, ref);
        InversionTrajectory traj(std::move(lat));
        Pixel p{rng.uniform_int(0, 14), rng.uniform_int(0, 12)};
        Pixel p0{rng.uniform_int(0, 14), rng.uniform_int(0, 12)};
        DragState st = state_for(cur, 2, traj, {p}, {p0});
        std::vector<Pixel> got = track_points(st, cfg, den);
        REQUIRE(got.size() == 1);
        CHECK(got[0] == brute_track(cur, ref, p, p0, cfg.tracking_radius));
    }
}

TEST_CASE("constant field keeps the handle in place") {
    IdentityDenoiser den;
    DragConfig cfg;
    cfg.tracking_radius = 3;
    Tensor cur = filled(9, 9, 2.5);
    std::vector<Tensor> lat(3, filled(9, 9, 2.5));
    InversionTrajectory traj(std::move(lat));
    DragState st = state_for(cur, 2, traj, {{4, 4}}, {{4, 4}});
    // every candidate ties on distance, the handle itself wins on L-inf
    CHECK(track_points(st, cfg, den)[0] == Pixel{4, 4});
}

TEST_CASE("distance ties resolve to the candidate nearest the handle") {
    IdentityDenoiser den;
    DragConfig cfg;
    cfg.tracking_radius = 3;
    Tensor ref = filled(9, 9, 5.0);
    Tensor cur = filled(9, 9, 100.0);
    cur.at(0, 4, 6) = 5.0;  // earlier in row-major, L-inf 2
    cur.at(0, 5, 4) = 5.0;  // later in row-major, L-inf 1
    std::vector<Tensor> lat(3, ref);
    InversionTrajectory traj(std::move(lat));
    DragState st = state_for(cur, 2, traj, {{4, 4}}, {{4, 4}});
    CHECK(track_points(st, cfg, den)[0] == Pixel{5, 4});
}

TEST_CASE("full ties resolve in row-major order") {
    IdentityDenoiser den;
    DragConfig cfg;
    cfg.tracking_radius = 3;
    Tensor ref = filled(9, 9, 5.0);
    Tensor cur = filled(9, 9, 100.0);
    cur.at(0, 4, 2) = 5.0;  // same L-inf as the other, smaller x
    cur.at(0, 4, 6) = 5.0;
    std::vector<Tensor> lat(3, ref);
    InversionTrajectory traj(std::move(lat));
    DragState st = state_for(cur, 2, traj, {{4, 4}}, {{4, 4}});
    CHECK(track_points(st, cfg, den)[0] == Pixel{4, 2});
}

TEST_CASE("search windows clip at the canvas border") {
    IdentityDenoiser den;
    DragConfig cfg;
    cfg.tracking_radius = 5;
    Tensor ref = filled(8, 8, 1.0);
    Tensor cur = filled(8, 8, 0.0);
    cur.at(0, 7, 7) = 1.0;
    std::vector<Tensor> lat(3, ref);
    InversionTrajectory traj(std::move(lat));

    DragState corner = state_for(cur, 2, traj, {{0, 0}}, {{0, 0}});
    // window reaches only rows/cols 0..5, the perfect match at (7,7) is outside
    Pixel got = track_points(corner, cfg, den)[0];
    CHECK(got.y <= 5);
    CHECK(got.x <= 5);

    DragState edge = state_for(cur, 2, traj, {{7, 4}}, {{7, 4}});
    CHECK(track_points(edge, cfg, den)[0] == Pixel{7, 7});
}

TEST_CASE("frozen handles do not move") {
    IdentityDenoiser den;
    DragConfig cfg;
    cfg.tracking_radius = 3;
    Tensor ref = filled(9, 9, 5.0);
    Tensor cur = filled(9, 9, 0.0);
    cur.at(0, 6, 6) = 5.0;
    std::vector<Tensor> lat(3, ref);
    InversionTrajectory traj(std::move(lat));
    DragState st = state_for(cur, 2, traj, {{4, 4}, {4, 5}}, {{4, 4}, {4, 5}});
    st.frozen[0] = true;
    std::vector<Pixel> got = track_points(st, cfg, den);
    CHECK(got[0] == Pixel{4, 4});
    CHECK(got[1] == Pixel{6, 6});
}

TEST_CASE("reference timestep follows the configured anchor") {
    IdentityDenoiser den;
    DragConfig cfg;
    cfg.tracking_radius = 3;
    // trajectory whose feature value at the origin changes with t
    std::vector<Tensor> lat;
    for (int t = 0; t <= 3; ++t) lat.push_back(filled(9, 9, double(t)));
    InversionTrajectory traj(std::move(lat));
    Tensor cur = filled(9, 9, 100.0);
    cur.at(0, 4, 6) = 2.0;  // matches traj value at t = 2
    cur.at(0, 6, 4) = 3.0;  // matches traj value at t = 3 (inversion depth)
    DragState st = state_for(cur, 2, traj, {{4, 4}}, {{4, 4}});

    cfg.track_reference = TrackReference::kCurrentStep;
    CHECK(track_points(st, cfg, den)[0] == Pixel{4, 6});
    cfg.track_reference = TrackReference::kInversionDepth;
    CHECK(track_points(st, cfg, den)[0] == Pixel{6, 4});
}

TEST_CASE("multiple handles track independently") {
    IdentityDenoiser den;
    Rng rng(402);
    DragConfig cfg;
    cfg.tracking_radius = 2;
    Tensor cur = rng.normal_tensor(1, 11, 11);
    Tensor ref = rng.normal_tensor(1, 11, 11);
    std::vector<Tensor> lat(3, ref);
    InversionTrajectory traj(std::move(lat));
    std::vector<Pixel> ps = {{3, 3}, {7, 8}};
    std::vector<Pixel> p0s = {{2, 2}, {8, 9}};
    DragState st = state_for(cur, 2, traj, ps, p0s);
    std::vector<Pixel> got = track_points(st, cfg, den);
    CHECK(got[0] == brute_track(cur, ref, ps[0], p0s[0], 2));
    CHECK(got[1] == brute_track(cur, ref, ps[1], p0s[1], 2));
}

}  // TEST_SUITE
