#include "gooddrag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gooddrag/diffusion.hpp"
#include "gooddrag/rng.hpp"

namespace gooddrag {

double dai(const Latent& original, const Latent& edited, const std::vector<ControlPair>& pairs,
           int gamma) {
    if (original.t != 0 || edited.t != 0)
        throw std::invalid_argument("dai: latents must be at t == 0");
    if (!original.data.same_shape(edited.data))
        throw std::invalid_argument("dai: shape mismatch");
    if (gamma < 1) throw std::invalid_argument("dai: gamma must be at least 1");
    if (pairs.empty()) throw std::invalid_argument("dai: no control pairs");
    int h = original.data.height(), w = original.data.width();
    validate_pairs(pairs, h, w);

    // Patches are clipped to the canvas (offsets must be valid around both
    // centers) while the normalizer stays (1+2*gamma)^2, which treats
    // off-canvas pixels as zero difference. Keeps the four standard gamma
    // values usable on small canvases.
    double total = 0.0;
    for (const ControlPair& pr : pairs) {
        double sum = 0.0;
        for (int dy = -gamma; dy <= gamma; ++dy)
            for (int dx = -gamma; dx <= gamma; ++dx) {
                int oy = pr.handle.y + dy, ox = pr.handle.x + dx;
                int ey = pr.target.y + dy, ex = pr.target.x + dx;
                if (oy < 0 || oy >= h || ox < 0 || ox >= w) continue;
                if (ey < 0 || ey >= h || ex < 0 || ex >= w) continue;
                for (int c = 0; c < original.data.channels(); ++c) {
                    double d = original.data.at(c, oy, ox) - edited.data.at(c, ey, ex);
                    sum += d * d;
                }
            }
        double side = 2.0 * gamma + 1.0;
        total += sum / (side * side);
    }
    return total / static_cast<double>(pairs.size());
}

double fidelity_mse(const Latent& a, const Latent& b) {
    if (!a.data.same_shape(b.data)) throw std::invalid_argument("fidelity_mse: shape mismatch");
    return mean_sq_diff(a.data, b.data);
}

NoiseAccumulationResult noise_accumulation_experiment(const Latent& z0, int n, double sigma,
                                                      const NoiseSchedule& sched,
                                                      const Denoiser& den, uint64_t seed) {
    if (z0.t != 0) throw std::invalid_argument("noise experiment: source must be at t == 0");
    int depth = sched.t_max();
    if (n < 0 || n > depth)
        throw std::invalid_argument("noise experiment: sample count outside 0..t_max");
    if (sigma < 0.0) throw std::invalid_argument("noise experiment: negative sigma");

    InversionTrajectory traj = invert_trajectory(z0, depth, den, sched);
    Latent z_top = traj.latent(depth);

    Rng rng(Rng::derive(seed, "noise-accumulation"));
    std::vector<Tensor> fields;
    fields.reserve(n);
    for (int i = 0; i < n; ++i)
        fields.push_back(rng.normal_tensor(z0.data.channels(), z0.data.height(),
                                           z0.data.width(), sigma));

    // arm A: the whole perturbation budget lands at the deepest timestep
    Latent single = z_top;
    for (const Tensor& f : fields) single.data += f;
    while (single.t > 0) single = ddim_denoise_step(single, den, sched);

    // arm B: one perturbation per step, then finish denoising
    Latent distributed = z_top;
    for (int i = 0; i < n; ++i) {
        distributed.data += fields[i];
        distributed = ddim_denoise_step(distributed, den, sched);
    }
    while (distributed.t > 0) distributed = ddim_denoise_step(distributed, den, sched);

    return {fidelity_mse(single, z0), fidelity_mse(distributed, z0)};
}

std::vector<std::pair<int, double>> drift_curve(const DragReport& report) {
    std::vector<std::pair<int, double>> curve;
    for (size_t k = 0; k < report.drift.size(); ++k) {
        const std::vector<double>& row = report.drift[k];
        if (row.empty()) {
            curve.emplace_back(static_cast<int>(k), 0.0);
            continue;
        }
        double s = 0.0;
        for (double v : row) s += v;
        curve.emplace_back(static_cast<int>(k), s / static_cast<double>(row.size()));
    }
    return curve;
}

double heatmap_std(const DragState& st, const DragConfig& cfg, const Denoiser& den) {
    if (!st.trajectory) throw std::invalid_argument("heatmap_std: state has no trajectory");
    int t_ref = cfg.track_reference == TrackReference::kCurrentStep ? st.z.t
                                                                    : st.trajectory->depth();
    Tensor ref_feat = den.evaluate(st.trajectory->at(t_ref), t_ref)->features();
    Tensor feat = den.evaluate(st.z.data, st.z.t)->features();
    int h = feat.height(), w = feat.width(), fc = feat.channels();
    int r2 = cfg.tracking_radius;

    double total = 0.0;
    int active = 0;
    for (size_t i = 0; i < st.handles.size(); ++i) {
        if (st.frozen[i]) continue;
        Pixel p = st.handles[i], p0 = st.origins[i];
        std::vector<double> dists;
        for (int y = std::max(0, p.y - r2); y <= std::min(h - 1, p.y + r2); ++y)
            for (int x = std::max(0, p.x - r2); x <= std::min(w - 1, p.x + r2); ++x) {
                double d = 0.0;
                for (int c = 0; c < fc; ++c)
                    d += std::fabs(feat.at(c, y, x) - ref_feat.at(c, p0.y, p0.x));
                dists.push_back(d);
            }
        double mean = 0.0;
        for (double d : dists) mean += d;
        mean /= static_cast<double>(dists.size());
        double var = 0.0;
        for (double d : dists) var += (d - mean) * (d - mean);
        var /= static_cast<double>(dists.size());
        total += std::sqrt(var);
        ++active;
    }
    return active == 0 ? 0.0 : total / active;
}

double spearman(const RankTable& table) {
    size_t rows = table.human.size();
    if (rows == 0 || table.metric.size() != rows)
        throw std::invalid_argument("spearman: tables must be non-empty and the same size");
    size_t methods = table.human[0].size();
    if (methods < 2) throw std::invalid_argument("spearman: need at least two methods");

    auto check_permutation = [methods](const std::vector<int>& row) {
        if (row.size() != methods)
            throw std::invalid_argument("spearman: ragged rank table");
        std::vector<bool> seen(methods, false);
        for (int r : row) {
            if (r < 1 || r > static_cast<int>(methods) || seen[r - 1])
                throw std::invalid_argument("spearman: row is not a permutation of 1..N_m");
            seen[r - 1] = true;
        }
    };

    double nm = static_cast<double>(methods);
    double denom = nm * (nm * nm - 1.0);
    double rho_sum = 0.0;
    for (size_t i = 0; i < rows; ++i) {
        check_permutation(table.human[i]);
        check_permutation(table.metric[i]);
        double d2 = 0.0;
        for (size_t j = 0; j < methods; ++j) {
            double d = table.human[i][j] - table.metric[i][j];
            d2 += d * d;
        }
        rho_sum += 1.0 - 6.0 * d2 / denom;
    }
    return rho_sum / static_cast<double>(rows);
}

}  // namespace gooddrag
