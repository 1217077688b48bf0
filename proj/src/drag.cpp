#include "gooddrag/drag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gooddrag/interpolate.hpp"

namespace gooddrag {

namespace {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double handle_target_distance(Pixel p, Pixel q) {
    return std::hypot(static_cast<double>(q.y - p.y), static_cast<double>(q.x - p.x));
}

}  // namespace

void validate_pairs(const std::vector<ControlPair>& pairs, int h, int w) {
    for (const ControlPair& pr : pairs) {
        auto inside = [&](Pixel p) { return p.y >= 0 && p.y < h && p.x >= 0 && p.x < w; };
        if (!inside(pr.handle) || !inside(pr.target))
            throw std::invalid_argument("control pair outside canvas");
        if (pr.handle == pr.target)
            throw std::invalid_argument("control pair: handle equals target");
    }
}

EditMask::EditMask(int h, int w, std::vector<uint8_t> cells) : h_(h), w_(w), cells_(std::move(cells)) {
    if (h < 1 || w < 1) throw std::invalid_argument("EditMask: bad dimensions");
    if (cells_.size() != static_cast<size_t>(h) * w)
        throw std::invalid_argument("EditMask: cell count does not match dimensions");
    for (uint8_t c : cells_)
        if (c > 1) throw std::invalid_argument("EditMask: cells must be 0 or 1");
}

EditMask EditMask::all_editable(int h, int w) {
    return EditMask(h, w, std::vector<uint8_t>(static_cast<size_t>(h) * w, 1));
}

void DragConfig::validate(int t_max) const {
    if (total_drags < 0) throw std::invalid_argument("DragConfig: negative drag count");
    if (drags_per_denoise < 1)
        throw std::invalid_argument("DragConfig: drags_per_denoise must be at least 1");
    if (total_drags % drags_per_denoise != 0)
        throw std::invalid_argument("DragConfig: total_drags must be divisible by drags_per_denoise");
    if (supervision_steps < 1)
        throw std::invalid_argument("DragConfig: supervision_steps must be at least 1");
    if (supervision_radius < 1 || tracking_radius < 1)
        throw std::invalid_argument("DragConfig: radii must be at least 1");
    if (!(step_size > 0.0) || !(move_size > 0.0) || !(mask_weight > 0.0))
        throw std::invalid_argument("DragConfig: step_size, move_size, mask_weight must be positive");
    if (converge_radius < 0.0)
        throw std::invalid_argument("DragConfig: converge_radius must be non-negative");
    if (inversion_depth < 1 || inversion_depth > t_max)
        throw std::invalid_argument("DragConfig: inversion_depth outside schedule");
    if (inversion_depth - total_drags / drags_per_denoise < 0)
        throw std::invalid_argument("DragConfig: not enough timesteps for the alternation");
}

DragState make_drag_state(Latent z_at_depth, const std::vector<ControlPair>& pairs,
                          const InversionTrajectory& trajectory, double converge_radius) {
    DragState st;
    st.z = std::move(z_at_depth);
    st.trajectory = &trajectory;
    for (const ControlPair& pr : pairs) {
        st.handles.push_back(pr.handle);
        st.origins.push_back(pr.handle);
        st.targets.push_back(pr.target);
        st.frozen.push_back(handle_target_distance(pr.handle, pr.target) <= converge_radius);
    }
    return st;
}

const Tensor& TrajectoryFeatureCache::features_at(int t) {
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    Tensor f = den_.evaluate(traj_.at(t), t)->features();
    return cache_.emplace(t, std::move(f)).first->second;
}

MotionLossResult motion_loss(const DragState& st, const DragConfig& cfg, const EditMask& mask,
                             const Denoiser& den, const NoiseSchedule& sched, LossVariant variant,
                             TrajectoryFeatureCache* cache) {
    if (!st.trajectory) throw std::invalid_argument("motion_loss: state has no trajectory");
    int t = st.z.t;
    if (t < 1) throw std::out_of_range("motion_loss: timestep underflow");
    const Tensor& z = st.z.data;
    int h = z.height(), w = z.width();
    if (mask.height() != h || mask.width() != w)
        throw std::invalid_argument("motion_loss: mask dimensions mismatch");

    auto eval = den.evaluate(z, t);
    const Tensor& feat = eval->features();
    int fc = feat.channels();
    int r1 = cfg.supervision_radius;

    // reference feature map: unedited trajectory for the information
    // preserving variant, the current (detached) features for the baseline
    const Tensor* ref_feat = &feat;
    Tensor ref_local;
    if (variant == LossVariant::kInformationPreserving) {
        if (cache) {
            ref_feat = &cache->features_at(t);
        } else {
            ref_local = den.evaluate(st.trajectory->at(t), t)->features();
            ref_feat = &ref_local;
        }
    }

    MotionLossResult out;
    Tensor cot_feat(fc, h, w);
    bool any_active = false;
    for (size_t i = 0; i < st.handles.size(); ++i) {
        if (st.frozen[i]) continue;
        any_active = true;
        Pixel p = st.handles[i], q = st.targets[i];
        Pixel rp = variant == LossVariant::kInformationPreserving ? st.origins[i] : p;

        double dy = q.y - p.y, dx = q.x - p.x;
        double dist = std::hypot(dy, dx);
        double cy, cx;
        if (dist < cfg.move_size) {
            cy = q.y;
            cx = q.x;
        } else {
            cy = p.y + cfg.move_size * dy / dist;
            cx = p.x + cfg.move_size * dx / dist;
        }

        Tensor ref_patch = sample_patch(*ref_feat, rp.y, rp.x, r1);
        Tensor cur_patch = sample_patch(feat, cy, cx, r1);
        Tensor sign_patch(fc, 2 * r1 + 1, 2 * r1 + 1);
        for (size_t n = 0; n < cur_patch.size(); ++n) {
            double diff = cur_patch.data()[n] - ref_patch.data()[n];
            out.feature_term += std::fabs(diff);
            sign_patch.data()[n] = sgn(diff);
        }
        cot_feat += sample_patch_adjoint(sign_patch, cy, cx, r1, h, w);
    }

    // mask term: differentiable denoise step against the unedited z_{t-1}
    const Tensor& zprev_ref = st.trajectory->at(t - 1);
    double a_t = sched.alpha(t), a_prev = sched.alpha(t - 1);
    double a = std::sqrt(a_prev / a_t);
    double b = std::sqrt(1.0 - a_prev) - std::sqrt(a_prev * (1.0 - a_t) / a_t);
    const Tensor& eps = eval->eps();
    Tensor masked_sign(z.channels(), h, w);
    bool any_masked = false;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (mask.editable(y, x)) continue;
            any_masked = true;
            for (int c = 0; c < z.channels(); ++c) {
                double zprev = a * z.at(c, y, x) + b * eps.at(c, y, x);
                double diff = zprev - zprev_ref.at(c, y, x);
                out.mask_term += std::fabs(diff);
                masked_sign.at(c, y, x) = sgn(diff);
            }
        }
    out.mask_term *= cfg.mask_weight;

    Tensor cot_eps = masked_sign;
    cot_eps *= cfg.mask_weight * b;
    out.grad = eval->input_grad(any_masked ? &cot_eps : nullptr, any_active ? &cot_feat : nullptr);
    if (any_masked) out.grad.axpy(cfg.mask_weight * a, masked_sign);
    return out;
}

MotionLossResult motion_loss_ip(const DragState& st, const DragConfig& cfg, const EditMask& mask,
                                const Denoiser& den, const NoiseSchedule& sched) {
    return motion_loss(st, cfg, mask, den, sched, LossVariant::kInformationPreserving);
}

MotionLossResult motion_loss_baseline(const DragState& st, const DragConfig& cfg,
                                      const EditMask& mask, const Denoiser& den,
                                      const NoiseSchedule& sched) {
    return motion_loss(st, cfg, mask, den, sched, LossVariant::kBaseline);
}

void motion_supervise(DragState& st, const DragConfig& cfg, const EditMask& mask,
                      const Denoiser& den, const NoiseSchedule& sched, LossVariant variant,
                      TrajectoryFeatureCache* cache, SuperviseLog* log) {
    if (cfg.supervision_steps < 1)
        throw std::invalid_argument("motion_supervise: supervision_steps must be at least 1");
    for (int j = 0; j < cfg.supervision_steps; ++j) {
        MotionLossResult r = motion_loss(st, cfg, mask, den, sched, variant, cache);
        if (!std::isfinite(r.total()) || !r.grad.all_finite())
            throw NonFiniteLossError("non-finite motion loss at drag " +
                                         std::to_string(st.drag_index) + ", supervision step " +
                                         std::to_string(j) + ", t=" + std::to_string(st.z.t),
                                     st.drag_index, j, st.z.t);
        st.z.data.axpy(-cfg.step_size, r.grad);
        if (log) {
            log->feature_terms.push_back(r.feature_term);
            log->mask_terms.push_back(r.mask_term);
        }
    }
}

std::vector<Pixel> track_points(const DragState& st, const DragConfig& cfg, const Denoiser& den,
                                TrajectoryFeatureCache* cache) {
    if (!st.trajectory) throw std::invalid_argument("track_points: state has no trajectory");
    int t_ref = cfg.track_reference == TrackReference::kCurrentStep ? st.z.t
                                                                    : st.trajectory->depth();
    const Tensor* ref_feat;
    Tensor ref_local;
    if (cache) {
        ref_feat = &cache->features_at(t_ref);
    } else {
        ref_local = den.evaluate(st.trajectory->at(t_ref), t_ref)->features();
        ref_feat = &ref_local;
    }
    auto eval = den.evaluate(st.z.data, st.z.t);
    const Tensor& feat = eval->features();
    int fc = feat.channels();
    int h = feat.height(), w = feat.width();
    int r2 = cfg.tracking_radius;

    std::vector<Pixel> updated = st.handles;
    for (size_t i = 0; i < st.handles.size(); ++i) {
        if (st.frozen[i]) continue;
        Pixel p = st.handles[i], p0 = st.origins[i];
        int y_lo = std::max(0, p.y - r2), y_hi = std::min(h - 1, p.y + r2);
        int x_lo = std::max(0, p.x - r2), x_hi = std::min(w - 1, p.x + r2);
        Pixel best = p;
        double best_dist = std::numeric_limits<double>::infinity();
        int best_linf = std::numeric_limits<int>::max();
        for (int y = y_lo; y <= y_hi; ++y)
            for (int x = x_lo; x <= x_hi; ++x) {
                double d = 0.0;
                for (int c = 0; c < fc; ++c)
                    d += std::fabs(feat.at(c, y, x) - ref_feat->at(c, p0.y, p0.x));
                int linf = std::max(std::abs(y - p.y), std::abs(x - p.x));
                if (d < best_dist || (d == best_dist && linf < best_linf)) {
                    best_dist = d;
                    best_linf = linf;
                    best = {y, x};
                }
            }
        updated[i] = best;
    }
    return updated;
}

namespace {

std::vector<double> drift_row(const DragState& st, const Denoiser& den,
                              TrajectoryFeatureCache& cache, TrackReference ref_kind) {
    int t_ref = ref_kind == TrackReference::kCurrentStep ? st.z.t : st.trajectory->depth();
    const Tensor& ref_feat = cache.features_at(t_ref);
    Tensor feat = den.evaluate(st.z.data, st.z.t)->features();
    std::vector<double> row(st.handles.size(), 0.0);
    for (size_t i = 0; i < st.handles.size(); ++i) {
        Pixel p = st.handles[i], p0 = st.origins[i];
        double d = 0.0;
        for (int c = 0; c < feat.channels(); ++c)
            d += std::fabs(feat.at(c, p.y, p.x) - ref_feat.at(c, p0.y, p0.x));
        row[i] = d;
    }
    return row;
}

DragOutcome run_session(const Latent& source, const std::vector<ControlPair>& pairs,
                        const EditMask& mask, const DragConfig& cfg, const Denoiser& den,
                        const NoiseSchedule& sched, LossVariant variant, bool alternating) {
    cfg.validate(sched.t_max());
    if (source.t != 0) throw std::invalid_argument("drag session: source must be at t == 0");
    int h = source.data.height(), w = source.data.width();
    validate_pairs(pairs, h, w);
    if (mask.height() != h || mask.width() != w)
        throw std::invalid_argument("drag session: mask dimensions mismatch");

    int depth = cfg.inversion_depth;
    int total = cfg.total_drags, per_denoise = cfg.drags_per_denoise;

    InversionTrajectory traj = invert_trajectory(source, depth, den, sched);
    DragState st = make_drag_state(traj.latent(depth), pairs, traj, cfg.converge_radius);
    TrajectoryFeatureCache cache(den, traj);

    DragReport rep;
    rep.mode = alternating ? "gooddrag" : "all-at-once";
    rep.loss = variant == LossVariant::kInformationPreserving ? "ip" : "baseline";

    try {
        for (int k = 0; k < total; ++k) {
            st.drag_index = k;
            rep.drift.push_back(drift_row(st, den, cache, cfg.track_reference));

            bool any_active =
                std::any_of(st.frozen.begin(), st.frozen.end(), [](bool f) { return !f; });
            StepRecord rec;
            rec.drag_index = k;
            rec.timestep = st.z.t;
            rec.supervised = any_active;
            if (any_active) {
                SuperviseLog log;
                motion_supervise(st, cfg, mask, den, sched, variant, &cache, &log);
                rec.feature_loss = log.feature_terms.back();
                rec.mask_loss = log.mask_terms.back();
                st.handles = track_points(st, cfg, den, &cache);
                for (size_t i = 0; i < st.handles.size(); ++i)
                    if (!st.frozen[i] &&
                        handle_target_distance(st.handles[i], st.targets[i]) <= cfg.converge_radius)
                        st.frozen[i] = true;
            }
            rec.handles = st.handles;
            rec.frozen = st.frozen;
            rep.steps.push_back(std::move(rec));

            if (k == total - 1) rep.drift.push_back(drift_row(st, den, cache, cfg.track_reference));

            if (alternating && (k + 1) % per_denoise == 0) {
                rep.denoise_timesteps.push_back(st.z.t);
                st.z = ddim_denoise_step(st.z, den, sched);
            }
        }
        if (total == 0) rep.drift.push_back(drift_row(st, den, cache, cfg.track_reference));

        while (st.z.t > 0) {
            rep.denoise_timesteps.push_back(st.z.t);
            st.z = ddim_denoise_step(st.z, den, sched);
        }
    } catch (const NonFiniteLossError& e) {
        rep.aborted = true;
        rep.abort_reason = e.what();
        return DragOutcome{st.z, std::move(rep)};
    }

    for (size_t i = 0; i < st.handles.size(); ++i)
        rep.final_target_distance.push_back(handle_target_distance(st.handles[i], st.targets[i]));
    return DragOutcome{std::move(st.z), std::move(rep)};
}

}  // namespace

DragOutcome run_gooddrag(const Latent& source, const std::vector<ControlPair>& pairs,
                         const EditMask& mask, const DragConfig& cfg, const Denoiser& den,
                         const NoiseSchedule& sched, LossVariant variant) {
    return run_session(source, pairs, mask, cfg, den, sched, variant, true);
}

DragOutcome run_all_at_once(const Latent& source, const std::vector<ControlPair>& pairs,
                            const EditMask& mask, const DragConfig& cfg, const Denoiser& den,
                            const NoiseSchedule& sched, LossVariant variant) {
    return run_session(source, pairs, mask, cfg, den, sched, variant, false);
}

nlohmann::json report_to_json(const DragReport& rep) {
    nlohmann::json steps = nlohmann::json::array();
    for (const StepRecord& s : rep.steps) {
        nlohmann::json handles = nlohmann::json::array();
        for (Pixel p : s.handles) handles.push_back({p.y, p.x});
        steps.push_back({{"k", s.drag_index},
                         {"t", s.timestep},
                         {"supervised", s.supervised},
                         {"feature_loss", s.feature_loss},
                         {"mask_loss", s.mask_loss},
                         {"handles", handles},
                         {"frozen", s.frozen}});
    }
    return {{"mode", rep.mode},
            {"loss", rep.loss},
            {"steps", steps},
            {"denoise_timesteps", rep.denoise_timesteps},
            {"drift", rep.drift},
            {"final_target_distance", rep.final_target_distance},
            {"aborted", rep.aborted},
            {"abort_reason", rep.abort_reason}};
}

nlohmann::json drag_config_to_json(const DragConfig& cfg) {
    return {{"total_drags", cfg.total_drags},
            {"drags_per_denoise", cfg.drags_per_denoise},
            {"supervision_steps", cfg.supervision_steps},
            {"step_size", cfg.step_size},
            {"move_size", cfg.move_size},
            {"supervision_radius", cfg.supervision_radius},
            {"tracking_radius", cfg.tracking_radius},
            {"mask_weight", cfg.mask_weight},
            {"inversion_depth", cfg.inversion_depth},
            {"converge_radius", cfg.converge_radius},
            {"track_reference",
             cfg.track_reference == TrackReference::kCurrentStep ? "current_step"
                                                                 : "inversion_depth"}};
}

DragConfig drag_config_from_json(const nlohmann::json& j) {
    DragConfig cfg;
    cfg.total_drags = j.value("total_drags", cfg.total_drags);
    cfg.drags_per_denoise = j.value("drags_per_denoise", cfg.drags_per_denoise);
    cfg.supervision_steps = j.value("supervision_steps", cfg.supervision_steps);
    cfg.step_size = j.value("step_size", cfg.step_size);
    cfg.move_size = j.value("move_size", cfg.move_size);
    cfg.supervision_radius = j.value("supervision_radius", cfg.supervision_radius);
    cfg.tracking_radius = j.value("tracking_radius", cfg.tracking_radius);
    cfg.mask_weight = j.value("mask_weight", cfg.mask_weight);
    cfg.inversion_depth = j.value("inversion_depth", cfg.inversion_depth);
    cfg.converge_radius = j.value("converge_radius", cfg.converge_radius);
    std::string ref = j.value("track_reference", "current_step");
    if (ref == "current_step") cfg.track_reference = TrackReference::kCurrentStep;
    else if (ref == "inversion_depth") cfg.track_reference = TrackReference::kInversionDepth;
    else throw std::invalid_argument("drag config: unknown track_reference " + ref);
    return cfg;
}

}  // namespace gooddrag
