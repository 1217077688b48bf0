#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gooddrag/denoiser.hpp"
#include "gooddrag/diffusion.hpp"
#include "gooddrag/latent.hpp"
#include "gooddrag/schedule.hpp"
#include "gooddrag/tensor.hpp"

namespace gooddrag {

struct Pixel {
    int y = 0, x = 0;
    bool operator==(const Pixel&) const = default;
};

// Handle point p and where the user wants it dragged to.
struct ControlPair {
    Pixel handle;
    Pixel target;
};

void validate_pairs(const std::vector<ControlPair>& pairs, int h, int w);

// Binary grid, 1 = editable, 0 = frozen.
class EditMask {
public:
    EditMask() = default;
    EditMask(int h, int w, std::vector<uint8_t> cells);
    static EditMask all_editable(int h, int w);

    int height() const { return h_; }
    int width() const { return w_; }
    bool editable(int y, int x) const { return cells_[static_cast<size_t>(y) * w_ + x] != 0; }
    const std::vector<uint8_t>& cells() const { return cells_; }

private:
    int h_ = 0, w_ = 0;
    std::vector<uint8_t> cells_;
};

enum class LossVariant { kInformationPreserving, kBaseline };
enum class TrackReference { kCurrentStep, kInversionDepth };

struct DragConfig {
    int total_drags = 70;        // drag operations in the session
    int drags_per_denoise = 10;  // drags between alternation denoise steps
    int supervision_steps = 3;   // latent updates per drag
    double step_size = 0.02;     // gradient step on the latent
    double move_size = 4.0;      // how far the supervised patch leads the handle
    int supervision_radius = 4;
    int tracking_radius = 12;
    double mask_weight = 0.2;
    int inversion_depth = 38;
    double converge_radius = 1.0;  // handle freezes at this distance to target
    TrackReference track_reference = TrackReference::kCurrentStep;

    void validate(int t_max) const;
};

struct DragState {
    Latent z;
    std::vector<Pixel> handles;
    std::vector<Pixel> origins;  // handle positions at session start
    std::vector<Pixel> targets;
    std::vector<bool> frozen;
    int drag_index = 0;
    const InversionTrajectory* trajectory = nullptr;
};

DragState make_drag_state(Latent z_at_depth, const std::vector<ControlPair>& pairs,
                          const InversionTrajectory& trajectory, double converge_radius);

// Lazily evaluated feature maps of the unedited trajectory latents, shared
// across the loss and tracking calls of one session.
class TrajectoryFeatureCache {
public:
    TrajectoryFeatureCache(const Denoiser& den, const InversionTrajectory& traj)
        : den_(den), traj_(traj) {}
    const Tensor& features_at(int t);

private:
    const Denoiser& den_;
    const InversionTrajectory& traj_;
    std::map<int, Tensor> cache_;
};

struct MotionLossResult {
    double feature_term = 0.0;
    double mask_term = 0.0;
    Tensor grad;

    double total() const { return feature_term + mask_term; }
};

// Motion supervision loss and its gradient in the current latent. The
// feature term pulls the patch ahead of each active handle toward a
// detached reference patch; the variant picks the reference (original
// handle on the unedited trajectory vs current handle on the current
// latent). The mask term compares a differentiable denoise step against
// the unedited trajectory outside the editable region.
MotionLossResult motion_loss(const DragState& st, const DragConfig& cfg, const EditMask& mask,
                             const Denoiser& den, const NoiseSchedule& sched, LossVariant variant,
                             TrajectoryFeatureCache* cache = nullptr);
MotionLossResult motion_loss_ip(const DragState& st, const DragConfig& cfg, const EditMask& mask,
                                const Denoiser& den, const NoiseSchedule& sched);
MotionLossResult motion_loss_baseline(const DragState& st, const DragConfig& cfg,
                                      const EditMask& mask, const Denoiser& den,
                                      const NoiseSchedule& sched);

struct NonFiniteLossError : std::runtime_error {
    NonFiniteLossError(const std::string& msg, int drag_index, int supervise_step, int timestep)
        : std::runtime_error(msg), drag_index(drag_index), supervise_step(supervise_step),
          timestep(timestep) {}
    int drag_index, supervise_step, timestep;
};

struct SuperviseLog {
    std::vector<double> feature_terms;
    std::vector<double> mask_terms;
};

// Applies supervision_steps gradient updates to the latent in place.
// Handles and drag counter stay untouched.
void motion_supervise(DragState& st, const DragConfig& cfg, const EditMask& mask,
                      const Denoiser& den, const NoiseSchedule& sched, LossVariant variant,
                      TrajectoryFeatureCache* cache = nullptr, SuperviseLog* log = nullptr);

// One tracking round: each active handle moves to the integer position in
// its search window whose feature vector is closest (L1) to the original
// handle's reference feature. Ties prefer the candidate nearest (L-inf) to
// the current handle, then the earliest in row-major order. Windows are
// clipped at the canvas border.
std::vector<Pixel> track_points(const DragState& st, const DragConfig& cfg, const Denoiser& den,
                                TrajectoryFeatureCache* cache = nullptr);

struct StepRecord {
    int drag_index = 0;
    int timestep = 0;
    bool supervised = false;
    double feature_loss = 0.0;
    double mask_loss = 0.0;
    std::vector<Pixel> handles;
    std::vector<bool> frozen;
};

struct DragReport {
    std::string mode;  // "gooddrag" or "all-at-once"
    std::string loss;  // "ip" or "baseline"
    std::vector<StepRecord> steps;
    std::vector<int> denoise_timesteps;        // tag before each denoise step
    std::vector<std::vector<double>> drift;    // per drag entry, per handle
    std::vector<double> final_target_distance; // per handle
    bool aborted = false;
    std::string abort_reason;
};

struct DragOutcome {
    Latent edited;
    DragReport report;
};

DragOutcome run_gooddrag(const Latent& source, const std::vector<ControlPair>& pairs,
                         const EditMask& mask, const DragConfig& cfg, const Denoiser& den,
                         const NoiseSchedule& sched,
                         LossVariant variant = LossVariant::kInformationPreserving);
DragOutcome run_all_at_once(const Latent& source, const std::vector<ControlPair>& pairs,
                            const EditMask& mask, const DragConfig& cfg, const Denoiser& den,
                            const NoiseSchedule& sched,
                            LossVariant variant = LossVariant::kInformationPreserving);

nlohmann::json report_to_json(const DragReport& rep);

nlohmann::json drag_config_to_json(const DragConfig& cfg);
DragConfig drag_config_from_json(const nlohmann::json& j);

}  // namespace gooddrag
