#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gooddrag/checkpoint.hpp"
#include "gooddrag/gscore.hpp"
#include "gooddrag/manifest.hpp"

namespace gooddrag {

struct BenchOptions {
    std::string mode = "gooddrag";  // or "all-at-once"
    std::string loss = "ip";        // or "baseline"
    uint64_t seed = 0;
    int jobs = 1;
    std::filesystem::path out_dir;
    std::filesystem::path checkpoint_path;
    DragConfig base_config;
};

struct RunRecord {
    std::string case_id;
    bool failed = false;
    std::string error;
    double wall_time_sec = 0.0;
    nlohmann::json case_json;      // complete case definition
    nlohmann::json config;         // effective drag config
    std::string mode, loss;
    uint64_t seed = 0;
    nlohmann::json schedule;       // t_max / beta_min / beta_max
    std::string checkpoint;
    nlohmann::json outputs;        // paths of written artifacts
    nlohmann::json metrics;
};

nlohmann::json record_to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);

// Runs one case end to end: render, drag, metrics, artifact files.
RunRecord run_case(const CaseManifest& c, const Checkpoint& ck, const ConvDenoiser& den,
                   const BenchOptions& opt);

// Worker pool over cases; per-case failures are captured in the records.
std::vector<RunRecord> run_cases(const std::vector<CaseManifest>& cases, const Checkpoint& ck,
                                 const BenchOptions& opt);

// Re-executes the session stored in a record and returns the edited latent,
// for bit-identical reproducibility checks.
Latent rerun_record(const RunRecord& r,
                    const std::optional<std::filesystem::path>& checkpoint_override = {});

// Built-in 20-case suite: relocations, two-point rotations, inward and
// outward rescalings.
std::vector<CaseManifest> fixture_suite();

struct AblationArm {
    std::string mode, loss;
    std::vector<RunRecord> records;
    double median_out_mask_change = 0.0;
    double median_drift_final = 0.0;
    double median_final_distance = 0.0;
};

struct AblationSummary {
    std::vector<AblationArm> arms;  // gooddrag/ip, gooddrag/baseline, all-at-once/ip, all-at-once/baseline

    const AblationArm& arm(const std::string& mode, const std::string& loss) const;
};

AblationSummary run_ablation(const std::vector<CaseManifest>& cases, const Checkpoint& ck,
                             const BenchOptions& opt);
void write_ablation_csv(const std::filesystem::path& path, const AblationSummary& s);

struct Fig5Row {
    uint64_t seed = 0;
    double mse_single = 0.0;
    double mse_distributed = 0.0;
};

std::vector<Fig5Row> fig5_sweep(const Checkpoint& ck, int seeds, int n, double sigma,
                                uint64_t base_seed);
void write_fig5_csv(const std::filesystem::path& path, const std::vector<Fig5Row>& rows);
std::vector<Fig5Row> read_fig5_csv(const std::filesystem::path& path);

double median(std::vector<double> values);

struct EvaluateOptions {
    bool gscore = false;
    GscoreConfig gscore_config;
    std::string gscore_prompt;
    std::shared_ptr<Transport> transport;  // required when gscore is set
    std::optional<std::filesystem::path> human_ranks_csv;
};

std::vector<RunRecord> read_record_dir(const std::filesystem::path& dir);

// Aggregates one record directory per method: DAI means per gamma, optional
// GScore per case, Spearman correlation against a human-rank CSV. Method
// names come from the directory basenames.
nlohmann::json evaluate_records(const std::vector<std::filesystem::path>& record_dirs,
                                const EvaluateOptions& opt);

}  // namespace gooddrag
