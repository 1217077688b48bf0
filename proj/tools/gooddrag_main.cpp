#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gooddrag/bench.hpp"
#include "gooddrag/checkpoint.hpp"
#include "gooddrag/gscore.hpp"
#include "gooddrag/manifest.hpp"
#include "gooddrag/metrics.hpp"
#include "gooddrag/trainer.hpp"

namespace fs = std::filesystem;
using namespace gooddrag;

namespace {

int cmd_train_toy(const TrainConfig& cfg, const ScheduleSpec& spec, const fs::path& out) {
    TrainResult res = train_denoiser(cfg, spec);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_checkpoint(out, res.checkpoint);
    fs::path csv = out;
    csv.replace_extension(".loss.csv");
    write_loss_csv(csv, res.losses);
    std::cout << "checkpoint: " << out.string() << "\n";
    std::cout << "loss curve: " << csv.string() << "\n";
    if (!res.losses.empty()) {
        std::cout << "first loss: " << res.losses.front() << "\n";
        std::cout << "final loss: " << res.losses.back() << "\n";
    }
    return 0;
}

std::vector<CaseManifest> load_cases(const std::optional<fs::path>& manifest) {
    if (manifest) return read_manifest(*manifest);
    return fixture_suite();
}

int cmd_drag(const std::optional<fs::path>& manifest, const BenchOptions& opt) {
    std::vector<CaseManifest> cases = load_cases(manifest);
    Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    std::vector<RunRecord> records = run_cases(cases, ck, opt);
    int failed = 0;
    for (const RunRecord& r : records) {
        std::cout << r.case_id << ": " << (r.failed ? "FAILED " + r.error : "ok") << " ("
                  << r.wall_time_sec << " s)\n";
        failed += r.failed ? 1 : 0;
    }
    std::cout << records.size() << " cases, " << failed << " failed\n";
    return failed > 0 ? 1 : 0;
}

int cmd_ablate(const std::optional<fs::path>& manifest, const BenchOptions& opt) {
    std::vector<CaseManifest> cases = load_cases(manifest);
    Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    AblationSummary summary = run_ablation(cases, ck, opt);
    fs::path csv = opt.out_dir / "ablation.csv";
    write_ablation_csv(csv, summary);
    std::cout << "summary: " << csv.string() << "\n";
    int failed = 0;
    for (const auto& arm : summary.arms) {
        int arm_failed = 0;
        for (const auto& r : arm.records) arm_failed += r.failed ? 1 : 0;
        std::cout << arm.mode << "/" << arm.loss << ": median out-of-mask change "
                  << arm.median_out_mask_change << ", median drift " << arm.median_drift_final
                  << ", median final distance " << arm.median_final_distance << ", " << arm_failed
                  << " failed\n";
        failed += arm_failed;
    }
    return failed > 0 ? 1 : 0;
}

int cmd_fig5(const fs::path& checkpoint, int seeds, int n, double sigma, uint64_t base_seed,
             const fs::path& out) {
    Checkpoint ck = load_checkpoint(checkpoint);
    std::vector<Fig5Row> rows = fig5_sweep(ck, seeds, n, sigma, base_seed);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_fig5_csv(out, rows);
    int wins = 0;
    for (const auto& r : rows) wins += r.mse_distributed < r.mse_single ? 1 : 0;
    double rate = rows.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(rows.size());
    std::cout << "csv: " << out.string() << "\n";
    std::cout << "distributed wins: " << wins << "/" << rows.size() << " (win rate " << rate
              << ")\n";
    return 0;
}

int cmd_evaluate(const std::vector<fs::path>& record_dirs, bool gscore,
                 const std::optional<fs::path>& gscore_config, const fs::path& prompt_path,
                 const std::optional<fs::path>& human_ranks, const std::optional<fs::path>& out) {
    EvaluateOptions opt;
    opt.human_ranks_csv = human_ranks;
    if (gscore) {
        opt.gscore = true;
        opt.gscore_config = load_gscore_config(gscore_config);
        std::ifstream in(prompt_path);
        if (!in) throw std::runtime_error("cannot read prompt file " + prompt_path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        opt.gscore_prompt = buf.str();
        opt.transport = make_http_transport();
    }
    nlohmann::json report = evaluate_records(record_dirs, opt);
    if (out) {
        if (out->has_parent_path()) fs::create_directories(out->parent_path());
        std::ofstream f(*out);
        if (!f) throw std::runtime_error("cannot write " + out->string());
        f << report.dump(2) << "\n";
        std::cout << "report: " << out->string() << "\n";
    } else {
        std::cout << report.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drag editing on a toy diffusion model: training, sessions, ablations, metrics"};
    app.require_subcommand(1);

    // train-toy
    auto* train = app.add_subcommand("train-toy", "Train the blob-world denoiser");
    TrainConfig tcfg;
    ScheduleSpec tsched;
    fs::path train_out;
    train->add_option("--steps", tcfg.steps, "SGD steps")->capture_default_str();
    train->add_option("--batch", tcfg.batch, "Batch size")->capture_default_str();
    train->add_option("--lr", tcfg.learning_rate, "Learning rate")->capture_default_str();
    train->add_option("--seed", tcfg.seed, "Training seed")->capture_default_str();
    train->add_option("--canvas", tcfg.canvas, "Canvas size")->capture_default_str();
    train->add_option("--t-max", tsched.t_max, "Schedule depth")->capture_default_str();
    train->add_option("--beta-min", tsched.beta_min, "First beta")->capture_default_str();
    train->add_option("--beta-max", tsched.beta_max, "Last beta")->capture_default_str();
    train->add_option("--out", train_out, "Checkpoint path")->required();

    // shared drag/ablate options
    std::optional<fs::path> manifest;
    BenchOptions bopt;
    auto add_bench_options = [&](CLI::App* sub) {
        sub->add_option("--manifest", manifest,
                        "JSONL case manifest (default: built-in 20-case fixture suite)");
        sub->add_option("--checkpoint", bopt.checkpoint_path, "Trained denoiser checkpoint")
            ->required();
        sub->add_option("--seed", bopt.seed, "Run seed recorded in the records")
            ->capture_default_str();
        sub->add_option("--jobs", bopt.jobs, "Worker pool width")->capture_default_str();
        sub->add_option("--out", bopt.out_dir, "Output directory")->required();
    };

    auto* drag = app.add_subcommand("drag", "Run drag sessions over a manifest");
    add_bench_options(drag);
    drag->add_option("--mode", bopt.mode, "gooddrag or all-at-once")
        ->check(CLI::IsMember({"gooddrag", "all-at-once"}))
        ->capture_default_str();
    drag->add_option("--loss", bopt.loss, "ip or baseline")
        ->check(CLI::IsMember({"ip", "baseline"}))
        ->capture_default_str();

    auto* ablate = app.add_subcommand("ablate", "Run the 2x2 mode/loss ablation grid");
    add_bench_options(ablate);

    // fig5
    auto* fig5 = app.add_subcommand("fig5", "Noise accumulation experiment sweep");
    fs::path fig5_ckpt, fig5_out;
    int fig5_seeds = 50, fig5_n = 10;
    double fig5_sigma = 0.1;
    uint64_t fig5_seed = 0;
    fig5->add_option("--checkpoint", fig5_ckpt, "Trained denoiser checkpoint")->required();
    fig5->add_option("--seeds", fig5_seeds, "Number of seeds")->capture_default_str();
    fig5->add_option("--n", fig5_n, "Noise fields per arm")->capture_default_str();
    fig5->add_option("--sigma", fig5_sigma, "Perturbation scale")->capture_default_str();
    fig5->add_option("--seed", fig5_seed, "Base seed")->capture_default_str();
    fig5->add_option("--out", fig5_out, "CSV path")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Aggregate record directories into a report");
    std::vector<fs::path> record_dirs;
    bool use_gscore = false;
    std::optional<fs::path> gscore_config, human_ranks, eval_out_opt;
    fs::path prompt_path = "config/gscore_prompt_v1.txt";
    evaluate->add_option("--records", record_dirs, "Record directory, one per method")
        ->expected(-1);
    evaluate->add_flag("--gscore", use_gscore, "Query the GScore endpoint per case");
    evaluate->add_option("--gscore-config", gscore_config, "GScore JSON config file");
    evaluate->add_option("--gscore-prompt", prompt_path, "Rating prompt file")
        ->capture_default_str();
    evaluate->add_option("--human-ranks", human_ranks,
                         "CSV of human ranks (case_id,<method>,... header)");
    evaluate->add_option("--out", eval_out_opt, "Report JSON path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train_toy(tcfg, tsched, train_out);
        if (drag->parsed()) return cmd_drag(manifest, bopt);
        if (ablate->parsed()) return cmd_ablate(manifest, bopt);
        if (fig5->parsed())
            return cmd_fig5(fig5_ckpt, fig5_seeds, fig5_n, fig5_sigma, fig5_seed, fig5_out);
        if (evaluate->parsed())
            return cmd_evaluate(record_dirs, use_gscore, gscore_config, prompt_path, human_ranks,
                                eval_out_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
