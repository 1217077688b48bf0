#include "gooddrag/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gooddrag/metrics.hpp"
#include "gooddrag/png_io.hpp"
#include "gooddrag/rng.hpp"
#include "gooddrag/tensor_io.hpp"

namespace gooddrag {

namespace fs = std::filesystem;

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

nlohmann::json record_to_json(const RunRecord& r) {
    nlohmann::json j;
    j["case_id"] = r.case_id;
    j["failed"] = r.failed;
    j["error"] = r.error;
    j["wall_time_sec"] = r.wall_time_sec;
    j["case"] = r.case_json;
    j["config"] = r.config;
    j["mode"] = r.mode;
    j["loss"] = r.loss;
    j["seed"] = r.seed;
    j["schedule"] = r.schedule;
    j["checkpoint"] = r.checkpoint;
    j["outputs"] = r.outputs;
    j["metrics"] = r.metrics;
    return j;
}

RunRecord record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.case_id = j.at("case_id").get<std::string>();
    r.failed = j.at("failed").get<bool>();
    r.error = j.value("error", std::string());
    r.wall_time_sec = j.value("wall_time_sec", 0.0);
    r.case_json = j.at("case");
    r.config = j.at("config");
    r.mode = j.at("mode").get<std::string>();
    r.loss = j.at("loss").get<std::string>();
    r.seed = j.value("seed", uint64_t{0});
    r.schedule = j.at("schedule");
    r.checkpoint = j.value("checkpoint", std::string());
    r.outputs = j.value("outputs", nlohmann::json::object());
    r.metrics = j.value("metrics", nlohmann::json::object());
    return r;
}

namespace {

LossVariant parse_loss(const std::string& s) {
    if (s == "ip") return LossVariant::kInformationPreserving;
    if (s == "baseline") return LossVariant::kBaseline;
    throw std::invalid_argument("unknown loss variant: " + s);
}

DragOutcome run_mode(const std::string& mode, const Latent& source,
                     const std::vector<ControlPair>& pairs, const EditMask& mask,
                     const DragConfig& cfg, const Denoiser& den, const NoiseSchedule& sched,
                     LossVariant variant) {
    if (mode == "gooddrag") return run_gooddrag(source, pairs, mask, cfg, den, sched, variant);
    if (mode == "all-at-once") return run_all_at_once(source, pairs, mask, cfg, den, sched, variant);
    throw std::invalid_argument("unknown mode: " + mode);
}

struct MaskSplitMae {
    double in_mask = 0.0, out_mask = 0.0;
    size_t in_count = 0, out_count = 0;
};

MaskSplitMae mask_split_mae(const Tensor& a, const Tensor& b, const EditMask& mask) {
    MaskSplitMae m;
    double in_sum = 0.0, out_sum = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = 0; y < a.height(); ++y) {
            for (int x = 0; x < a.width(); ++x) {
                double d = std::abs(a.at(c, y, x) - b.at(c, y, x));
                if (mask.editable(y, x)) {
                    in_sum += d;
                    ++m.in_count;
                } else {
                    out_sum += d;
                    ++m.out_count;
                }
            }
        }
    }
    if (m.in_count > 0) m.in_mask = in_sum / static_cast<double>(m.in_count);
    if (m.out_count > 0) m.out_mask = out_sum / static_cast<double>(m.out_count);
    return m;
}

nlohmann::json compute_metrics(const Latent& source, const DragOutcome& out,
                               const std::vector<ControlPair>& pairs, const EditMask& mask) {
    nlohmann::json m;
    for (int gamma : {1, 5, 10, 20}) {
        m["dai_" + std::to_string(gamma)] = dai(source, out.edited, pairs, gamma);
    }
    m["fidelity_mse"] = fidelity_mse(source, out.edited);
    MaskSplitMae split = mask_split_mae(source.data, out.edited.data, mask);
    m["in_mask_mae"] = split.in_mask;
    m["in_mask_count"] = split.in_count;
    if (split.out_count > 0) {
        m["out_mask_mae"] = split.out_mask;
        m["out_mask_count"] = split.out_count;
    }
    if (!out.report.drift.empty()) {
        const auto& last = out.report.drift.back();
        double sum = 0.0;
        for (double v : last) sum += v;
        m["drift_final"] = last.empty() ? 0.0 : sum / static_cast<double>(last.size());
    }
    const auto& dist = out.report.final_target_distance;
    if (!dist.empty()) {
        double sum = 0.0, mx = 0.0;
        for (double v : dist) {
            sum += v;
            mx = std::max(mx, v);
        }
        m["final_distance_mean"] = sum / static_cast<double>(dist.size());
        m["final_distance_max"] = mx;
    }
    return m;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace

RunRecord run_case(const CaseManifest& c, const Checkpoint& ck, const ConvDenoiser& den,
                   const BenchOptions& opt) {
    RunRecord r;
    r.case_id = c.id;
    r.mode = opt.mode;
    r.loss = opt.loss;
    r.seed = opt.seed;
    r.case_json = case_to_json(c);
    r.schedule = {{"t_max", ck.t_max}, {"beta_min", ck.beta_min}, {"beta_max", ck.beta_max}};
    r.checkpoint = opt.checkpoint_path.string();

    auto start = std::chrono::steady_clock::now();
    try {
        validate_case(c, opt.base_config);
        Latent source = load_case_source(c);
        DragConfig cfg = effective_config(c, opt.base_config);
        r.config = drag_config_to_json(cfg);
        EditMask mask = c.mask ? *c.mask
                               : EditMask::all_editable(source.data.height(), source.data.width());
        NoiseSchedule sched = ck.schedule();
        DragOutcome out = run_mode(opt.mode, source, c.pairs, mask, cfg, den, sched,
                                   parse_loss(opt.loss));

        fs::path report_path = opt.out_dir / (c.id + ".report.json");
        write_json_file(report_path, report_to_json(out.report));
        r.outputs["report"] = report_path.string();

        if (out.report.aborted) {
            r.failed = true;
            r.error = "session aborted: " + out.report.abort_reason;
        } else {
            fs::path tensor_path = opt.out_dir / (c.id + ".edited.aldd");
            save_tensor(tensor_path, out.edited.data);
            fs::path edited_png = opt.out_dir / (c.id + ".edited.png");
            write_png_gray(edited_png, out.edited.data);
            fs::path source_png = opt.out_dir / (c.id + ".source.png");
            write_png_gray(source_png, source.data);
            r.outputs["edited_tensor"] = tensor_path.string();
            r.outputs["edited_png"] = edited_png.string();
            r.outputs["source_png"] = source_png.string();
            r.metrics = compute_metrics(source, out, c.pairs, mask);
        }
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
    }
    auto stop = std::chrono::steady_clock::now();
    r.wall_time_sec = std::chrono::duration<double>(stop - start).count();
    return r;
}

std::vector<RunRecord> run_cases(const std::vector<CaseManifest>& cases, const Checkpoint& ck,
                                 const BenchOptions& opt) {
    fs::create_directories(opt.out_dir);
    ConvDenoiser den = ck.denoiser();

    std::vector<RunRecord> records(cases.size());
    std::atomic<size_t> next{0};
    int jobs = std::max(1, opt.jobs);
    jobs = static_cast<int>(std::min<size_t>(jobs, cases.empty() ? 1 : cases.size()));

    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= cases.size()) break;
            records[i] = run_case(cases[i], ck, den, opt);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(jobs));
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Record files are written after the pool joins so the directory is
    // complete exactly when the function returns.
    for (const RunRecord& r : records) {
        write_json_file(opt.out_dir / (r.case_id + ".record.json"), record_to_json(r));
    }
    return records;
}

Latent rerun_record(const RunRecord& r, const std::optional<fs::path>& checkpoint_override) {
    fs::path ck_path = checkpoint_override ? *checkpoint_override : fs::path(r.checkpoint);
    Checkpoint ck = load_checkpoint(ck_path);
    int t_max = r.schedule.at("t_max").get<int>();
    double beta_min = r.schedule.at("beta_min").get<double>();
    double beta_max = r.schedule.at("beta_max").get<double>();
    if (ck.t_max != t_max || ck.beta_min != beta_min || ck.beta_max != beta_max) {
        throw std::runtime_error("checkpoint schedule does not match the record");
    }

    CaseManifest c = case_from_json(r.case_json);
    DragConfig cfg = drag_config_from_json(r.config);
    Latent source = load_case_source(c);
    EditMask mask =
        c.mask ? *c.mask : EditMask::all_editable(source.data.height(), source.data.width());
    ConvDenoiser den = ck.denoiser();
    NoiseSchedule sched = ck.schedule();
    DragOutcome out = run_mode(r.mode, source, c.pairs, mask, cfg, den, sched, parse_loss(r.loss));
    if (out.report.aborted) throw std::runtime_error("re-run aborted: " + out.report.abort_reason);
    return out.edited;
}

namespace {

CaseManifest make_case(std::string id, BlobScene scene, std::vector<ControlPair> pairs) {
    CaseManifest c;
    c.id = std::move(id);
    c.scene = std::move(scene);
    c.pairs = std::move(pairs);

    // Editable rectangle: bounding box of all handles and targets plus the
    // supervision envelope; everything else stays frozen.
    constexpr int kPad = 7;
    int h = c.scene->height, w = c.scene->width;
    int y0 = h, y1 = -1, x0 = w, x1 = -1;
    for (const auto& pr : c.pairs) {
        for (const Pixel& pt : {pr.handle, pr.target}) {
            y0 = std::min(y0, pt.y);
            y1 = std::max(y1, pt.y);
            x0 = std::min(x0, pt.x);
            x1 = std::max(x1, pt.x);
        }
    }
    y0 = std::max(0, y0 - kPad);
    x0 = std::max(0, x0 - kPad);
    y1 = std::min(h - 1, y1 + kPad);
    x1 = std::min(w - 1, x1 + kPad);
    std::vector<uint8_t> cells(static_cast<size_t>(h) * w, 0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) cells[static_cast<size_t>(y) * w + x] = 1;
    c.mask = EditMask(h, w, std::move(cells));
    return c;
}

BlobScene one_blob(double cy, double cx, double r, double inten) {
    BlobScene s;
    s.blobs = {{cy, cx, r, inten}};
    return s;
}

BlobScene two_blobs(Blob a, Blob b) {
    BlobScene s;
    s.blobs = {a, b};
    return s;
}

}  // namespace

std::vector<CaseManifest> fixture_suite() {
    std::vector<CaseManifest> cases;
    auto pair = [](int py, int px, int qy, int qx) {
        return ControlPair{{py, px}, {qy, qx}};
    };

    // Relocations: one blob, handle at its center. Long slow drags so the
    // session stays active across several alternation blocks; short fast
    // drags converge inside the first block and the modes collapse onto
    // the same denoise chain.
    auto slow = [](CaseManifest c, double move) {
        c.overrides["move_size"] = move;
        c.overrides["step_size"] = 0.01;
        return c;
    };
    cases.push_back(slow(
        make_case("relocate-01", one_blob(9, 9, 4.0, 0.90), {pair(9, 9, 22, 22)}), 1.0));
    cases.push_back(slow(
        make_case("relocate-02", one_blob(22, 10, 4.5, 1.00), {pair(22, 10, 9, 21)}), 1.0));
    cases.push_back(slow(
        make_case("relocate-03", one_blob(16, 8, 5.0, 0.80), {pair(16, 8, 16, 23)}), 1.5));
    cases.push_back(slow(
        make_case("relocate-04", one_blob(9, 16, 3.5, 0.70), {pair(9, 16, 23, 16)}), 1.5));
    cases.push_back(slow(
        make_case("relocate-05", one_blob(10, 10, 4.0, 0.95), {pair(10, 10, 21, 21)}), 2.0));
    cases.push_back(slow(
        make_case("relocate-06", one_blob(21, 12, 4.0, 0.60), {pair(21, 12, 10, 20)}), 2.0));
    cases.push_back(slow(
        make_case("relocate-07", one_blob(16, 9, 4.5, 0.85), {pair(16, 9, 16, 22)}), 2.0));
    cases.push_back(slow(
        make_case("relocate-08", one_blob(22, 16, 3.5, 0.75), {pair(22, 16, 9, 16)}), 2.0));

    // Rotations: two blobs spun around their midpoint.
    cases.push_back(make_case("rotate-01", two_blobs({16, 12, 3.5, 0.9}, {16, 20, 3.5, 0.9}),
                              {pair(16, 12, 12, 16), pair(16, 20, 20, 16)}));
    cases.push_back(make_case("rotate-02", two_blobs({16, 12, 3.5, 0.9}, {16, 20, 3.5, 0.9}),
                              {pair(16, 12, 20, 16), pair(16, 20, 12, 16)}));
    cases.push_back(make_case("rotate-03", two_blobs({14, 14, 3.5, 0.8}, {18, 18, 3.5, 0.8}),
                              {pair(14, 14, 14, 18), pair(18, 18, 18, 14)}));
    cases.push_back(make_case("rotate-04", two_blobs({12, 16, 3.5, 1.0}, {20, 16, 3.5, 1.0}),
                              {pair(12, 16, 16, 12), pair(20, 16, 16, 20)}));
    cases.push_back(make_case("rotate-05", two_blobs({16, 11, 3.0, 0.9}, {16, 21, 3.0, 0.9}),
                              {pair(16, 11, 12, 13), pair(16, 21, 20, 19)}));
    cases.push_back(make_case("rotate-06", two_blobs({13, 13, 3.0, 0.7}, {19, 19, 3.0, 0.7}),
                              {pair(13, 13, 13, 19), pair(19, 19, 19, 13)}));

    // Rescalings: opposite edge handles pushed outward or pulled inward.
    cases.push_back(make_case("resize-01", one_blob(16, 16, 4.5, 1.00),
                              {pair(16, 12, 16, 9), pair(16, 20, 16, 23)}));
    cases.push_back(make_case("resize-02", one_blob(16, 16, 5.0, 0.90),
                              {pair(16, 11, 16, 14), pair(16, 21, 16, 18)}));
    cases.push_back(make_case("resize-03", one_blob(16, 16, 4.0, 0.80),
                              {pair(12, 16, 9, 16), pair(20, 16, 23, 16)}));
    cases.push_back(make_case("resize-04", one_blob(16, 16, 5.0, 0.70),
                              {pair(11, 16, 14, 16), pair(21, 16, 18, 16)}));
    cases.push_back(make_case("resize-05", one_blob(15, 17, 4.0, 0.95),
                              {pair(15, 13, 15, 10), pair(15, 21, 15, 23)}));
    cases.push_back(make_case("resize-06", one_blob(17, 15, 4.5, 0.85),
                              {pair(17, 11, 17, 8), pair(17, 19, 17, 16)}));
    return cases;
}

const AblationArm& AblationSummary::arm(const std::string& mode, const std::string& loss) const {
    for (const auto& a : arms) {
        if (a.mode == mode && a.loss == loss) return a;
    }
    throw std::out_of_range("no ablation arm " + mode + "/" + loss);
}

AblationSummary run_ablation(const std::vector<CaseManifest>& cases, const Checkpoint& ck,
                             const BenchOptions& opt) {
    AblationSummary summary;
    for (const std::string& mode : {std::string("gooddrag"), std::string("all-at-once")}) {
        for (const std::string& loss : {std::string("ip"), std::string("baseline")}) {
            BenchOptions arm_opt = opt;
            arm_opt.mode = mode;
            arm_opt.loss = loss;
            arm_opt.out_dir = opt.out_dir / (mode + "-" + loss);
            AblationArm arm;
            arm.mode = mode;
            arm.loss = loss;
            arm.records = run_cases(cases, ck, arm_opt);

            std::vector<double> out_mask, drift, dist;
            for (const RunRecord& r : arm.records) {
                if (r.failed) continue;
                if (r.metrics.contains("out_mask_mae"))
                    out_mask.push_back(r.metrics["out_mask_mae"].get<double>());
                if (r.metrics.contains("drift_final"))
                    drift.push_back(r.metrics["drift_final"].get<double>());
                if (r.metrics.contains("final_distance_mean"))
                    dist.push_back(r.metrics["final_distance_mean"].get<double>());
            }
            if (!out_mask.empty()) arm.median_out_mask_change = median(out_mask);
            if (!drift.empty()) arm.median_drift_final = median(drift);
            if (!dist.empty()) arm.median_final_distance = median(dist);
            summary.arms.push_back(std::move(arm));
        }
    }
    return summary;
}

void write_ablation_csv(const fs::path& path, const AblationSummary& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "mode,loss,cases,failed,median_out_mask_change,median_drift_final,"
           "median_final_distance\n";
    out.precision(17);
    for (const auto& a : s.arms) {
        size_t failed = 0;
        for (const auto& r : a.records) failed += r.failed ? 1 : 0;
        out << a.mode << ',' << a.loss << ',' << a.records.size() << ',' << failed << ','
            << a.median_out_mask_change << ',' << a.median_drift_final << ','
            << a.median_final_distance << '\n';
    }
}

std::vector<Fig5Row> fig5_sweep(const Checkpoint& ck, int seeds, int n, double sigma,
                                uint64_t base_seed) {
    if (seeds < 1) throw std::invalid_argument("fig5_sweep needs at least one seed");
    ConvDenoiser den = ck.denoiser();
    NoiseSchedule sched = ck.schedule();
    std::vector<Fig5Row> rows;
    rows.reserve(static_cast<size_t>(seeds));
    for (int i = 1; i <= seeds; ++i) {
        uint64_t seed = base_seed + static_cast<uint64_t>(i);
        Rng rng(Rng::derive(seed, "fig5-scene"));
        BlobScene scene = random_scene(rng, ck.canvas, ck.canvas);
        Latent z0 = render_scene(scene);
        NoiseAccumulationResult res = noise_accumulation_experiment(z0, n, sigma, sched, den, seed);
        rows.push_back({seed, res.mse_single, res.mse_distributed});
    }
    return rows;
}

void write_fig5_csv(const fs::path& path, const std::vector<Fig5Row>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "seed,mse_single,mse_distributed\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.seed << ',' << r.mse_single << ',' << r.mse_distributed << '\n';
    }
}

std::vector<RunRecord> read_record_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a record directory: " + dir.string());
    std::vector<RunRecord> records;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        const std::string suffix = ".record.json";
        if (name.size() <= suffix.size() || name.substr(name.size() - suffix.size()) != suffix)
            continue;
        std::ifstream in(entry.path());
        if (!in) throw std::runtime_error("cannot read " + entry.path().string());
        nlohmann::json j;
        in >> j;
        records.push_back(record_from_json(j));
    }
    std::sort(records.begin(), records.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.case_id < b.case_id; });
    return records;
}

namespace {

struct Method {
    std::string name;
    std::map<std::string, RunRecord> by_case;  // non-failed records only
    size_t total = 0, failed = 0;
};

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

// CSV with header "case_id,<method>,<method>,..."; one rank row per case.
std::map<std::string, std::map<std::string, int>> read_human_ranks(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty human-rank CSV");
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "case_id")
        throw std::runtime_error("human-rank CSV header must be case_id,<method>,...");
    std::map<std::string, std::map<std::string, int>> ranks;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("human-rank CSV row " + std::to_string(line_no) +
                                     " has wrong field count");
        auto& row = ranks[fields[0]];
        for (size_t i = 1; i < fields.size(); ++i) row[header[i]] = std::stoi(fields[i]);
    }
    return ranks;
}

double json_mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

nlohmann::json evaluate_records(const std::vector<fs::path>& record_dirs,
                                const EvaluateOptions& opt) {
    std::vector<Method> methods;
    for (const fs::path& dir : record_dirs) {
        Method m;
        m.name = dir.filename().string();
        if (m.name.empty()) m.name = dir.parent_path().filename().string();
        for (const auto& other : methods) {
            if (other.name == m.name)
                throw std::runtime_error("duplicate method name: " + m.name);
        }
        for (RunRecord& r : read_record_dir(dir)) {
            ++m.total;
            if (r.failed) {
                ++m.failed;
            } else {
                m.by_case.emplace(r.case_id, std::move(r));
            }
        }
        methods.push_back(std::move(m));
    }

    nlohmann::json report;
    report["methods"] = nlohmann::json::array();
    const std::vector<int> gammas = {1, 5, 10, 20};

    for (const Method& m : methods) {
        nlohmann::json jm;
        jm["name"] = m.name;
        jm["cases"] = m.total;
        jm["failed"] = m.failed;
        nlohmann::json dai_mean = nlohmann::json::object();
        for (int g : gammas) {
            std::vector<double> vals;
            for (const auto& [id, r] : m.by_case) {
                std::string key = "dai_" + std::to_string(g);
                if (r.metrics.contains(key)) vals.push_back(r.metrics[key].get<double>());
            }
            dai_mean[std::to_string(g)] = json_mean(vals);
        }
        jm["dai_mean"] = dai_mean;
        for (const char* key : {"fidelity_mse", "final_distance_mean", "out_mask_mae"}) {
            std::vector<double> vals;
            for (const auto& [id, r] : m.by_case) {
                if (r.metrics.contains(key)) vals.push_back(r.metrics[key].get<double>());
            }
            if (!vals.empty()) jm[std::string(key) + "_mean"] = json_mean(vals);
        }
        report["methods"].push_back(jm);
    }

    // Cases every method completed, for rank-based comparisons.
    std::vector<std::string> common;
    if (!methods.empty()) {
        for (const auto& [id, r] : methods[0].by_case) {
            bool everywhere = true;
            for (size_t i = 1; i < methods.size(); ++i) {
                if (!methods[i].by_case.count(id)) {
                    everywhere = false;
                    break;
                }
            }
            if (everywhere) common.push_back(id);
        }
    }

    nlohmann::json case_rows = nlohmann::json::array();
    for (const std::string& id : common) {
        nlohmann::json row;
        row["id"] = id;
        for (const Method& m : methods) {
            row["dai_1"][m.name] = m.by_case.at(id).metrics.value("dai_1", 0.0);
        }
        case_rows.push_back(row);
    }
    report["cases"] = case_rows;

    std::map<std::string, std::vector<int>> metric_ranks;  // case -> rank per method index
    if (methods.size() >= 2) {
        for (const std::string& id : common) {
            std::vector<size_t> order(methods.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                return methods[a].by_case.at(id).metrics.value("dai_1", 0.0) <
                       methods[b].by_case.at(id).metrics.value("dai_1", 0.0);
            });
            std::vector<int> ranks(methods.size());
            for (size_t pos = 0; pos < order.size(); ++pos)
                ranks[order[pos]] = static_cast<int>(pos) + 1;
            metric_ranks[id] = ranks;
        }
        nlohmann::json jr;
        jr["methods"] = nlohmann::json::array();
        for (const Method& m : methods) jr["methods"].push_back(m.name);
        jr["by_case"] = nlohmann::json::object();
        for (const auto& [id, ranks] : metric_ranks) jr["by_case"][id] = ranks;
        report["dai_ranks"] = jr;
    }

    if (opt.human_ranks_csv) {
        if (methods.size() < 2)
            throw std::runtime_error("rank correlation needs at least two record directories");
        auto human = read_human_ranks(*opt.human_ranks_csv);
        RankTable table;
        for (const std::string& id : common) {
            auto it = human.find(id);
            if (it == human.end()) continue;
            std::vector<int> hrow;
            for (const Method& m : methods) {
                auto mit = it->second.find(m.name);
                if (mit == it->second.end())
                    throw std::runtime_error("human-rank CSV lacks method " + m.name);
                hrow.push_back(mit->second);
            }
            table.human.push_back(hrow);
            table.metric.push_back(metric_ranks.at(id));
        }
        if (table.human.empty())
            throw std::runtime_error("no overlap between records and human-rank CSV");
        report["spearman_dai_vs_human"] = spearman(table);
        report["spearman_cases"] = table.human.size();
    }

    if (opt.gscore) {
        if (!opt.transport) throw std::runtime_error("gscore evaluation needs a transport");
        GscoreClient client(opt.gscore_config, opt.transport);
        for (size_t mi = 0; mi < methods.size(); ++mi) {
            const Method& m = methods[mi];
            std::vector<std::string> ids;
            std::vector<GscoreRequest> reqs;
            nlohmann::json per_case = nlohmann::json::object();
            for (const auto& [id, r] : m.by_case) {
                try {
                    GscoreRequest req;
                    req.original_png_base64 =
                        base64_encode(read_file_bytes(r.outputs.at("source_png").get<std::string>()));
                    req.edited_png_base64 =
                        base64_encode(read_file_bytes(r.outputs.at("edited_png").get<std::string>()));
                    req.prompt = opt.gscore_prompt;
                    ids.push_back(id);
                    reqs.push_back(std::move(req));
                } catch (const std::exception& e) {
                    per_case[id] = {{"error", e.what()}};
                }
            }
            auto entries = client.score_batch(reqs);
            std::vector<double> scores;
            for (size_t i = 0; i < entries.size(); ++i) {
                if (entries[i].ok) {
                    per_case[ids[i]] = {{"score", entries[i].result.score}};
                    scores.push_back(entries[i].result.score);
                } else {
                    per_case[ids[i]] = {{"error", entries[i].error}};
                }
            }
            report["methods"][mi]["gscore"] = per_case;
            if (!scores.empty()) report["methods"][mi]["gscore_mean"] = json_mean(scores);
        }
    }
    return report;
}

std::vector<Fig5Row> read_fig5_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "seed,mse_single,mse_distributed") {
        throw std::runtime_error("bad header in " + path.string());
    }
    std::vector<Fig5Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Fig5Row r;
        char c1 = 0, c2 = 0;
        if (!(ls >> r.seed >> c1 >> r.mse_single >> c2 >> r.mse_distributed) || c1 != ',' ||
            c2 != ',') {
            throw std::runtime_error("bad row in " + path.string() + ": " + line);
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace gooddrag
