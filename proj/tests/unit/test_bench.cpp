#include <doctest.h>

#include <fstream>
#include <set>

#include "gooddrag/bench.hpp"
#include "gooddrag/png_io.hpp"

using namespace gooddrag;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

RunRecord synthetic_record(const std::string& id, double dai1, bool failed = false) {
    RunRecord r;
    r.case_id = id;
    r.failed = failed;
    if (failed) r.error = "synthetic failure";
    r.case_json = {{"id", id}};
    r.config = drag_config_to_json(DragConfig{});
    r.mode = "gooddrag";
    r.loss = "ip";
    r.seed = 11;
    r.schedule = {{"t_max", 8}, {"beta_min", 0.05}, {"beta_max", 0.7}};
    if (!failed) {
        r.metrics = {{"dai_1", dai1},
                     {"dai_5", dai1 * 0.5},
                     {"fidelity_mse", 0.01},
                     {"final_distance_mean", 1.5},
                     {"out_mask_mae", 0.002}};
    }
    return r;
}

void write_record(const std::filesystem::path& dir, const RunRecord& r) {
    std::ofstream out(dir / (r.case_id + ".record.json"));
    out << record_to_json(r).dump();
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("run records survive the json round trip") {
    RunRecord r = synthetic_record("case-x", 0.25);
    r.wall_time_sec = 1.75;
    r.checkpoint = "/tmp/foo.ckpt";
    r.outputs = {{"report", "a.json"}, {"edited_png", "b.png"}};

    RunRecord back = record_from_json(record_to_json(r));
    CHECK(back.case_id == "case-x");
    CHECK(back.failed == false);
    CHECK(back.wall_time_sec == 1.75);
    CHECK(back.mode == "gooddrag");
    CHECK(back.loss == "ip");
    CHECK(back.seed == 11);
    CHECK(back.checkpoint == "/tmp/foo.ckpt");
    CHECK(back.schedule == r.schedule);
    CHECK(back.outputs == r.outputs);
    CHECK(back.metrics == r.metrics);
    CHECK(record_to_json(back) == record_to_json(r));
}

TEST_CASE("median handles odd, even and degenerate inputs") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({5.0}) == 5.0);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("fig5 csv round trips full double precision") {
    std::vector<Fig5Row> rows = {{1, 0.1234567890123456789, 2e-17},
                                 {2, 3.5, 1.0 / 3.0}};
    std::filesystem::path path =
        std::filesystem::temp_directory_path() / "fig5_roundtrip.csv";
    write_fig5_csv(path, rows);
    std::vector<Fig5Row> back = read_fig5_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].seed == 1);
    CHECK(back[0].mse_single == rows[0].mse_single);
    CHECK(back[0].mse_distributed == rows[0].mse_distributed);
    CHECK(back[1].mse_distributed == rows[1].mse_distributed);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_fig5_csv(path), std::runtime_error);
}

TEST_CASE("fixture suite ships twenty valid cases") {
    std::vector<CaseManifest> cases = fixture_suite();
    REQUIRE(cases.size() == 20);

    std::set<std::string> ids;
    int relocate = 0, rotate = 0, resize = 0;
    for (const CaseManifest& c : cases) {
        CHECK(ids.insert(c.id).second);
        CHECK_NOTHROW(validate_case(c, DragConfig{}));
        if (c.id.rfind("relocate-", 0) == 0) ++relocate;
        if (c.id.rfind("rotate-", 0) == 0) ++rotate;
        if (c.id.rfind("resize-", 0) == 0) ++resize;
        // every case freezes part of the canvas so out-of-mask metrics exist
        REQUIRE(c.mask.has_value());
        bool any_frozen = false;
        for (uint8_t cell : c.mask->cells()) any_frozen |= cell == 0;
        CHECK(any_frozen);
        CaseManifest back = case_from_json(case_to_json(c));
        CHECK(case_to_json(back) == case_to_json(c));
    }
    CHECK(relocate == 8);
    CHECK(rotate == 6);
    CHECK(resize == 6);
}

TEST_CASE("record directories filter by suffix and sort by case id") {
    std::filesystem::path dir = fresh_dir("bench_record_dir");
    write_record(dir, synthetic_record("bravo", 0.2));
    write_record(dir, synthetic_record("alpha", 0.1));
    {
        std::ofstream junk(dir / "notes.txt");
        junk << "ignore me";
    }
    std::vector<RunRecord> records = read_record_dir(dir);
    REQUIRE(records.size() == 2);
    CHECK(records[0].case_id == "alpha");
    CHECK(records[1].case_id == "bravo");

    CHECK_THROWS_AS(read_record_dir(dir / "missing"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("evaluation aggregates methods, ranks and human correlation") {
    std::filesystem::path a = fresh_dir("bench_eval/method-a");
    std::filesystem::path b = fresh_dir("bench_eval/method-b");
    write_record(a, synthetic_record("c1", 0.1));
    write_record(a, synthetic_record("c2", 0.2));
    write_record(a, synthetic_record("c3", 0.3));
    write_record(a, synthetic_record("c4", 0.0, true));  // failed, must not rank
    write_record(b, synthetic_record("c1", 0.2));
    write_record(b, synthetic_record("c2", 0.1));
    write_record(b, synthetic_record("c3", 0.5));

    std::filesystem::path csv =
        std::filesystem::temp_directory_path() / "bench_eval_human.csv";
    {
        std::ofstream out(csv);
        out << "case_id,method-a,method-b\n"
            << "c1,1,2\n"    // agrees with dai
            << "c2,2,1\n"    // agrees
            << "c3,2,1\n";   // disagrees
    }

    EvaluateOptions opt;
    opt.human_ranks_csv = csv;
    nlohmann::json report = evaluate_records({a, b}, opt);

    REQUIRE(report["methods"].size() == 2);
    CHECK(report["methods"][0]["name"] == "method-a");
    CHECK(report["methods"][0]["cases"] == 4);
    CHECK(report["methods"][0]["failed"] == 1);
    CHECK(report["methods"][0]["dai_mean"]["1"].get<double>() ==
          doctest::Approx((0.1 + 0.2 + 0.3) / 3.0));
    CHECK(report["methods"][1]["dai_mean"]["1"].get<double>() ==
          doctest::Approx((0.2 + 0.1 + 0.5) / 3.0));
    CHECK(report["methods"][0]["fidelity_mse_mean"].get<double>() == doctest::Approx(0.01));

    CHECK(report["cases"].size() == 3);  // failed c4 drops out of the common set
    CHECK(report["dai_ranks"]["by_case"]["c1"] == nlohmann::json({1, 2}));
    CHECK(report["dai_ranks"]["by_case"]["c2"] == nlohmann::json({2, 1}));
    CHECK(report["dai_ranks"]["by_case"]["c3"] == nlohmann::json({1, 2}));

    // two agreements (rho 1) and one full reversal (rho -1) over two methods
    CHECK(report["spearman_dai_vs_human"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(report["spearman_cases"] == 3);

    std::filesystem::remove(csv);
    std::filesystem::remove_all(a.parent_path());
}

TEST_CASE("evaluation scores edits through an injected transport") {
    std::filesystem::path a = fresh_dir("bench_gscore/alpha");
    RunRecord ok = synthetic_record("c1", 0.1);
    std::filesystem::path src_png = a / "c1.source.png";
    std::filesystem::path edt_png = a / "c1.edited.png";
    {
        std::ofstream s(src_png, std::ios::binary), e(edt_png, std::ios::binary);
        s << "SRCBYTES";
        e << "EDITBYTES";
    }
    ok.outputs = {{"source_png", src_png.string()}, {"edited_png", edt_png.string()}};
    write_record(a, ok);
    RunRecord broken = synthetic_record("c2", 0.2);
    broken.outputs = {{"source_png", (a / "nope.png").string()},
                      {"edited_png", (a / "nope2.png").string()}};
    write_record(a, broken);

    auto mock = std::make_shared<MockTransport>();
    mock->enqueue({200, "score: 8"});
    EvaluateOptions opt;
    opt.gscore = true;
    opt.gscore_config.model = "judge";
    opt.gscore_config.backoff_initial_ms = 1;
    opt.gscore_prompt = "rate it";
    opt.transport = mock;

    nlohmann::json report = evaluate_records({a}, opt);
    const nlohmann::json& per_case = report["methods"][0]["gscore"];
    CHECK(per_case["c1"]["score"] == 8.0);
    CHECK(per_case["c2"].contains("error"));  // missing file reported, not fatal
    CHECK(report["methods"][0]["gscore_mean"] == 8.0);
    CHECK(mock->request_count() == 1);

    nlohmann::json body = nlohmann::json::parse(mock->request_bodies()[0]);
    CHECK(body["images"][0] == base64_encode("SRCBYTES"));
    CHECK(body["images"][1] == base64_encode("EDITBYTES"));
    CHECK(body["prompt"] == "rate it");

    EvaluateOptions no_transport;
    no_transport.gscore = true;
    CHECK_THROWS_AS(evaluate_records({a}, no_transport), std::runtime_error);
    std::filesystem::remove_all(a.parent_path());
}

TEST_CASE("evaluation of nothing is an empty report") {
    nlohmann::json report = evaluate_records({}, EvaluateOptions{});
    CHECK(report["methods"].empty());
    CHECK(report["cases"].empty());
    CHECK_FALSE(report.contains("dai_ranks"));
    CHECK_FALSE(report.contains("spearman_dai_vs_human"));
}

TEST_CASE("human csv must cover every method") {
    std::filesystem::path a = fresh_dir("bench_csv/m1");
    std::filesystem::path b = fresh_dir("bench_csv/m2");
    write_record(a, synthetic_record("c1", 0.1));
    write_record(b, synthetic_record("c1", 0.2));

    std::filesystem::path csv = std::filesystem::temp_directory_path() / "bench_bad_human.csv";
    {
        std::ofstream out(csv);
        out << "case_id,m1,other\nc1,1,2\n";
    }
    EvaluateOptions opt;
    opt.human_ranks_csv = csv;
    CHECK_THROWS_WITH_AS(evaluate_records({a, b}, opt), doctest::Contains("lacks method"),
                         std::runtime_error);

    {
        std::ofstream out(csv);
        out << "case_id,m1,m2\nzz,1,2\n";
    }
    CHECK_THROWS_WITH_AS(evaluate_records({a, b}, opt), doctest::Contains("no overlap"),
                         std::runtime_error);
    std::filesystem::remove(csv);
    std::filesystem::remove_all(a.parent_path());
}

}  // TEST_SUITE
