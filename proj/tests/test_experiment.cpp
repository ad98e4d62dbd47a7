#include <catch2/catch_amalgamated.hpp>

#include <anb/experiment.hpp>
#include <anb/fixtures.hpp>
#include <anb/report.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fixture_cache.hpp"

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.is_open());
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    REQUIRE(out.is_open());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

anb::ExperimentConfig mlp_config(anb::Design design,
                                 std::vector<double> powers) {
    anb::ExperimentConfig cfg;
    cfg.model_paths = {(testfx::fixture_dir() / "tiny_mlp.anb").string()};
    cfg.dataset_path = (testfx::fixture_dir() / "onehot.and").string();
    cfg.design = design;
    cfg.powers = std::move(powers);
    cfg.seed = 99;
    cfg.trials = 3;
    cfg.workers = 1;
    return cfg;
}

const anb::ResultRow& find_row(const std::vector<anb::ResultRow>& rows,
                               const std::string& plan, double power,
                               int trial) {
    for (const auto& r : rows)
        if (r.plan == plan && r.power_percent == power && r.trial == trial)
            return r;
    FAIL("no row " + plan + " p=" + std::to_string(power) +
         " t=" + std::to_string(trial));
    return rows.front();
}

const std::string kResultsHeader =
    "model,design,plan,layer,power_percent,trial,accuracy,"
    "normalized_accuracy\n";
const std::string kSummaryHeader =
    "model,power_percent,a_avr,trials,seed,version\n";

}  // namespace

TEST_CASE("a single-layer sweep produces the full factorial of rows") {
    const auto cfg = mlp_config(anb::Design::SingleLayerSweep, {1, 10, 20});
    const auto res = anb::run_experiment(cfg);

    // 1 baseline row + 2 groups x 3 powers x 3 trials.
    CHECK(res.rows.size() == 1 + 2 * 3 * 3);
    CHECK(res.summaries.size() == 3);
    CHECK(res.seed == 99);
    CHECK(res.trials == 3);

    const auto& base = res.rows.front();  // sorts first: layer 0, power 0
    CHECK(base.plan == "baseline");
    CHECK(base.accuracy == 1.0);
    CHECK(base.normalized_accuracy == 1.0);

    for (const auto& r : res.rows) {
        CHECK(r.model == "tiny_mlp");
        CHECK(r.design == "single_layer_sweep");
        if (r.plan == "baseline") continue;
        CHECK((r.layer == 1 || r.layer == 2));
        CHECK(r.plan == "single:" + std::to_string(r.layer));
        CHECK((r.trial >= 0 && r.trial < 3));
        CHECK(r.normalized_accuracy == r.accuracy / base.accuracy);
    }
    for (const auto& s : res.summaries) {
        CHECK(s.model == "tiny_mlp");
        CHECK(s.trials == 3);
        CHECK(s.seed == 99);
        CHECK(s.version == 1);
    }
}

TEST_CASE("zero power reproduces the baseline exactly") {
    const auto res =
        anb::run_experiment(mlp_config(anb::Design::AllLayers, {0}));
    for (const auto& r : res.rows) {
        CHECK(r.accuracy == 1.0);
        CHECK(r.normalized_accuracy == 1.0);
    }
    REQUIRE(res.summaries.size() == 1);
    CHECK(res.summaries[0].a_avr == 1.0);
}

TEST_CASE("a full prefix equals the all-layers plan trial for trial") {
    const std::vector<double> powers{20, 60};
    const auto rp =
        anb::run_experiment(mlp_config(anb::Design::PrefixSweep, powers));
    const auto ra =
        anb::run_experiment(mlp_config(anb::Design::AllLayers, powers));

    for (double p : powers)
        for (int t = 0; t < 3; ++t) {
            const auto& full = find_row(rp.rows, "prefix:2", p, t);
            const auto& all = find_row(ra.rows, "all", p, t);
            CHECK(full.accuracy == all.accuracy);
            CHECK(full.normalized_accuracy == all.normalized_accuracy);
        }
}

TEST_CASE("identical configs give byte-identical output files") {
    const auto cfg = mlp_config(anb::Design::SingleLayerSweep, {1, 10});
    const auto d1 = testfx::fresh_dir("exp_rerun");
    const auto d2 = testfx::fresh_dir("exp_rerun");
    anb::write_results(anb::run_experiment(cfg), d1);
    anb::write_results(anb::run_experiment(cfg), d2);
    CHECK(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));
    CHECK(slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv"));

    // Worker count must not leak into the results.
    auto parallel = cfg;
    parallel.workers = 3;
    const auto d3 = testfx::fresh_dir("exp_rerun");
    anb::write_results(anb::run_experiment(parallel), d3);
    CHECK(slurp(d1 / "results.csv") == slurp(d3 / "results.csv"));
    CHECK(slurp(d1 / "summary.csv") == slurp(d3 / "summary.csv"));
}

TEST_CASE("results survive the write/read round-trip") {
    const auto cfg = mlp_config(anb::Design::SingleLayerSweep, {10, 40});
    const auto res = anb::run_experiment(cfg);
    const auto dir = testfx::fresh_dir("exp_roundtrip");
    anb::write_results(res, dir);
    const auto back = anb::read_results(dir);
    CHECK(back == res);
    CHECK(back.design == anb::Design::SingleLayerSweep);
}

TEST_CASE("a model comparison sweeps every model against one dataset") {
    anb::ExperimentConfig cfg;
    cfg.model_paths = {(testfx::fixture_dir() / "tiny_cnn_nobn.anb").string(),
                       (testfx::fixture_dir() / "tiny_cnn.anb").string()};
    cfg.dataset_path = (testfx::fixture_dir() / "stripes_test.and").string();
    cfg.design = anb::Design::ModelComparison;
    cfg.powers = {10};
    cfg.seed = 5;
    cfg.trials = 2;
    cfg.workers = 1;

    const auto res = anb::run_experiment(cfg);
    // nobn has 3 groups, the bn variant 5; plus one baseline row each.
    CHECK(res.rows.size() == (1 + 3 * 2) + (1 + 5 * 2));
    REQUIRE(res.summaries.size() == 2);
    CHECK(res.summaries[0].model == "tiny_cnn");
    CHECK(res.summaries[1].model == "tiny_cnn_nobn");

    // Both variants share clean predictions, so the baselines agree.
    const auto& b1 = find_row(res.rows, "baseline", 0, 0);
    for (const auto& r : res.rows)
        if (r.plan == "baseline") CHECK(r.accuracy == b1.accuracy);
}

TEST_CASE("the progress callback covers every job exactly once") {
    auto cfg = mlp_config(anb::Design::SingleLayerSweep, {1, 10, 20});
    std::vector<std::pair<std::size_t, std::size_t>> calls;
    anb::run_experiment(cfg, [&](std::size_t done, std::size_t total) {
        calls.emplace_back(done, total);
    });
    REQUIRE(calls.size() == 2 * 3 * 3);
    for (std::size_t i = 0; i < calls.size(); ++i) {
        CHECK(calls[i].first == i + 1);
        CHECK(calls[i].second == calls.size());
    }
}

TEST_CASE("a mid-run failure leaves an incomplete marker and rethrows") {
    auto cfg = mlp_config(anb::Design::SingleLayerSweep, {1, 10});
    const auto dir = testfx::fresh_dir("exp_abort");
    cfg.output_dir = dir.string();

    struct Boom {};
    std::size_t seen = 0;
    CHECK_THROWS_AS(anb::run_experiment(cfg,
                                        [&](std::size_t, std::size_t) {
                                            if (++seen == 5) throw Boom{};
                                        }),
                    Boom);

    const auto marker = dir / "results.incomplete.csv";
    REQUIRE(std::filesystem::exists(marker));
    CHECK(!std::filesystem::exists(dir / "results.csv"));
    const auto text = slurp(marker);
    CHECK(text.rfind(kResultsHeader, 0) == 0);
    CHECK(text.find("baseline") != std::string::npos);

    // The marker shadows the directory until a complete run replaces it.
    CHECK_THROWS_AS(anb::read_results(dir), anb::IncompleteResultError);
    anb::write_results(anb::run_experiment(cfg), dir);
    CHECK(!std::filesystem::exists(marker));
    CHECK(anb::read_results(dir).rows.size() == 1 + 2 * 2 * 3);
}

TEST_CASE("a zero-accuracy baseline stops the experiment") {
    const auto dir = testfx::fresh_dir("exp_zero");

    anb::ModelGraph m;
    m.name = "always_one";
    m.input_shape = {4, 1, 1};
    m.class_count = 4;
    anb::Node d;
    d.id = 0;
    d.kind = anb::LayerKind::Dense;
    d.params.emplace("weight", anb::Tensor({4, 4}, [] {
                         std::vector<float> w(16, 0.0f);
                         w[1] = 1.0f;  // anything nonzero, prediction fixed
                         return w;
                     }()));
    d.params.emplace("bias", anb::Tensor({4}, {0.0f, 5.0f, 0.0f, 0.0f}));
    m.nodes.push_back(std::move(d));
    anb::save_model(m, dir / "always_one.anb");

    anb::Dataset never_one;
    never_one.inputs = anb::Tensor({2, 4, 1, 1});
    never_one.labels = {0, 2};
    never_one.class_count = 4;
    anb::save_dataset(never_one, dir / "never_one.and");

    anb::ExperimentConfig cfg;
    cfg.model_paths = {(dir / "always_one.anb").string()};
    cfg.dataset_path = (dir / "never_one.and").string();
    cfg.design = anb::Design::SingleLayerSweep;
    cfg.powers = {10};
    cfg.workers = 1;
    CHECK_THROWS_AS(anb::run_experiment(cfg), anb::UndefinedBaselineError);
}

TEST_CASE("config validation rejects nonsense") {
    auto cfg = mlp_config(anb::Design::AllLayers, {10});
    cfg.model_paths.clear();
    CHECK_THROWS_AS(cfg.validate(), anb::InvalidArgumentError);

    cfg = mlp_config(anb::Design::AllLayers, {10, 150});
    CHECK_THROWS_AS(cfg.validate(), anb::InvalidArgumentError);

    cfg = mlp_config(anb::Design::AllLayers, {});
    CHECK_THROWS_AS(cfg.validate(), anb::InvalidArgumentError);

    cfg = mlp_config(anb::Design::AllLayers, {10});
    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), anb::InvalidArgumentError);

    cfg = mlp_config(anb::Design::AllLayers, {10});
    cfg.workers = -1;
    CHECK_THROWS_AS(cfg.validate(), anb::InvalidArgumentError);

    CHECK(anb::design_from_name("prefix_sweep") == anb::Design::PrefixSweep);
    CHECK_THROWS_AS(anb::design_from_name("diagonal"),
                    anb::InvalidArgumentError);
}

TEST_CASE("check_result_complete spots holes in a result") {
    const auto cfg = mlp_config(anb::Design::SingleLayerSweep, {1, 10});
    const auto res = anb::run_experiment(cfg);
    CHECK_NOTHROW(anb::check_result_complete(res));

    using Catch::Matchers::ContainsSubstring;
    auto drop = [&](auto pred) {
        auto copy = res;
        copy.rows.erase(
            std::find_if(copy.rows.begin(), copy.rows.end(), pred));
        return copy;
    };

    const auto no_trial = drop([](const anb::ResultRow& r) {
        return r.plan == "single:2" && r.power_percent == 10 && r.trial == 1;
    });
    CHECK_THROWS_WITH(anb::check_result_complete(no_trial),
                      ContainsSubstring("missing trial 1"));

    const auto no_baseline =
        drop([](const anb::ResultRow& r) { return r.plan == "baseline"; });
    CHECK_THROWS_WITH(anb::check_result_complete(no_baseline),
                      ContainsSubstring("no baseline row"));

    auto stray = res;
    auto odd = res.rows.back();
    odd.plan = "prefix:1";
    odd.layer = 1;
    stray.rows.push_back(odd);
    CHECK_THROWS_WITH(anb::check_result_complete(stray),
                      ContainsSubstring("stray plan"));

    auto no_summary = res;
    no_summary.summaries.pop_back();
    CHECK_THROWS_WITH(anb::check_result_complete(no_summary),
                      ContainsSubstring("summary is missing"));
}

TEST_CASE("each design renders its own chart set") {
    const auto single =
        anb::run_experiment(mlp_config(anb::Design::SingleLayerSweep, {1, 10}));
    const auto d1 = testfx::fresh_dir("report_files");
    anb::render_report(single, d1);
    CHECK(std::filesystem::exists(d1 / "chart_single_layer_tiny_mlp.svg"));
    CHECK(std::filesystem::exists(d1 / "summary.txt"));

    const auto prefix =
        anb::run_experiment(mlp_config(anb::Design::PrefixSweep, {1, 10}));
    const auto d2 = testfx::fresh_dir("report_files");
    anb::render_report(prefix, d2);
    CHECK(std::filesystem::exists(d2 / "chart_prefix_sweep_tiny_mlp.svg"));

    const auto summary_text = slurp(d1 / "summary.txt");
    CHECK(summary_text.find("A_avr by model and noise power (seed 99, "
                            "3 trials)") != std::string::npos);
    CHECK(summary_text.find("tiny_mlp") != std::string::npos);
}

TEST_CASE("read_results rejects malformed directories") {
    using Catch::Matchers::ContainsSubstring;

    const std::string good_rows =
        "m,all_layers,baseline,0,0,0,1,1\n"
        "m,all_layers,all,0,10,0,0.5,0.5\n";
    const std::string good_summary = "m,10,0.5,1,0,1\n";

    {
        const auto dir = testfx::fresh_dir("read_bad");
        spit(dir / "results.csv",
             "model,design,layer,power_percent,trial,accuracy,"
             "normalized_accuracy\n" +
                 good_rows);
        spit(dir / "summary.csv", kSummaryHeader + good_summary);
        CHECK_THROWS_WITH(anb::read_results(dir),
                          ContainsSubstring("missing column 'plan'"));
    }
    {
        const auto dir = testfx::fresh_dir("read_bad");
        spit(dir / "results.csv", kResultsHeader + "m,all_layers,all,0,10\n");
        spit(dir / "summary.csv", kSummaryHeader + good_summary);
        CHECK_THROWS_WITH(anb::read_results(dir),
                          ContainsSubstring("expected 8"));
    }
    {
        const auto dir = testfx::fresh_dir("read_bad");
        spit(dir / "results.csv", kResultsHeader + good_rows);
        spit(dir / "summary.csv", kSummaryHeader + "m,10,0.5,1,0,2\n");
        CHECK_THROWS_AS(anb::read_results(dir), anb::VersionError);
    }
    {
        const auto dir = testfx::fresh_dir("read_bad");
        spit(dir / "results.csv",
             kResultsHeader + good_rows +
                 "m,prefix_sweep,prefix:1,1,10,0,0.5,0.5\n");
        spit(dir / "summary.csv", kSummaryHeader + good_summary);
        CHECK_THROWS_WITH(anb::read_results(dir),
                          ContainsSubstring("mixes designs"));
    }
    {
        const auto dir = testfx::fresh_dir("read_bad");
        spit(dir / "results.csv", kResultsHeader);
        spit(dir / "summary.csv", kSummaryHeader + good_summary);
        CHECK_THROWS_AS(anb::read_results(dir), anb::IncompleteResultError);
    }
    {
        const auto dir = testfx::fresh_dir("read_bad");
        spit(dir / "results.csv", kResultsHeader + good_rows);
        spit(dir / "summary.csv", kSummaryHeader + good_summary);
        spit(dir / "results.incomplete.csv", kResultsHeader);
        CHECK_THROWS_AS(anb::read_results(dir), anb::IncompleteResultError);
    }
    {
        const auto dir = testfx::fresh_dir("read_bad");
        spit(dir / "results.csv", kResultsHeader + good_rows);
        spit(dir / "summary.csv",
             kSummaryHeader + good_summary + "m,20,0.4,1,7,1\n");
        CHECK_THROWS_WITH(anb::read_results(dir),
                          ContainsSubstring("mixes seeds"));
    }
}
