// Acceptance gate: ten end-to-end criteria, one PASS/FAIL line each.
// Exits nonzero if any criterion fails. Run via ctest or directly.

#include <anb/cli.hpp>
#include <anb/experiment.hpp>
#include <anb/fixtures.hpp>
#include <anb/metrics.hpp>
#include <anb/model_io.hpp>
#include <anb/noise.hpp>
#include <anb/report.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;

int g_failures = 0;
fs::path g_dir;

void criterion(int num, const std::string& label,
               const std::function<std::string()>& body) {
    std::string detail;
    try {
        detail = body();
    } catch (const std::exception& e) {
        detail = std::string("unexpected exception: ") + e.what();
    }
    if (detail.empty()) {
        std::printf("[PASS] %2d %s\n", num, label.c_str());
    } else {
        std::printf("[FAIL] %2d %s: %s\n", num, label.c_str(), detail.c_str());
        ++g_failures;
    }
    std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.is_open()) throw std::runtime_error("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = anb::dispatch(args, out, err);
    if (code != 0)
        std::fprintf(stderr, "  cli exited %d: %s\n", code, err.str().c_str());
    return code;
}

std::string fx(const char* name) { return (g_dir / name).string(); }

std::vector<std::string> fixture_model_names() {
    return {"tiny_mlp.anb", "tiny_cnn_nobn.anb", "tiny_cnn.anb",
            "tiny_resnet.anb"};
}

// One model whose single dense group holds the given values.
anb::ModelGraph group_of(const std::vector<float>& values) {
    anb::ModelGraph m;
    m.name = "synthetic";
    m.input_shape = {1};
    m.class_count = 2;
    anb::Node d;
    d.id = 0;
    d.kind = anb::LayerKind::Dense;
    d.params.emplace(
        "weight",
        anb::Tensor({static_cast<std::int64_t>(values.size() / 2), 2}, values));
    m.nodes.push_back(std::move(d));
    return m;
}

// -- criteria --------------------------------------------------------------

std::string c1_snr_mapping() {
    const std::vector<std::pair<double, double>> exact{
        {1, 100}, {10, 10}, {20, 5}, {40, 2.5}, {100, 1}};
    for (const auto& [p, snr] : exact)
        if (anb::snr_of(p) != snr)
            return "snr_of(" + std::to_string(p) + ") != " +
                   std::to_string(snr);
    if (anb::snr_display(60.0) != "1.67")
        return "snr_display(60) gave '" + anb::snr_display(60.0) + "'";
    return "";
}

std::string c2_kernel_oracles() {
    anb::PhiloxRng rng(4242, 0);
    const auto shape_dim = [&](int lo, int hi) {
        return static_cast<std::int64_t>(
            lo + static_cast<int>(rng.below(
                     static_cast<std::uint64_t>(hi - lo + 1))));
    };
    double worst = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        // conv2d
        {
            const std::int64_t n = shape_dim(1, 3), ci = shape_dim(1, 4),
                               co = shape_dim(1, 4);
            const std::int64_t k = rng.below(2) ? 3 : 1;
            const int stride = static_cast<int>(1 + rng.below(2));
            const int pad = static_cast<int>(rng.below(2));
            const std::int64_t h = k + shape_dim(0, 7), w = k + shape_dim(0, 7);
            const auto in = oracle::random_tensor({n, ci, h, w}, rng);
            const auto kern = oracle::random_tensor({co, ci, k, k}, rng);
            const auto bias = oracle::random_tensor({co}, rng);
            const bool use_bias = rng.below(2) != 0;
            const auto got = anb::conv2d(in, kern, use_bias ? &bias : nullptr,
                                         stride, pad);
            const auto want = oracle::conv2d(in, kern,
                                             use_bias ? &bias : nullptr,
                                             stride, pad);
            worst = std::max(worst, oracle::rel_diff(got, want));
        }
        // dense
        {
            const std::int64_t n = shape_dim(1, 5), f = shape_dim(1, 30),
                               g = shape_dim(1, 8);
            const auto in = oracle::random_tensor({n, f}, rng);
            const auto wt = oracle::random_tensor({f, g}, rng);
            const auto bias = oracle::random_tensor({g}, rng);
            const bool use_bias = rng.below(2) != 0;
            worst = std::max(
                worst,
                oracle::rel_diff(
                    anb::dense(in, wt, use_bias ? &bias : nullptr),
                    oracle::dense(in, wt, use_bias ? &bias : nullptr)));
        }
        // batch norm
        {
            const std::int64_t n = shape_dim(1, 3), c = shape_dim(1, 6),
                               h = shape_dim(1, 6), w = shape_dim(1, 6);
            const auto in = oracle::random_tensor({n, c, h, w}, rng);
            const auto gamma = oracle::random_tensor({c}, rng);
            const auto beta = oracle::random_tensor({c}, rng);
            const auto mean = oracle::random_tensor({c}, rng);
            auto var = oracle::random_tensor({c}, rng);
            for (float& v : var.data()) v = 0.01f + std::abs(v);
            worst = std::max(
                worst,
                oracle::rel_diff(
                    anb::batch_norm_inference(in, gamma, beta, mean, var,
                                              1e-5f),
                    oracle::batch_norm(in, gamma, beta, mean, var, 1e-5f)));
        }
        // max pool
        {
            const int k = static_cast<int>(2 + rng.below(2));
            const int stride = static_cast<int>(1 + rng.below(3));
            const std::int64_t n = shape_dim(1, 3), c = shape_dim(1, 4);
            const std::int64_t h = k + shape_dim(0, 7), w = k + shape_dim(0, 7);
            const auto in = oracle::random_tensor({n, c, h, w}, rng);
            worst = std::max(worst,
                             oracle::rel_diff(anb::max_pool2d(in, k, stride),
                                              oracle::max_pool2d(in, k, stride)));
        }
    }
    if (worst > 1e-5)
        return "worst relative error " + std::to_string(worst) + " > 1e-5";
    return "";
}

std::string c3_zero_noise_identity() {
    for (const auto& name : fixture_model_names()) {
        auto m = anb::load_model(g_dir / name);
        const auto before = anb::param_hash(m);
        for (const auto& g : anb::layer_groups(m))
            anb::perturb_group(m, g, anb::NoiseSpec{0.0, 99, 3}, 1);
        if (anb::param_hash(m) != before)
            return name + " changed under p = 0";
    }

    anb::ExperimentConfig cfg;
    cfg.model_paths = {fx("tiny_cnn.anb")};
    cfg.dataset_path = fx("stripes_test.and");
    cfg.design = anb::Design::SingleLayerSweep;
    cfg.powers = {0};
    cfg.trials = 2;
    cfg.workers = 1;
    const auto res = anb::run_experiment(cfg);
    for (const auto& r : res.rows)
        if (r.normalized_accuracy != 1.0)
            return "row " + r.plan + " trial " + std::to_string(r.trial) +
                   " has A_i " + std::to_string(r.normalized_accuracy);
    for (const auto& s : res.summaries)
        if (s.a_avr != 1.0)
            return "summary a_avr " + std::to_string(s.a_avr) + " at p = 0";
    return "";
}

std::string c4_determinism() {
    const fs::path cfg_path = g_dir / "determinism.cfg";
    const fs::path d1 = g_dir / "det1", d2 = g_dir / "det2",
                   d3 = g_dir / "det3";
    {
        std::ofstream cfg(cfg_path);
        cfg << "model = " << fx("tiny_cnn.anb") << "\n"
            << "dataset = " << fx("stripes_test.and") << "\n"
            << "design = single_layer_sweep\n"
            << "powers = 1, 10\n"
            << "seed = 11\n"
            << "trials = 2\n"
            << "workers = 1\n";
    }
    if (cli({"run", "--config", cfg_path.string(), "--out", d1.string()}) != 0)
        return "first run failed";
    if (cli({"run", "--config", cfg_path.string(), "--out", d2.string()}) != 0)
        return "second run failed";
    if (cli({"run", "--config", cfg_path.string(), "--out", d3.string(),
             "--workers", "3"}) != 0)
        return "parallel run failed";
    if (slurp(d1 / "results.csv") != slurp(d2 / "results.csv"))
        return "results.csv differs between identical runs";
    if (slurp(d1 / "results.csv") != slurp(d3 / "results.csv"))
        return "results.csv differs at --workers 3";
    if (slurp(d1 / "summary.csv") != slurp(d3 / "summary.csv"))
        return "summary.csv differs at --workers 3";

    const fs::path r1 = g_dir / "rep1", r2 = g_dir / "rep2";
    if (cli({"report", "--results", d1.string(), "--out", r1.string()}) != 0)
        return "first report failed";
    if (cli({"report", "--results", d3.string(), "--out", r2.string()}) != 0)
        return "second report failed";
    const char* chart = "chart_single_layer_tiny_cnn.svg";
    if (slurp(r1 / chart) != slurp(r2 / chart))
        return "SVG differs between reruns";
    if (slurp(r1 / "summary.txt") != slurp(r2 / "summary.txt"))
        return "summary.txt differs between reruns";
    return "";
}

std::string c5_injection_locality() {
    for (const auto& name : fixture_model_names()) {
        const auto clean = anb::load_model(g_dir / name);
        const auto groups = anb::layer_groups(clean);
        std::vector<std::uint64_t> before;
        for (const auto& g : groups)
            before.push_back(anb::group_hash(clean, g));
        for (std::size_t i = 0; i < groups.size(); ++i) {
            auto m = clean.clone();
            anb::perturb_group(m, groups[i], anb::NoiseSpec{60.0, 7, 1}, 0);
            for (std::size_t j = 0; j < groups.size(); ++j) {
                const auto h = anb::group_hash(m, groups[j]);
                if (j == i && h == before[j])
                    return name + ": group " + std::to_string(j + 1) +
                           " unchanged by its own injection";
                if (j != i && h != before[j])
                    return name + ": injecting group " + std::to_string(i + 1) +
                           " changed group " + std::to_string(j + 1);
            }
        }
    }
    return "";
}

std::string c6_prefix_all_equivalence() {
    anb::ExperimentConfig cfg;
    cfg.model_paths = {fx("tiny_cnn.anb")};
    cfg.dataset_path = fx("stripes_test.and");
    cfg.powers = {20};
    cfg.seed = 3;
    cfg.trials = 2;
    cfg.workers = 1;

    cfg.design = anb::Design::PrefixSweep;
    const auto rp = anb::run_experiment(cfg);
    cfg.design = anb::Design::AllLayers;
    const auto ra = anb::run_experiment(cfg);

    const int n = static_cast<int>(
        anb::layer_groups(anb::load_model(fx("tiny_cnn.anb"))).size());
    for (int t = 0; t < cfg.trials; ++t) {
        double prefix_acc = -1, all_acc = -2;
        for (const auto& r : rp.rows)
            if (r.plan == "prefix:" + std::to_string(n) && r.trial == t)
                prefix_acc = r.accuracy;
        for (const auto& r : ra.rows)
            if (r.plan == "all" && r.trial == t) all_acc = r.accuracy;
        if (prefix_acc != all_acc)
            return "trial " + std::to_string(t) + ": prefix " +
                   std::to_string(prefix_acc) + " vs all " +
                   std::to_string(all_acc);
    }
    return "";
}

std::string c7_sigma_oracle() {
    const auto check = [](const anb::ModelGraph& m,
                          const std::string& label) -> std::string {
        for (const auto& g : anb::layer_groups(m)) {
            std::vector<std::span<const float>> parts;
            for (const auto& [node_id, pname] : g.members)
                parts.push_back(m.param(node_id, pname).data());
            const double ref = oracle::two_pass_std(parts);
            const double got = anb::layer_sigma(m, g).sigma_w;
            if (std::abs(got - ref) > 1e-6 * std::max(1.0, ref))
                return label + " group " + std::to_string(g.index) + ": " +
                       std::to_string(got) + " vs " + std::to_string(ref);
        }
        return "";
    };
    for (const auto& name : fixture_model_names()) {
        const auto err = check(anb::load_model(g_dir / name), name);
        if (!err.empty()) return err;
    }
    anb::PhiloxRng rng(606, 0);
    for (int i = 0; i < 100; ++i) {
        const std::size_t half =
            1 + static_cast<std::size_t>(rng.below(400));
        std::vector<float> values(half * 2);
        const double scale = rng.uniform(0.01, 10.0);
        for (float& v : values)
            v = static_cast<float>(scale * rng.normal());
        const auto err = check(group_of(values),
                               "random tensor " + std::to_string(i));
        if (!err.empty()) return err;
    }
    return "";
}

std::string c8_noise_statistics() {
    anb::PhiloxRng rng(2718, 0);
    std::vector<float> values(1000000);
    for (float& v : values) v = static_cast<float>(0.7 * rng.normal());
    auto m = group_of(values);
    const auto group = anb::layer_groups(m)[0];
    const double sigma_w = anb::layer_sigma(m, group).sigma_w;

    anb::perturb_group(m, group, anb::NoiseSpec{100.0, 161803, 1}, 0);
    const auto& after = m.param(0, "weight");
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        sum += static_cast<double>(after[i]) - values[i];
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = (static_cast<double>(after[i]) - values[i]) - mean;
        sq += d * d;
    }
    const double std_dev = std::sqrt(sq / static_cast<double>(values.size()));

    if (std::abs(std_dev - sigma_w) > 0.01 * sigma_w)
        return "noise std " + std::to_string(std_dev) + " vs sigma_w " +
               std::to_string(sigma_w);
    if (std::abs(mean) > 3.0 * sigma_w / 1000.0)
        return "noise mean " + std::to_string(mean) + " exceeds 3*sigma_w/1000";
    return "";
}

std::string c9_trend_reproduction() {
    const auto model = anb::load_model(fx("tiny_cnn.anb"));
    const auto ds = anb::load_dataset(fx("stripes_test.and"));
    const double a_o = anb::evaluate_accuracy(model, ds);
    if (a_o < 0.9)
        return "trained CNN scores " + std::to_string(a_o) + " < 0.9";

    // (a) mean accuracy non-increasing in p, violations bounded by 2 points.
    anb::ExperimentConfig cfg;
    cfg.model_paths = {fx("tiny_cnn.anb")};
    cfg.dataset_path = fx("stripes_test.and");
    cfg.design = anb::Design::AllLayers;
    cfg.powers = {0, 1, 2, 5, 10};
    cfg.seed = 20;
    cfg.trials = 20;
    cfg.workers = 1;
    const auto res = anb::run_experiment(cfg);
    std::vector<double> mean_acc;
    for (double p : cfg.powers) {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : res.rows)
            if (r.plan == "all" && r.power_percent == p) {
                sum += r.accuracy;
                ++count;
            }
        if (count != cfg.trials)
            return "expected " + std::to_string(cfg.trials) + " rows at p = " +
                   std::to_string(p) + ", found " + std::to_string(count);
        mean_acc.push_back(sum / count);
    }
    for (std::size_t i = 1; i < mean_acc.size(); ++i)
        if (mean_acc[i] > mean_acc[i - 1] + 0.02)
            return "mean accuracy rises " + std::to_string(mean_acc[i - 1]) +
                   " -> " + std::to_string(mean_acc[i]) + " between powers " +
                   std::to_string(cfg.powers[i - 1]) + " and " +
                   std::to_string(cfg.powers[i]);

    // (b) full-power noise visibly degrades the layer average.
    cfg.design = anb::Design::SingleLayerSweep;
    cfg.powers = {100};
    const auto full = anb::run_experiment(cfg);
    if (full.summaries.size() != 1)
        return "expected one summary row at p = 100";
    if (!(full.summaries[0].a_avr < 0.9))
        return "A_avr at p = 100 is " +
               std::to_string(full.summaries[0].a_avr) + ", not < 0.9";

    // (c) different seeds give different perturbed weights.
    auto m1 = model.clone();
    auto m2 = model.clone();
    const auto groups = anb::layer_groups(m1);
    anb::perturb_group(m1, groups[0], anb::NoiseSpec{10.0, 1, 1}, 0);
    anb::perturb_group(m2, groups[0], anb::NoiseSpec{10.0, 2, 1}, 0);
    if (anb::param_hash(m1) == anb::param_hash(m2))
        return "seeds 1 and 2 produced identical perturbed weights";
    return "";
}

std::string c10_metric_arithmetic() {
    if (anb::normalized_accuracy(0.45, 0.90) != 0.5)
        return "0.45/0.90 != 0.5";
    if (anb::average_normalized_accuracy({1.0, 0.5}, 2) != 0.75)
        return "mean[1.0, 0.5] != 0.75";
    return "";
}

}  // namespace

int main() {
    g_dir = fs::temp_directory_path() /
            ("anb_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(g_dir);
    std::printf("fixtures: %s\n", g_dir.string().c_str());
    anb::fixtures::make_fixtures(g_dir);

    criterion(1, "SNR mapping p -> 100/p", c1_snr_mapping);
    criterion(2, "kernels match naive oracles on randomized shapes",
              c2_kernel_oracles);
    criterion(3, "zero noise is a bit-exact identity", c3_zero_noise_identity);
    criterion(4, "reruns are byte-identical, workers included",
              c4_determinism);
    criterion(5, "single-layer injection only touches its group",
              c5_injection_locality);
    criterion(6, "full prefix equals all-layers trial for trial",
              c6_prefix_all_equivalence);
    criterion(7, "layer sigma matches the two-pass oracle", c7_sigma_oracle);
    criterion(8, "injected noise has the commanded statistics",
              c8_noise_statistics);
    criterion(9, "trained CNN reproduces the degradation trends",
              c9_trend_reproduction);
    criterion(10, "metric arithmetic reproduces hand values",
              c10_metric_arithmetic);

    if (g_failures != 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 10 criteria passed\n");
    return 0;
}
