#pragma once

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anb/experiment.hpp"
#include "anb/fixtures.hpp"
#include "anb/report.hpp"

namespace anb {

namespace detail {

inline std::vector<double> parse_power_list(const std::string& text) {
    std::vector<double> powers;
    for (const std::string& field : split_csv_line(text)) {
        std::string trimmed = field;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        trimmed.erase(trimmed.find_last_not_of(" \t") + 1);
        if (trimmed.empty())
            throw InvalidArgumentError("empty entry in power list '" + text + "'");
        powers.push_back(parse_double_field(trimmed, "powers"));
    }
    return powers;
}

/// Line-oriented `key = value` config. Keys mirror the experiment config;
/// '#' starts a comment; `model` may repeat to compare several models.
inline void apply_config_file(const std::string& path, ExperimentConfig& cfg,
                              bool& powers_set) {
    const std::vector<unsigned char> bytes = read_file(path);
    std::string text(bytes.begin(), bytes.end());
    std::size_t lineno = 0;
    std::size_t pos = 0;
    bool model_seen = false;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line.erase(0, line.find_first_not_of(" \t\r"));
        line.erase(line.find_last_not_of(" \t\r") + 1);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        if (key.empty() || value.empty())
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": empty key or value");

        if (key == "model") {
            if (!model_seen) cfg.model_paths.clear();
            model_seen = true;
            cfg.model_paths.push_back(value);
        } else if (key == "dataset") {
            cfg.dataset_path = value;
        } else if (key == "design") {
            cfg.design = design_from_name(value);
        } else if (key == "powers") {
            cfg.powers = parse_power_list(value);
            powers_set = true;
        } else if (key == "seed") {
            cfg.seed = parse_u64_field(value, "seed");
        } else if (key == "trials") {
            cfg.trials = static_cast<int>(parse_int_field(value, "trials"));
        } else if (key == "output") {
            cfg.output_dir = value;
        } else if (key == "batch") {
            cfg.batch_size = parse_int_field(value, "batch");
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(parse_int_field(value, "workers"));
        } else {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
        }
    }
}

inline int env_workers() {
    const char* env = std::getenv("ANB_WORKERS");
    if (!env || !*env) return 0;
    try {
        return static_cast<int>(parse_int_field(env, "ANB_WORKERS"));
    } catch (const SchemaError&) {
        throw InvalidArgumentError(
            std::string("ANB_WORKERS is set to '") + env +
            "', which is not an integer");
    }
}

}  // namespace detail

/// Parse and execute one invocation. Returns 0 on success, 1 on a usage
/// error (synopsis printed), 2 on any data or model error.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
    CLI::App app{"layer-wise Gaussian weight-noise robustness bench"};
    app.name("anb");
    app.require_subcommand(1);

    std::string inspect_model;
    CLI::App* inspect =
        app.add_subcommand("inspect", "list a model's layer groups");
    inspect->add_option("model", inspect_model, ".anb model file")->required();

    std::string eval_model, eval_data;
    std::int64_t eval_batch = 32;
    CLI::App* eval = app.add_subcommand("eval", "measure clean accuracy");
    eval->add_option("--model", eval_model, ".anb model file")->required();
    eval->add_option("--data", eval_data, ".and dataset file")->required();
    eval->add_option("--batch", eval_batch, "evaluation batch size");

    std::string inject_model, inject_out;
    int inject_layer = 0;
    double inject_power = 0.0;
    std::uint64_t inject_seed = 0;
    CLI::App* inject =
        app.add_subcommand("inject", "save one noise-perturbed model");
    inject->add_option("--model", inject_model, ".anb model file")->required();
    inject->add_option("--layer", inject_layer, "layer group index (1-based)")
        ->required();
    inject->add_option("--power", inject_power, "noise power percent [0,100]")
        ->required();
    inject->add_option("--seed", inject_seed, "noise stream seed");
    inject->add_option("--out", inject_out, "output .anb path")->required();

    std::string run_config;
    std::vector<std::string> run_models;
    std::string run_data, run_design, run_powers, run_out;
    std::uint64_t run_seed = 0;
    int run_trials = 0, run_workers = -1;
    std::int64_t run_batch = 0;
    CLI::App* run = app.add_subcommand("run", "execute an experiment design");
    run->add_option("--config", run_config, "key = value config file");
    run->add_option("--model", run_models, "model path (repeat to compare)");
    run->add_option("--data", run_data, ".and dataset file");
    run->add_option("--design", run_design, "experiment design")
        ->check(CLI::IsMember({"all_layers", "single_layer_sweep",
                               "prefix_sweep", "model_comparison"}));
    run->add_option("--powers", run_powers,
                    "comma-separated power percents, e.g. 1,10,100");
    run->add_option("--seed", run_seed, "experiment seed");
    run->add_option("--trials", run_trials, "noise realizations per point");
    run->add_option("--out", run_out, "output directory");
    run->add_option("--batch", run_batch, "evaluation batch size");
    run->add_option("--workers", run_workers,
                    "worker threads (default: ANB_WORKERS, then logical cores)");

    std::string report_results, report_out;
    CLI::App* report =
        app.add_subcommand("report", "render charts from stored results");
    report->add_option("--results", report_results, "directory holding results.csv")
        ->required();
    report->add_option("--out", report_out, "directory for charts and summary")
        ->required();

    std::string fixtures_out;
    CLI::App* fixtures_cmd = app.add_subcommand(
        "make-fixtures", "regenerate the bundled models and datasets");
    fixtures_cmd->add_option("--out", fixtures_out, "output directory")
        ->required();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("anb");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()),
                  const_cast<char**>(argv.data()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (inspect->parsed()) {
            const ModelGraph model = load_model(inspect_model);
            const std::vector<LayerGroup> groups = layer_groups(model);
            out << "model " << model.name << ": " << groups.size()
                << " layer groups, " << model.class_count << " classes\n";
            out << "group  kind        params  sigma_w\n";
            for (const LayerGroup& g : groups) {
                const Node& head = model.nodes.at(
                    static_cast<std::size_t>(g.members.front().first));
                std::int64_t count = 0;
                for (const auto& [node_id, pname] : g.members)
                    count += model.param(node_id, pname).numel();
                char line[128];
                std::snprintf(line, sizeof line, "%-6d %-11s %-7lld %s\n",
                              g.index, kind_name(head.kind),
                              static_cast<long long>(count),
                              detail::format_double(
                                  layer_sigma(model, g).sigma_w)
                                  .c_str());
                out << line;
            }
        } else if (eval->parsed()) {
            const ModelGraph model = load_model(eval_model);
            const Dataset ds = load_dataset(eval_data);
            out << "accuracy "
                << detail::format_double(
                       evaluate_accuracy(model, ds, eval_batch))
                << "\n";
        } else if (inject->parsed()) {
            ModelGraph model = load_model(inject_model);
            const std::vector<LayerGroup> groups = layer_groups(model);
            if (inject_layer < 1 ||
                inject_layer > static_cast<int>(groups.size()))
                throw InvalidArgumentError(
                    "--layer " + std::to_string(inject_layer) +
                    " outside [1, " + std::to_string(groups.size()) + "]");
            const NoiseSpec spec{inject_power, inject_seed, 1};
            perturb_group(model,
                          groups[static_cast<std::size_t>(inject_layer - 1)],
                          spec, 0);
            save_model(model, inject_out);
            out << "saved " << inject_out << "\n";
        } else if (run->parsed()) {
            ExperimentConfig cfg;
            cfg.output_dir = "results";
            bool powers_set = false;
            if (!run_config.empty())
                detail::apply_config_file(run_config, cfg, powers_set);
            if (run->count("--model")) cfg.model_paths = run_models;
            if (run->count("--data")) cfg.dataset_path = run_data;
            if (run->count("--design")) cfg.design = design_from_name(run_design);
            if (run->count("--powers")) {
                cfg.powers = detail::parse_power_list(run_powers);
                powers_set = true;
            }
            if (run->count("--seed")) cfg.seed = run_seed;
            if (run->count("--trials")) cfg.trials = run_trials;
            if (run->count("--out")) cfg.output_dir = run_out;
            if (run->count("--batch")) cfg.batch_size = run_batch;
            if (run->count("--workers"))
                cfg.workers = run_workers;
            else if (cfg.workers == 0)
                cfg.workers = detail::env_workers();
            if (!powers_set) cfg.powers = default_powers(cfg.design);

            const ExperimentResult result = run_experiment(cfg);
            write_results(result, cfg.output_dir);
            out << "wrote " << cfg.output_dir << "/results.csv and "
                << cfg.output_dir << "/summary.csv\n";
        } else if (report->parsed()) {
            render_report(read_results(report_results), report_out);
            out << "wrote report to " << report_out << "\n";
        } else if (fixtures_cmd->parsed()) {
            fixtures::make_fixtures(fixtures_out);
            out << "wrote fixtures to " << fixtures_out << "\n";
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace anb
