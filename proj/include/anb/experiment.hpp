#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "anb/dataset.hpp"
#include "anb/metrics.hpp"
#include "anb/model_io.hpp"
#include "anb/noise.hpp"

namespace anb {

inline constexpr int kResultsFormatVersion = 1;

enum class Design { AllLayers, SingleLayerSweep, PrefixSweep, ModelComparison };

inline const char* design_name(Design d) {
    switch (d) {
        case Design::AllLayers: return "all_layers";
        case Design::SingleLayerSweep: return "single_layer_sweep";
        case Design::PrefixSweep: return "prefix_sweep";
        case Design::ModelComparison: return "model_comparison";
    }
    throw InvalidArgumentError("corrupt Design value");
}

inline Design design_from_name(const std::string& s) {
    for (Design d : {Design::AllLayers, Design::SingleLayerSweep,
                     Design::PrefixSweep, Design::ModelComparison})
        if (s == design_name(d)) return d;
    throw InvalidArgumentError(
        "unknown design '" + s +
        "' (expected all_layers, single_layer_sweep, prefix_sweep, or "
        "model_comparison)");
}

inline std::vector<double> default_powers(Design d) {
    if (d == Design::AllLayers) return {0, 1, 2, 5, 10};
    return {1, 10, 20, 40, 60, 100};
}

struct ExperimentConfig {
    std::vector<std::string> model_paths;
    std::string dataset_path;
    Design design = Design::AllLayers;
    std::vector<double> powers;
    std::uint64_t seed = 0;
    int trials = 5;
    std::string output_dir;
    std::int64_t batch_size = 32;
    int workers = 0;  // 0 means one per logical core

    void validate() const {
        if (model_paths.empty())
            throw InvalidArgumentError("config names no model");
        if (dataset_path.empty())
            throw InvalidArgumentError("config names no dataset");
        if (powers.empty())
            throw InvalidArgumentError("config has an empty power list");
        for (double p : powers)
            if (!(p >= 0.0) || p > 100.0)
                throw InvalidArgumentError("power " + std::to_string(p) +
                                           " outside [0, 100]");
        if (trials < 1)
            throw InvalidArgumentError("trials must be positive, got " +
                                       std::to_string(trials));
        if (batch_size < 1)
            throw InvalidArgumentError("batch_size must be positive, got " +
                                       std::to_string(batch_size));
        if (workers < 0)
            throw InvalidArgumentError("workers must be non-negative, got " +
                                       std::to_string(workers));
    }

    int effective_workers() const {
        if (workers > 0) return workers;
        const unsigned hc = std::thread::hardware_concurrency();
        return hc > 0 ? static_cast<int>(hc) : 1;
    }
};

struct ResultRow {
    std::string model;
    std::string design;
    std::string plan;  // "baseline", "all", "single:i", "prefix:L"
    int layer = 0;     // i for single, L for prefix, 0 otherwise
    double power_percent = 0.0;
    int trial = 0;
    double accuracy = 0.0;
    double normalized_accuracy = 0.0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct SummaryRow {
    std::string model;
    double power_percent = 0.0;
    double a_avr = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
    int version = kResultsFormatVersion;

    friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summaries;
    std::uint64_t seed = 0;
    int trials = 0;
    Design design = Design::AllLayers;
    int version = kResultsFormatVersion;
    std::string started_at;  // bookkeeping only, never serialized or compared

    friend bool operator==(const ExperimentResult& a, const ExperimentResult& b) {
        return a.rows == b.rows && a.summaries == b.summaries &&
               a.seed == b.seed && a.trials == b.trials &&
               a.design == b.design && a.version == b.version;
    }
};

namespace detail {

inline bool row_less(const ResultRow& a, const ResultRow& b) {
    return std::tie(a.model, a.layer, a.power_percent, a.trial, a.plan) <
           std::tie(b.model, b.layer, b.power_percent, b.trial, b.plan);
}

inline bool summary_less(const SummaryRow& a, const SummaryRow& b) {
    return std::tie(a.model, a.power_percent) < std::tie(b.model, b.power_percent);
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double_field(const std::string& s, const std::string& column) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SchemaError("column '" + column + "': cannot parse '" + s +
                          "' as a number");
    return v;
}

inline std::int64_t parse_int_field(const std::string& s,
                                    const std::string& column) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SchemaError("column '" + column + "': cannot parse '" + s +
                          "' as an integer");
    return v;
}

inline std::uint64_t parse_u64_field(const std::string& s,
                                     const std::string& column) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SchemaError("column '" + column + "': cannot parse '" + s +
                          "' as an unsigned integer");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline void check_header(const std::string& got,
                         const std::vector<std::string>& want,
                         const std::string& file) {
    const std::vector<std::string> cols = split_csv_line(got);
    for (const std::string& w : want)
        if (std::find(cols.begin(), cols.end(), w) == cols.end())
            throw SchemaError(file + ": missing column '" + w + "'");
    for (const std::string& c : cols)
        if (std::find(want.begin(), want.end(), c) == want.end())
            throw SchemaError(file + ": unexpected column '" + c + "'");
    if (cols != want)
        throw SchemaError(file + ": columns out of order, expected '" +
                          [&] {
                              std::string s;
                              for (const auto& w : want) {
                                  if (!s.empty()) s += ',';
                                  s += w;
                              }
                              return s;
                          }() +
                          "'");
}

inline void check_csv_safe(const std::string& value, const std::string& what) {
    if (value.find(',') != std::string::npos ||
        value.find('\n') != std::string::npos)
        throw InvalidArgumentError(what + " '" + value +
                                   "' contains a comma or newline, cannot be "
                                   "written as CSV");
}

inline std::string results_csv_text(const std::vector<ResultRow>& rows) {
    std::vector<ResultRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), row_less);
    std::string text =
        "model,design,plan,layer,power_percent,trial,accuracy,"
        "normalized_accuracy\n";
    for (const ResultRow& r : sorted) {
        check_csv_safe(r.model, "model name");
        check_csv_safe(r.plan, "plan tag");
        text += r.model;
        text += ',';
        text += r.design;
        text += ',';
        text += r.plan;
        text += ',';
        text += std::to_string(r.layer);
        text += ',';
        text += format_double(r.power_percent);
        text += ',';
        text += std::to_string(r.trial);
        text += ',';
        text += format_double(r.accuracy);
        text += ',';
        text += format_double(r.normalized_accuracy);
        text += '\n';
    }
    return text;
}

inline std::string current_utc_string() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Job {
    InjectionPlan plan;
    double power = 0.0;
    int trial = 0;
};

/// Run fn(job_index) for every index. A single worker runs inline so
/// exceptions (including ones thrown by a progress callback) propagate
/// directly; more workers share an atomic cursor and the first exception
/// wins. Either way every started job is finished or never begun.
inline void execute_jobs(std::size_t job_count, int workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers <= 1) {
        for (std::size_t j = 0; j < job_count; ++j) fn(j);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        while (!abort.load(std::memory_order_relaxed)) {
            const std::size_t j = next.fetch_add(1, std::memory_order_relaxed);
            if (j >= job_count) return;
            try {
                fn(j);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                abort.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                        job_count);
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Execute the configured design. Baseline accuracy is measured once per
/// model on clean weights; every (plan instance, power, trial) job then
/// perturbs a fresh clone and evaluates. Workers share nothing but the
/// read-only dataset, and rows land in per-job slots, so the result is
/// byte-for-byte independent of scheduling. A failure after the first
/// measurement leaves <output_dir>/results.incomplete.csv behind and
/// rethrows.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const ProgressFn& on_progress = {}) {
    config.validate();
    const Dataset ds = load_dataset(config.dataset_path);
    const int workers = config.effective_workers();

    ExperimentResult result;
    result.seed = config.seed;
    result.trials = config.trials;
    result.design = config.design;
    result.started_at = detail::current_utc_string();

    // Counted up front so the progress callback can report a global total.
    std::vector<ModelGraph> models;
    models.reserve(config.model_paths.size());
    std::size_t total_jobs = 0;
    std::vector<std::size_t> jobs_per_model;
    for (const std::string& path : config.model_paths) {
        models.push_back(load_model(path));
        const std::size_t n = layer_groups(models.back()).size();
        if (n == 0)
            throw InvalidArgumentError("model '" + models.back().name +
                                       "' has no parameterized layers to "
                                       "perturb");
        const std::size_t instances =
            (config.design == Design::AllLayers) ? 1 : n;
        jobs_per_model.push_back(instances * config.powers.size() *
                                 static_cast<std::size_t>(config.trials));
        total_jobs += jobs_per_model.back();
    }

    std::size_t done_jobs = 0;
    auto fail_with_partial = [&](std::exception_ptr error) {
        if (!config.output_dir.empty() && !result.rows.empty()) {
            std::filesystem::create_directories(config.output_dir);
            detail::atomic_write_file(
                std::filesystem::path(config.output_dir) /
                    "results.incomplete.csv",
                detail::results_csv_text(result.rows));
        }
        std::rethrow_exception(error);
    };

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        ModelGraph& model = models[mi];
        const std::vector<LayerGroup> groups = layer_groups(model);
        const int n = static_cast<int>(groups.size());

        const double a_o = evaluate_accuracy(model, ds, config.batch_size);
        if (!(a_o > 0.0))
            throw UndefinedBaselineError("model '" + model.name +
                                         "' scores 0 on the dataset, nothing "
                                         "to normalize against");
        result.rows.push_back(ResultRow{model.name, design_name(config.design),
                                        "baseline", 0, 0.0, 0, a_o, 1.0});

        std::vector<InjectionPlan> plans;
        if (config.design == Design::AllLayers) {
            plans.push_back(InjectionPlan::all());
        } else if (config.design == Design::PrefixSweep) {
            for (int l = 1; l <= n; ++l) plans.push_back(InjectionPlan::prefix(l));
        } else {
            for (int i = 1; i <= n; ++i) plans.push_back(InjectionPlan::single(i));
        }

        std::vector<detail::Job> jobs;
        jobs.reserve(jobs_per_model[mi]);
        for (const InjectionPlan& plan : plans)
            for (double p : config.powers)
                for (int t = 0; t < config.trials; ++t)
                    jobs.push_back(detail::Job{plan, p, t});

        std::vector<ResultRow> slots(jobs.size());
        std::mutex progress_mutex;
        std::atomic<std::size_t> model_done{0};

        struct WorkerState {
            ModelGraph clone;
            ParamSnapshot clean;
            std::vector<LayerGroup> groups;
        };
        std::vector<WorkerState> states;
        const int pool_size =
            static_cast<int>(std::min<std::size_t>(
                static_cast<std::size_t>(workers), std::max<std::size_t>(jobs.size(), 1)));
        states.reserve(static_cast<std::size_t>(pool_size));
        for (int w = 0; w < pool_size; ++w) {
            WorkerState st{model.clone(), {}, {}};
            st.clean = snapshot(st.clone);
            st.groups = layer_groups(st.clone);
            states.push_back(std::move(st));
        }
        std::atomic<int> next_state{0};

        // Worker identity via a claimed state index per thread. With one
        // worker the same state is reused for every job.
        auto run_job = [&](std::size_t j) {
            static thread_local int state_index = -1;
            if (workers <= 1)
                state_index = 0;
            else if (state_index < 0 ||
                     state_index >= static_cast<int>(states.size()))
                state_index = next_state.fetch_add(1) %
                              static_cast<int>(states.size());
            WorkerState& st = states[static_cast<std::size_t>(state_index)];
            const detail::Job& job = jobs[j];
            const NoiseSpec spec{job.power, config.seed, config.trials};
            for (int gi : expand_plan(job.plan, n))
                perturb_group(st.clone, st.groups[static_cast<std::size_t>(gi - 1)],
                              spec, job.trial);
            const double a = evaluate_accuracy(st.clone, ds, config.batch_size);
            restore(st.clone, st.clean);
            slots[j] = ResultRow{model.name,
                                 design_name(config.design),
                                 job.plan.tag(),
                                 job.plan.kind == InjectionPlan::Kind::All
                                     ? 0
                                     : job.plan.layer,
                                 job.power,
                                 job.trial,
                                 a,
                                 normalized_accuracy(a, a_o)};
            const std::size_t model_count = model_done.fetch_add(1) + 1;
            if (on_progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                on_progress(done_jobs + model_count, total_jobs);
            }
        };

        try {
            detail::execute_jobs(jobs.size(), workers, run_job);
        } catch (...) {
            for (std::size_t j = 0; j < jobs.size(); ++j)
                if (!slots[j].model.empty()) result.rows.push_back(slots[j]);
            fail_with_partial(std::current_exception());
        }
        done_jobs += jobs.size();

        result.rows.insert(result.rows.end(), slots.begin(), slots.end());

        // One summary row per power: mean over plan instances of the
        // trial-averaged normalized accuracy. For a single-layer sweep this
        // is exactly the per-layer average; for all/prefix designs it
        // aggregates plan instances the same way.
        for (std::size_t pw = 0; pw < config.powers.size(); ++pw) {
            std::vector<double> per_instance;
            per_instance.reserve(plans.size());
            for (std::size_t pi = 0; pi < plans.size(); ++pi) {
                double acc_sum = 0.0;
                for (int t = 0; t < config.trials; ++t) {
                    const std::size_t j =
                        (pi * config.powers.size() + pw) *
                            static_cast<std::size_t>(config.trials) +
                        static_cast<std::size_t>(t);
                    acc_sum += slots[j].accuracy;
                }
                per_instance.push_back(normalized_accuracy(
                    acc_sum / static_cast<double>(config.trials), a_o));
            }
            result.summaries.push_back(
                SummaryRow{model.name, config.powers[pw],
                           average_normalized_accuracy(per_instance,
                                                       per_instance.size()),
                           config.trials, config.seed, kResultsFormatVersion});
        }
    }

    std::sort(result.rows.begin(), result.rows.end(), detail::row_less);
    std::sort(result.summaries.begin(), result.summaries.end(),
              detail::summary_less);
    return result;
}

/// Write results.csv and summary.csv under dir. Floats use shortest
/// round-trip form, rows are canonically sorted, and nothing time-dependent
/// is written, so equal results give byte-identical files.
inline void write_results(const ExperimentResult& result,
                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    detail::atomic_write_file(dir / "results.csv",
                              detail::results_csv_text(result.rows));

    std::vector<SummaryRow> summaries = result.summaries;
    std::sort(summaries.begin(), summaries.end(), detail::summary_less);
    std::string text = "model,power_percent,a_avr,trials,seed,version\n";
    for (const SummaryRow& s : summaries) {
        detail::check_csv_safe(s.model, "model name");
        text += s.model;
        text += ',';
        text += detail::format_double(s.power_percent);
        text += ',';
        text += detail::format_double(s.a_avr);
        text += ',';
        text += std::to_string(s.trials);
        text += ',';
        text += std::to_string(s.seed);
        text += ',';
        text += std::to_string(s.version);
        text += '\n';
    }
    detail::atomic_write_file(dir / "summary.csv", text);

    // A leftover incomplete marker from an aborted run would shadow the
    // fresh, complete files.
    std::error_code ec;
    std::filesystem::remove(dir / "results.incomplete.csv", ec);
}

namespace detail {

inline std::vector<std::string> read_csv_lines(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    std::vector<std::string> lines;
    std::string cur;
    for (unsigned char c : bytes) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

}  // namespace detail

inline ExperimentResult read_results(const std::filesystem::path& dir) {
    if (std::filesystem::exists(dir / "results.incomplete.csv"))
        throw IncompleteResultError(
            "'" + dir.string() +
            "' holds results.incomplete.csv from an aborted run; rerun the "
            "experiment");

    const auto rlines = detail::read_csv_lines(dir / "results.csv");
    if (rlines.empty())
        throw FormatError("'" + (dir / "results.csv").string() + "' is empty");
    detail::check_header(rlines[0],
                         {"model", "design", "plan", "layer", "power_percent",
                          "trial", "accuracy", "normalized_accuracy"},
                         "results.csv");
    if (rlines.size() < 2)
        throw IncompleteResultError("'" + (dir / "results.csv").string() +
                                    "' has a header but no rows");

    ExperimentResult result;
    for (std::size_t i = 1; i < rlines.size(); ++i) {
        const auto f = detail::split_csv_line(rlines[i]);
        if (f.size() != 8)
            throw SchemaError("results.csv row " + std::to_string(i) + " has " +
                              std::to_string(f.size()) + " fields, expected 8");
        ResultRow row;
        row.model = f[0];
        row.design = f[1];
        row.plan = f[2];
        row.layer = static_cast<int>(detail::parse_int_field(f[3], "layer"));
        row.power_percent = detail::parse_double_field(f[4], "power_percent");
        row.trial = static_cast<int>(detail::parse_int_field(f[5], "trial"));
        row.accuracy = detail::parse_double_field(f[6], "accuracy");
        row.normalized_accuracy =
            detail::parse_double_field(f[7], "normalized_accuracy");
        result.rows.push_back(std::move(row));
    }
    result.design = design_from_name(result.rows[0].design);
    for (const ResultRow& r : result.rows)
        if (r.design != design_name(result.design))
            throw FormatError("results.csv mixes designs '" +
                              result.rows[0].design + "' and '" + r.design + "'");

    const auto slines = detail::read_csv_lines(dir / "summary.csv");
    if (slines.empty())
        throw FormatError("'" + (dir / "summary.csv").string() + "' is empty");
    detail::check_header(
        slines[0], {"model", "power_percent", "a_avr", "trials", "seed", "version"},
        "summary.csv");
    for (std::size_t i = 1; i < slines.size(); ++i) {
        const auto f = detail::split_csv_line(slines[i]);
        if (f.size() != 6)
            throw SchemaError("summary.csv row " + std::to_string(i) + " has " +
                              std::to_string(f.size()) + " fields, expected 6");
        SummaryRow s;
        s.model = f[0];
        s.power_percent = detail::parse_double_field(f[1], "power_percent");
        s.a_avr = detail::parse_double_field(f[2], "a_avr");
        s.trials = static_cast<int>(detail::parse_int_field(f[3], "trials"));
        s.seed = detail::parse_u64_field(f[4], "seed");
        s.version = static_cast<int>(detail::parse_int_field(f[5], "version"));
        if (s.version != kResultsFormatVersion)
            throw VersionError("summary.csv row " + std::to_string(i) +
                               " has version " + std::to_string(s.version) +
                               " but this reader supports " +
                               std::to_string(kResultsFormatVersion));
        result.summaries.push_back(std::move(s));
    }
    if (result.summaries.empty())
        throw IncompleteResultError("summary.csv has a header but no rows");
    result.seed = result.summaries[0].seed;
    result.trials = result.summaries[0].trials;
    for (const SummaryRow& s : result.summaries)
        if (s.seed != result.seed || s.trials != result.trials)
            throw FormatError("summary.csv mixes seeds or trial counts");
    return result;
}

}  // namespace anb
