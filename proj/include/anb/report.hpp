#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "anb/experiment.hpp"

namespace anb {

namespace detail {

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                              c == '_'
                          ? c
                          : '_');
    return out;
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  // sorted by x
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                           "#9467bd", "#ff7f0e", "#8c564b",
                                           "#17becf", "#7f7f7f"};

/// Fixed-size line chart as standalone SVG text. Every number in the output
/// is derived from the data alone, so equal inputs give equal bytes.
inline std::string render_line_chart_svg(const ChartSpec& spec) {
    constexpr double width = 720, height = 480;
    constexpr double ml = 70, mr = 170, mt = 50, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    std::set<double> xs;
    for (const Series& s : spec.series)
        for (const auto& [x, y] : s.points) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
            xs.insert(x);
        }
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = (ymax - ymin) * 0.05;
    ymin -= ypad;
    ymax += ypad;

    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) {
        return mt + ph - (y - ymin) / (ymax - ymin) * ph;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" "
           "height=\"480\" viewBox=\"0 0 720 480\">\n";
    svg += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
    svg += "<text x=\"" + coord(ml + pw / 2) + "\" y=\"28\" font-family=\"sans-serif\" "
           "font-size=\"16\" text-anchor=\"middle\">" + spec.title + "</text>\n";

    svg += "<line x1=\"" + coord(ml) + "\" y1=\"" + coord(mt + ph) + "\" x2=\"" +
           coord(ml + pw) + "\" y2=\"" + coord(mt + ph) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + coord(ml) + "\" y1=\"" + coord(mt) + "\" x2=\"" +
           coord(ml) + "\" y2=\"" + coord(mt + ph) + "\" stroke=\"black\"/>\n";

    // X ticks: the data's own x values when few, else an even subdivision.
    std::vector<double> xticks;
    if (xs.size() <= 12) {
        xticks.assign(xs.begin(), xs.end());
    } else {
        for (int i = 0; i <= 6; ++i)
            xticks.push_back(xmin + (xmax - xmin) * i / 6.0);
    }
    for (double t : xticks) {
        svg += "<line x1=\"" + coord(px(t)) + "\" y1=\"" + coord(mt + ph) +
               "\" x2=\"" + coord(px(t)) + "\" y2=\"" + coord(mt + ph + 5) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + coord(px(t)) + "\" y=\"" + coord(mt + ph + 20) +
               "\" font-family=\"sans-serif\" font-size=\"11\" "
               "text-anchor=\"middle\">" + tick_label(t) + "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double v = ymin + (ymax - ymin) * i / 5.0;
        svg += "<line x1=\"" + coord(ml - 5) + "\" y1=\"" + coord(py(v)) +
               "\" x2=\"" + coord(ml) + "\" y2=\"" + coord(py(v)) +
               "\" stroke=\"black\"/>\n";
        svg += "<line x1=\"" + coord(ml) + "\" y1=\"" + coord(py(v)) + "\" x2=\"" +
               coord(ml + pw) + "\" y2=\"" + coord(py(v)) +
               "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + coord(ml - 9) + "\" y=\"" + coord(py(v) + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" "
               "text-anchor=\"end\">" +
               tick_label(std::round(v * 1000.0) / 1000.0) + "</text>\n";
    }

    svg += "<text x=\"" + coord(ml + pw / 2) + "\" y=\"" + coord(height - 16) +
           "\" font-family=\"sans-serif\" font-size=\"13\" "
           "text-anchor=\"middle\">" + spec.x_label + "</text>\n";
    svg += "<text x=\"20\" y=\"" + coord(mt + ph / 2) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 20 " + coord(mt + ph / 2) + ")\">" +
           spec.y_label + "</text>\n";

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const Series& s = spec.series[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        std::string pts;
        for (const auto& [x, y] : s.points) {
            if (!pts.empty()) pts += ' ';
            pts += coord(px(x)) + "," + coord(py(y));
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
               color + "\" stroke-width=\"1.8\"/>\n";
        for (const auto& [x, y] : s.points)
            svg += "<circle cx=\"" + coord(px(x)) + "\" cy=\"" + coord(py(y)) +
                   "\" r=\"3\" fill=\"" + color + "\"/>\n";
        const double ly = mt + 14 + 18 * static_cast<double>(si);
        svg += "<line x1=\"" + coord(ml + pw + 12) + "\" y1=\"" + coord(ly - 4) +
               "\" x2=\"" + coord(ml + pw + 34) + "\" y2=\"" + coord(ly - 4) +
               "\" stroke=\"" + color + "\" stroke-width=\"1.8\"/>\n";
        svg += "<text x=\"" + coord(ml + pw + 40) + "\" y=\"" + coord(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace detail

/// Refuse a result with holes: every model needs its baseline row and a full
/// (plan instance x power x trial) grid, with layer indices contiguous from 1.
inline void check_result_complete(const ExperimentResult& result) {
    if (result.rows.empty())
        throw IncompleteResultError("result holds no rows");
    if (result.trials < 1)
        throw IncompleteResultError("result records no trial count");

    std::set<std::string> models;
    for (const ResultRow& r : result.rows) models.insert(r.model);

    for (const std::string& model : models) {
        bool baseline = false;
        int max_layer = 0;
        bool has_all_plan = false;
        std::map<std::string, std::map<double, std::set<int>>> seen;
        std::set<double> powers;
        for (const ResultRow& r : result.rows) {
            if (r.model != model) continue;
            if (r.plan == "baseline") {
                baseline = true;
                continue;
            }
            max_layer = std::max(max_layer, r.layer);
            if (r.plan == "all") has_all_plan = true;
            seen[r.plan][r.power_percent].insert(r.trial);
            powers.insert(r.power_percent);
        }
        if (!baseline)
            throw IncompleteResultError("model '" + model +
                                        "' has no baseline row");
        if (seen.empty())
            throw IncompleteResultError("model '" + model +
                                        "' has no injection rows");

        std::vector<std::string> expected;
        if (has_all_plan) {
            expected.push_back("all");
        } else {
            const std::string stem =
                result.design == Design::PrefixSweep ? "prefix:" : "single:";
            for (int i = 1; i <= max_layer; ++i)
                expected.push_back(stem + std::to_string(i));
        }
        for (const std::string& plan : expected) {
            const auto it = seen.find(plan);
            if (it == seen.end())
                throw IncompleteResultError("model '" + model +
                                            "' is missing plan '" + plan + "'");
            for (double p : powers) {
                const auto pit = it->second.find(p);
                if (pit == it->second.end())
                    throw IncompleteResultError(
                        "model '" + model + "' plan '" + plan +
                        "' has no rows at power " + detail::tick_label(p));
                for (int t = 0; t < result.trials; ++t)
                    if (!pit->second.count(t))
                        throw IncompleteResultError(
                            "model '" + model + "' plan '" + plan +
                            "' power " + detail::tick_label(p) +
                            " is missing trial " + std::to_string(t));
            }
        }
        for (const auto& [plan, _] : seen) {
            (void)_;
            if (std::find(expected.begin(), expected.end(), plan) ==
                expected.end())
                throw IncompleteResultError("model '" + model +
                                            "' has stray plan '" + plan + "'");
        }
    }

    for (const std::string& model : models) {
        std::set<double> powers;
        for (const ResultRow& r : result.rows)
            if (r.model == model && r.plan != "baseline")
                powers.insert(r.power_percent);
        for (double p : powers) {
            bool found = false;
            for (const SummaryRow& s : result.summaries)
                found = found || (s.model == model && s.power_percent == p);
            if (!found)
                throw IncompleteResultError("summary is missing model '" + model +
                                            "' at power " +
                                            detail::tick_label(p));
        }
    }
}

/// Write the per-design SVG charts plus summary.txt under dir. Pure function
/// of the result: no clocks, no environment, byte-identical on rerun.
inline void render_report(const ExperimentResult& result,
                          const std::filesystem::path& dir) {
    check_result_complete(result);
    std::filesystem::create_directories(dir);

    std::set<std::string> model_set;
    for (const ResultRow& r : result.rows) model_set.insert(r.model);
    const std::vector<std::string> models(model_set.begin(), model_set.end());

    // Trial-averaged normalized accuracy per (model, plan, power).
    std::map<std::string,
             std::map<std::string, std::map<double, std::pair<double, int>>>>
        acc;
    std::map<std::string, std::set<double>> model_powers;
    for (const ResultRow& r : result.rows) {
        if (r.plan == "baseline") continue;
        auto& [sum, cnt] = acc[r.model][r.plan][r.power_percent];
        sum += r.normalized_accuracy;
        ++cnt;
        model_powers[r.model].insert(r.power_percent);
    }
    const auto mean_of = [&](const std::string& m, const std::string& plan,
                             double p) {
        const auto& [sum, cnt] = acc.at(m).at(plan).at(p);
        return sum / cnt;
    };

    if (result.design == Design::AllLayers) {
        detail::ChartSpec spec;
        spec.title = "Accuracy under noise in every layer";
        spec.x_label = "noise power (% of layer weight std)";
        spec.y_label = "normalized accuracy";
        for (const std::string& m : models) {
            detail::Series s;
            s.label = m;
            for (double p : model_powers.at(m))
                s.points.emplace_back(p, mean_of(m, "all", p));
            spec.series.push_back(std::move(s));
        }
        detail::atomic_write_file(dir / "chart_all_layers.svg",
                                  detail::render_line_chart_svg(spec));
    } else if (result.design == Design::SingleLayerSweep ||
               result.design == Design::ModelComparison) {
        for (const std::string& m : models) {
            int max_layer = 0;
            for (const ResultRow& r : result.rows)
                if (r.model == m) max_layer = std::max(max_layer, r.layer);
            detail::ChartSpec spec;
            spec.title = "Per-layer noise sensitivity: " + m;
            spec.x_label = "layer group index";
            spec.y_label = "normalized accuracy";
            for (double p : model_powers.at(m)) {
                detail::Series s;
                s.label = "p=" + detail::tick_label(p) + "%";
                for (int i = 1; i <= max_layer; ++i)
                    s.points.emplace_back(
                        i, mean_of(m, "single:" + std::to_string(i), p));
                spec.series.push_back(std::move(s));
            }
            detail::atomic_write_file(
                dir / ("chart_single_layer_" + detail::sanitize_filename(m) +
                       ".svg"),
                detail::render_line_chart_svg(spec));
        }
        if (result.design == Design::ModelComparison) {
            detail::ChartSpec spec;
            spec.title = "Average per-layer robustness across models";
            spec.x_label = "noise power (% of layer weight std)";
            spec.y_label = "A_avr";
            for (const std::string& m : models) {
                detail::Series s;
                s.label = m;
                for (const SummaryRow& row : result.summaries)
                    if (row.model == m)
                        s.points.emplace_back(row.power_percent, row.a_avr);
                std::sort(s.points.begin(), s.points.end());
                spec.series.push_back(std::move(s));
            }
            detail::atomic_write_file(dir / "chart_model_comparison.svg",
                                      detail::render_line_chart_svg(spec));
        }
    } else {  // PrefixSweep
        for (const std::string& m : models) {
            int max_layer = 0;
            for (const ResultRow& r : result.rows)
                if (r.model == m) max_layer = std::max(max_layer, r.layer);
            detail::ChartSpec spec;
            spec.title = "Noise spreading from the first layer: " + m;
            spec.x_label = "layers 1..L carrying noise";
            spec.y_label = "normalized accuracy";
            for (double p : model_powers.at(m)) {
                detail::Series s;
                s.label = "p=" + detail::tick_label(p) + "%";
                for (int l = 1; l <= max_layer; ++l)
                    s.points.emplace_back(
                        l, mean_of(m, "prefix:" + std::to_string(l), p));
                spec.series.push_back(std::move(s));
            }
            detail::atomic_write_file(
                dir / ("chart_prefix_sweep_" + detail::sanitize_filename(m) +
                       ".svg"),
                detail::render_line_chart_svg(spec));
        }
    }

    std::size_t name_width = 5;
    for (const std::string& m : models) name_width = std::max(name_width, m.size());
    std::string text = "A_avr by model and noise power (seed " +
                       std::to_string(result.seed) + ", " +
                       std::to_string(result.trials) + " trials)\n\n";
    text += "model";
    text.append(name_width - 5 + 2, ' ');
    text += "power%   a_avr\n";
    std::vector<SummaryRow> summaries = result.summaries;
    std::sort(summaries.begin(), summaries.end(), detail::summary_less);
    for (const SummaryRow& s : summaries) {
        text += s.model;
        text.append(name_width - s.model.size() + 2, ' ');
        std::string p = detail::tick_label(s.power_percent);
        text += p;
        text.append(p.size() < 8 ? 8 - p.size() : 1, ' ');
        text += detail::format_double(s.a_avr);
        text += '\n';
    }
    detail::atomic_write_file(dir / "summary.txt", text);
}

}  // namespace anb
