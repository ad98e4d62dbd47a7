#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "anb/model.hpp"
#include "anb/rng.hpp"

namespace anb {

struct NoiseSpec {
    double power_percent = 0.0;  // noise std as a percentage of the group's sigma_w
    std::uint64_t seed = 0;
    int trials = 5;

    void validate() const {
        if (!(power_percent >= 0.0) || power_percent > 100.0)
            throw InvalidArgumentError("power_percent must be in [0, 100], got " +
                                       std::to_string(power_percent));
        if (trials < 1)
            throw InvalidArgumentError("trials must be positive, got " +
                                       std::to_string(trials));
    }
};

struct InjectionPlan {
    enum class Kind { Single, Prefix, All };

    Kind kind = Kind::All;
    int layer = 0;  // Single: the one group index; Prefix: the last group index L

    static InjectionPlan single(int i) { return {Kind::Single, i}; }
    static InjectionPlan prefix(int last) { return {Kind::Prefix, last}; }
    static InjectionPlan all() { return {Kind::All, 0}; }

    std::string tag() const {
        switch (kind) {
            case Kind::Single: return "single:" + std::to_string(layer);
            case Kind::Prefix: return "prefix:" + std::to_string(layer);
            case Kind::All: return "all";
        }
        throw InvalidArgumentError("corrupt InjectionPlan kind");
    }
};

struct LayerSigma {
    int group_index = 0;
    double sigma_w = 0.0;
};

/// Population standard deviation over every scalar element of the group's
/// member tensors, concatenated. Welford's update keeps one pass stable.
inline LayerSigma layer_sigma(const ModelGraph& model, const LayerGroup& group) {
    double mean = 0.0, m2 = 0.0;
    std::int64_t count = 0;
    for (const auto& [node_id, pname] : group.members) {
        for (float v : model.param(node_id, pname).data()) {
            ++count;
            const double d = static_cast<double>(v) - mean;
            mean += d / static_cast<double>(count);
            m2 += d * (static_cast<double>(v) - mean);
        }
    }
    if (count == 0)
        throw FormatError("layer group " + std::to_string(group.index) +
                          " has no elements (corrupt model)");
    return {group.index, std::sqrt(m2 / static_cast<double>(count))};
}

/// SNR = sigma_w / sigma_noise = 100 / p. Undefined at p = 0 (no noise).
inline double snr_of(double power_percent) {
    if (power_percent == 0.0) throw NoNoiseError();
    if (!(power_percent > 0.0) || power_percent > 100.0)
        throw InvalidArgumentError("power_percent must be in [0, 100], got " +
                                   std::to_string(power_percent));
    return 100.0 / power_percent;
}

/// snr_of rounded to 3 significant figures for display: 60 -> "1.67".
inline std::string snr_display(double power_percent) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", snr_of(power_percent));
    return buf;
}

/// Add one fresh Gaussian realization, std (p/100) * sigma_w, to every element
/// of the group. sigma_w is taken from the group's current (pre-perturbation)
/// values. The noise value for element k is a pure function of
/// (spec.seed, trial_index, group.index, k), so evaluation order and plan
/// membership cannot change it.
inline void perturb_group(ModelGraph& model, const LayerGroup& group,
                          const NoiseSpec& spec, int trial_index) {
    spec.validate();
    if (trial_index < 0 || trial_index >= spec.trials)
        throw InvalidArgumentError("trial_index " + std::to_string(trial_index) +
                                   " outside [0, " + std::to_string(spec.trials) +
                                   ")");
    const double sigma_noise =
        (spec.power_percent / 100.0) * layer_sigma(model, group).sigma_w;
    if (sigma_noise == 0.0) return;  // p = 0 or constant group: bit-identical

    const NormalStream stream(spec.seed, static_cast<std::uint32_t>(trial_index),
                              static_cast<std::uint32_t>(group.index));
    std::uint64_t k = 0;
    for (const auto& [node_id, pname] : group.members)
        for (float& v : model.param_ref(node_id, pname).data())
            v += static_cast<float>(sigma_noise * stream(k++));
}

/// Single(i) -> [i]; Prefix(L) -> [1..L]; All -> [1..N].
inline std::vector<int> expand_plan(const InjectionPlan& plan, int group_count) {
    if (group_count < 1)
        throw InvalidArgumentError("model has no layer groups");
    auto check = [&](int i) {
        if (i < 1 || i > group_count)
            throw InvalidArgumentError("plan index " + std::to_string(i) +
                                       " outside [1, " +
                                       std::to_string(group_count) + "]");
    };
    std::vector<int> out;
    switch (plan.kind) {
        case InjectionPlan::Kind::Single:
            check(plan.layer);
            out.push_back(plan.layer);
            break;
        case InjectionPlan::Kind::Prefix:
            check(plan.layer);
            for (int i = 1; i <= plan.layer; ++i) out.push_back(i);
            break;
        case InjectionPlan::Kind::All:
            for (int i = 1; i <= group_count; ++i) out.push_back(i);
            break;
    }
    return out;
}

inline std::vector<int> expand_plan(const InjectionPlan& plan,
                                    const ModelGraph& model) {
    return expand_plan(plan, static_cast<int>(layer_groups(model).size()));
}

/// Bit-exact copy of every parameter, for restoring clean weights between
/// trials. Tied to the source model's structure fingerprint.
struct ParamSnapshot {
    std::uint64_t fingerprint = 0;
    std::vector<float> values;  // all params, group order then member order
};

inline ParamSnapshot snapshot(const ModelGraph& model) {
    ParamSnapshot snap;
    snap.fingerprint = structure_fingerprint(model);
    for (const LayerGroup& g : layer_groups(model))
        for (const auto& [node_id, pname] : g.members) {
            auto data = model.param(node_id, pname).data();
            snap.values.insert(snap.values.end(), data.begin(), data.end());
        }
    return snap;
}

inline void restore(ModelGraph& model, const ParamSnapshot& snap) {
    if (structure_fingerprint(model) != snap.fingerprint)
        throw MismatchError(
            "snapshot does not belong to model '" + model.name +
            "' (structure fingerprint differs)");
    std::size_t pos = 0;
    for (const LayerGroup& g : layer_groups(model))
        for (const auto& [node_id, pname] : g.members) {
            auto data = model.param_ref(node_id, pname).data();
            if (pos + data.size() > snap.values.size())
                throw MismatchError("snapshot too short for model '" +
                                    model.name + "'");
            std::copy(snap.values.begin() + static_cast<std::ptrdiff_t>(pos),
                      snap.values.begin() +
                          static_cast<std::ptrdiff_t>(pos + data.size()),
                      data.begin());
            pos += data.size();
        }
    if (pos != snap.values.size())
        throw MismatchError("snapshot longer than model '" + model.name + "'");
}

}  // namespace anb
