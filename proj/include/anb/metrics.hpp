#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "anb/dataset.hpp"
#include "anb/kernels.hpp"
#include "anb/model.hpp"

namespace anb {

/// Fraction of samples whose argmax prediction equals the label. Per-batch
/// correct counts are integers, so the result cannot depend on batch_size.
inline double evaluate_accuracy(const ModelGraph& model, const Dataset& ds,
                                std::int64_t batch_size = 32) {
    if (batch_size < 1)
        throw InvalidArgumentError("batch_size must be positive, got " +
                                   std::to_string(batch_size));
    if (ds.class_count != model.class_count)
        throw InvalidArgumentError(
            "dataset has " + std::to_string(ds.class_count) +
            " classes but model '" + model.name + "' has " +
            std::to_string(model.class_count));
    const std::int64_t m = ds.size();
    const std::int64_t sample_elems = ds.inputs.numel() / m;

    std::int64_t correct = 0;
    for (std::int64_t start = 0; start < m; start += batch_size) {
        const std::int64_t b = std::min(batch_size, m - start);
        std::vector<std::int64_t> shape{b, ds.inputs.dim(1), ds.inputs.dim(2),
                                        ds.inputs.dim(3)};
        Tensor batch(shape);
        const auto src = ds.inputs.data().subspan(
            static_cast<std::size_t>(start * sample_elems),
            static_cast<std::size_t>(b * sample_elems));
        std::copy(src.begin(), src.end(), batch.data().begin());

        const Tensor out = model.forward(batch);
        const std::vector<int> pred = argmax_rows(out);
        for (std::int64_t r = 0; r < b; ++r)
            if (pred[static_cast<std::size_t>(r)] ==
                ds.labels[static_cast<std::size_t>(start + r)])
                ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(m);
}

/// A_i = a_i / a_o, the noisy accuracy normalized by the clean baseline.
/// May exceed 1 when noise happens to help; never clamped.
inline double normalized_accuracy(double a_i, double a_o) {
    if (!(a_o > 0.0))
        throw UndefinedBaselineError("baseline accuracy " + std::to_string(a_o) +
                                     " is not positive, ratio undefined");
    return a_i / a_o;
}

/// A_avr = sum(A_i) / N over exactly one A_i per layer group.
inline double average_normalized_accuracy(const std::vector<double>& per_layer,
                                          std::size_t expected_layers) {
    if (expected_layers == 0)
        throw InvalidArgumentError("a model with zero layer groups has no average");
    if (per_layer.size() != expected_layers)
        throw IncompleteSweepError("have " + std::to_string(per_layer.size()) +
                                   " per-layer values for a model with " +
                                   std::to_string(expected_layers) + " layers");
    const double sum = std::accumulate(per_layer.begin(), per_layer.end(), 0.0);
    return sum / static_cast<double>(expected_layers);
}

}  // namespace anb
