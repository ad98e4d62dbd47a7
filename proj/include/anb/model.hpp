#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anb/kernels.hpp"
#include "anb/tensor.hpp"

namespace anb {

enum class LayerKind {
    Conv,
    Dense,
    BatchNorm,
    ReLU,
    MaxPool,
    GlobalAvgPool,
    ResidualAdd,
    Softmax,
};

inline const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Dense: return "dense";
        case LayerKind::BatchNorm: return "batch_norm";
        case LayerKind::ReLU: return "relu";
        case LayerKind::MaxPool: return "max_pool";
        case LayerKind::GlobalAvgPool: return "global_avg_pool";
        case LayerKind::ResidualAdd: return "residual_add";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

/// Canonical parameter order per node kind; serialization, grouping and
/// hashing all iterate parameters in this order.
inline std::vector<std::string> param_order(LayerKind k) {
    switch (k) {
        case LayerKind::Conv:
        case LayerKind::Dense: return {"weight", "bias"};
        case LayerKind::BatchNorm:
            return {"gamma", "beta", "moving_mean", "moving_var"};
        default: return {};
    }
}

struct Node {
    int id = 0;
    LayerKind kind = LayerKind::ReLU;
    int stride = 1;        // conv
    int padding = 0;       // conv
    int pool_k = 2;        // max_pool window
    int pool_stride = 2;   // max_pool stride
    float epsilon = 1e-5f; // batch_norm
    int residual_source = -1;
    std::map<std::string, Tensor> params;

    bool has_param(const std::string& name) const {
        return params.count(name) != 0;
    }
};

struct ModelGraph {
    std::string name;
    std::vector<std::int64_t> input_shape;  // excluding the batch dimension
    int class_count = 0;
    std::vector<Node> nodes;

    Tensor forward(const Tensor& batch) const;
    ModelGraph clone() const { return *this; }

    Tensor& param_ref(int node_id, const std::string& pname) {
        return nodes.at(static_cast<std::size_t>(node_id)).params.at(pname);
    }
    const Tensor& param(int node_id, const std::string& pname) const {
        return nodes.at(static_cast<std::size_t>(node_id)).params.at(pname);
    }
};

/// The unit of noise injection: one weighted node's tensors (weight plus its
/// bias), or the four vectors of one batch-norm node bundled together.
struct LayerGroup {
    enum class Kind { Weighted, BatchNormBundle };

    int index = 0;  // 1-based position in graph order
    Kind kind = Kind::Weighted;
    std::vector<std::pair<int, std::string>> members;  // (node id, param name)
};

inline std::vector<LayerGroup> layer_groups(const ModelGraph& model) {
    std::vector<LayerGroup> groups;
    for (const Node& n : model.nodes) {
        if (n.params.empty()) continue;
        LayerGroup g;
        g.index = static_cast<int>(groups.size()) + 1;
        g.kind = n.kind == LayerKind::BatchNorm ? LayerGroup::Kind::BatchNormBundle
                                                : LayerGroup::Kind::Weighted;
        for (const std::string& pname : param_order(n.kind))
            if (n.has_param(pname)) g.members.emplace_back(n.id, pname);
        groups.push_back(std::move(g));
    }
    return groups;
}

inline std::vector<Tensor> get_params(const ModelGraph& model,
                                      const LayerGroup& group) {
    std::vector<Tensor> out;
    out.reserve(group.members.size());
    for (const auto& [node_id, pname] : group.members)
        out.push_back(model.param(node_id, pname));
    return out;
}

inline void set_params(ModelGraph& model, const LayerGroup& group,
                       const std::vector<Tensor>& values) {
    if (values.size() != group.members.size())
        throw ShapeError("set_params: group " + std::to_string(group.index) +
                         " has " + std::to_string(group.members.size()) +
                         " tensors, got " + std::to_string(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& [node_id, pname] = group.members[i];
        if (!values[i].same_shape(model.param(node_id, pname)))
            throw ShapeError(
                "set_params: tensor " + std::to_string(i) + " shape " +
                shape_str(values[i].shape()) + " does not match " + pname +
                " of node " + std::to_string(node_id) + " with shape " +
                shape_str(model.param(node_id, pname).shape()));
    }
    // All shapes verified; the model is only touched on the success path.
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& [node_id, pname] = group.members[i];
        model.param_ref(node_id, pname) = values[i];
    }
}

// -- hashing --------------------------------------------------------------

inline std::uint64_t fnv1a64(std::span<const float> values,
                             std::uint64_t h = 14695981039346656037ull) {
    for (float v : values) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        for (int s = 0; s < 32; s += 8) {
            h ^= (bits >> s) & 0xFFu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

inline std::uint64_t group_hash(const ModelGraph& model,
                                const LayerGroup& group) {
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& [node_id, pname] : group.members)
        h = fnv1a64(model.param(node_id, pname).data(), h);
    return h;
}

/// Hash of every parameter byte of the model, in group order.
inline std::uint64_t param_hash(const ModelGraph& model) {
    std::uint64_t h = 14695981039346656037ull;
    for (const LayerGroup& g : layer_groups(model))
        for (const auto& [node_id, pname] : g.members)
            h = fnv1a64(model.param(node_id, pname).data(), h);
    return h;
}

/// Hash of the model's structure (kinds, names, shapes) but not its values;
/// used to match snapshots to the model they came from.
inline std::uint64_t structure_fingerprint(const ModelGraph& model) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int s = 0; s < 64; s += 8) {
            h ^= (v >> s) & 0xFFu;
            h *= 1099511628211ull;
        }
    };
    for (char c : model.name) mix(static_cast<unsigned char>(c));
    mix(static_cast<std::uint64_t>(model.class_count));
    for (auto d : model.input_shape) mix(static_cast<std::uint64_t>(d));
    for (const Node& n : model.nodes) {
        mix(static_cast<std::uint64_t>(n.kind));
        for (const std::string& pname : param_order(n.kind)) {
            if (!n.has_param(pname)) continue;
            mix(0x9E);
            for (auto d : n.params.at(pname).shape())
                mix(static_cast<std::uint64_t>(d));
        }
    }
    return h;
}

// -- structural validation -------------------------------------------------

inline void validate_model(const ModelGraph& model) {
    if (model.name.empty()) throw FormatError("model has an empty name");
    if (model.nodes.empty()) throw FormatError("model has no nodes");
    if (model.class_count < 2)
        throw FormatError("model class_count must be >= 2, got " +
                          std::to_string(model.class_count));
    if (model.input_shape.empty())
        throw FormatError("model input_shape is empty");
    for (auto d : model.input_shape)
        if (d <= 0) throw FormatError("model input_shape has a non-positive dim");

    for (std::size_t i = 0; i < model.nodes.size(); ++i) {
        const Node& n = model.nodes[i];
        const std::string where =
            "node " + std::to_string(n.id) + " (" + kind_name(n.kind) + ")";
        if (n.id != static_cast<int>(i))
            throw FormatError(where + ": id out of order");

        const auto expected = param_order(n.kind);
        for (const auto& [pname, t] : n.params) {
            (void)t;
            bool known = false;
            for (const auto& e : expected) known = known || e == pname;
            if (!known)
                throw FormatError(where + ": unexpected parameter '" + pname + "'");
        }
        switch (n.kind) {
            case LayerKind::Conv: {
                if (!n.has_param("weight"))
                    throw FormatError(where + ": missing weight");
                const Tensor& w = n.params.at("weight");
                if (w.rank() != 4)
                    throw ShapeError(where + ": weight " + shape_str(w.shape()) +
                                     " must be rank 4");
                if (n.has_param("bias")) {
                    const Tensor& b = n.params.at("bias");
                    if (b.rank() != 1 || b.dim(0) != w.dim(0))
                        throw ShapeError(where + ": bias " + shape_str(b.shape()) +
                                         " does not match weight " +
                                         shape_str(w.shape()));
                }
                if (n.stride < 1 || n.padding < 0)
                    throw FormatError(where + ": bad stride/padding");
                break;
            }
            case LayerKind::Dense: {
                if (!n.has_param("weight"))
                    throw FormatError(where + ": missing weight");
                const Tensor& w = n.params.at("weight");
                if (w.rank() != 2)
                    throw ShapeError(where + ": weight " + shape_str(w.shape()) +
                                     " must be rank 2");
                if (n.has_param("bias")) {
                    const Tensor& b = n.params.at("bias");
                    if (b.rank() != 1 || b.dim(0) != w.dim(1))
                        throw ShapeError(where + ": bias " + shape_str(b.shape()) +
                                         " does not match weight " +
                                         shape_str(w.shape()));
                }
                break;
            }
            case LayerKind::BatchNorm: {
                std::int64_t c = -1;
                for (const auto& pname : expected) {
                    if (!n.has_param(pname))
                        throw FormatError(where + ": missing " + pname);
                    const Tensor& t = n.params.at(pname);
                    if (t.rank() != 1)
                        throw ShapeError(where + ": " + pname + " must be rank 1");
                    if (c < 0) c = t.dim(0);
                    if (t.dim(0) != c)
                        throw ShapeError(where + ": " + pname + " length " +
                                         std::to_string(t.dim(0)) +
                                         " inconsistent with " + std::to_string(c));
                }
                if (!(n.epsilon > 0.0f))
                    throw FormatError(where + ": epsilon must be positive");
                break;
            }
            case LayerKind::MaxPool:
                if (n.pool_k < 1 || n.pool_stride < 1)
                    throw FormatError(where + ": bad pool window/stride");
                break;
            case LayerKind::ResidualAdd:
                if (n.residual_source < 0 || n.residual_source >= n.id)
                    throw FormatError(
                        where + ": residual source " +
                        std::to_string(n.residual_source) +
                        " does not refer to an earlier node");
                break;
            default: break;
        }
        if (n.kind != LayerKind::Conv && n.kind != LayerKind::Dense &&
            n.kind != LayerKind::BatchNorm && !n.params.empty())
            throw FormatError(where + ": parameterless kind carries parameters");
    }
}

// -- forward pass ----------------------------------------------------------

namespace detail {

inline Tensor flatten_rows(const Tensor& t) {
    if (t.rank() == 2) return t;
    std::int64_t rest = 1;
    for (std::size_t d = 1; d < t.rank(); ++d) rest *= t.dim(d);
    return Tensor({t.dim(0), rest},
                  std::vector<float>(t.data().begin(), t.data().end()));
}

// Batch-norm folded to a per-channel affine. Uses plain IEEE arithmetic so a
// noise-perturbed negative variance yields NaN activations (and a degraded
// prediction) instead of aborting the evaluation.
inline Tensor bn_affine(const Tensor& input, const Node& n) {
    const Tensor& gamma = n.params.at("gamma");
    const Tensor& beta = n.params.at("beta");
    const Tensor& mean = n.params.at("moving_mean");
    const Tensor& var = n.params.at("moving_var");
    const std::int64_t c = input.dim(1);
    if (input.rank() < 2 || gamma.dim(0) != c)
        throw ShapeError("batch_norm parameters sized " +
                         shape_str(gamma.shape()) + " do not match input " +
                         shape_str(input.shape()));
    std::vector<float> scale(static_cast<std::size_t>(c)),
        shift(static_cast<std::size_t>(c));
    for (std::int64_t i = 0; i < c; ++i) {
        scale[i] = gamma[i] / std::sqrt(var[i] + n.epsilon);
        shift[i] = beta[i] - mean[i] * scale[i];
    }
    const std::int64_t nb = input.dim(0);
    std::int64_t inner = 1;
    for (std::size_t d = 2; d < input.rank(); ++d) inner *= input.dim(d);
    Tensor out(input.shape());
    const float* in = input.data().data();
    float* o = out.data().data();
    for (std::int64_t b = 0; b < nb; ++b)
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const std::int64_t base = (b * c + ch) * inner;
            for (std::int64_t i = 0; i < inner; ++i)
                o[base + i] = in[base + i] * scale[ch] + shift[ch];
        }
    return out;
}

}  // namespace detail

inline Tensor ModelGraph::forward(const Tensor& batch) const {
    if (batch.rank() != input_shape.size() + 1 ||
        !std::equal(input_shape.begin(), input_shape.end(),
                    batch.shape().begin() + 1))
        throw ShapeError("forward: batch " + shape_str(batch.shape()) +
                         " does not match model input " +
                         shape_str(input_shape));

    std::vector<Tensor> outs;
    outs.reserve(nodes.size());
    for (const Node& n : nodes) {
        const Tensor& cur = outs.empty() ? batch : outs.back();
        try {
            switch (n.kind) {
                case LayerKind::Conv: {
                    const Tensor* bias =
                        n.has_param("bias") ? &n.params.at("bias") : nullptr;
                    outs.push_back(conv2d(cur, n.params.at("weight"), bias,
                                          n.stride, n.padding));
                    break;
                }
                case LayerKind::Dense: {
                    const Tensor* bias =
                        n.has_param("bias") ? &n.params.at("bias") : nullptr;
                    outs.push_back(dense(detail::flatten_rows(cur),
                                         n.params.at("weight"), bias));
                    break;
                }
                case LayerKind::BatchNorm:
                    outs.push_back(detail::bn_affine(cur, n));
                    break;
                case LayerKind::ReLU: outs.push_back(relu(cur)); break;
                case LayerKind::MaxPool:
                    outs.push_back(max_pool2d(cur, n.pool_k, n.pool_stride));
                    break;
                case LayerKind::GlobalAvgPool:
                    outs.push_back(global_avg_pool(cur));
                    break;
                case LayerKind::ResidualAdd:
                    outs.push_back(add(
                        cur, outs.at(static_cast<std::size_t>(n.residual_source))));
                    break;
                case LayerKind::Softmax: outs.push_back(softmax(cur)); break;
            }
        } catch (const ShapeError& e) {
            throw ShapeError("node " + std::to_string(n.id) + " (" +
                             kind_name(n.kind) + "): " + e.what());
        }
    }
    const Tensor& last = outs.back();
    if (last.rank() != 2 || last.dim(1) != class_count)
        throw ShapeError("forward: final output " + shape_str(last.shape()) +
                         " is not [batch x " + std::to_string(class_count) +
                         "]");
    return last;
}

}  // namespace anb
