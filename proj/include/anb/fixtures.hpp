#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "anb/dataset.hpp"
#include "anb/kernels.hpp"
#include "anb/model.hpp"
#include "anb/model_io.hpp"
#include "anb/rng.hpp"

// Deterministic fixture models and datasets. Everything here is a pure
// function of baked-in seeds, so any machine regenerates identical bytes.

namespace anb::fixtures {

/// Four 8x8 single-channel texture classes: horizontal stripes, vertical
/// stripes, diagonal stripes, 2x2 checkerboard. Each sample draws a random
/// phase, amplitude, offset, and pixel noise, which keeps the task
/// non-trivial while a small convolutional net still separates it well.
inline Dataset make_stripes(const std::string& name, int per_class,
                            std::uint64_t seed) {
    if (per_class < 1)
        throw InvalidArgumentError("per_class must be positive");
    const std::int64_t m = static_cast<std::int64_t>(per_class) * 4;
    Dataset ds;
    ds.name = name;
    ds.class_count = 4;
    ds.inputs = Tensor({m, 1, 8, 8});
    ds.labels.resize(static_cast<std::size_t>(m));
    PhiloxRng rng(seed, 17);
    for (std::int64_t s = 0; s < m; ++s) {
        const int cls = static_cast<int>(s % 4);
        ds.labels[static_cast<std::size_t>(s)] = cls;
        const int shift = static_cast<int>(rng.below(8));
        const double amp = rng.uniform(0.5, 1.5);
        const double off = rng.uniform(-0.3, 0.3);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                int on = 0;
                switch (cls) {
                    case 0: on = ((y + shift) % 4) < 2; break;
                    case 1: on = ((x + shift) % 4) < 2; break;
                    case 2: on = ((x + y + shift) % 4) < 2; break;
                    default: on = ((x / 2 + y / 2 + shift) % 2) == 0; break;
                }
                const double v =
                    amp * (on ? 1.0 : -1.0) + off + 0.35 * rng.normal();
                ds.inputs[static_cast<std::size_t>((s * 64) + y * 8 + x)] =
                    static_cast<float>(v);
            }
    }
    return ds;
}

/// One one-hot sample per class, shaped for tiny_mlp.
inline Dataset make_onehot() {
    Dataset ds;
    ds.name = "onehot";
    ds.class_count = 4;
    ds.inputs = Tensor({4, 4, 1, 1});
    ds.labels = {0, 1, 2, 3};
    for (int i = 0; i < 4; ++i)
        ds.inputs[static_cast<std::size_t>(i * 4 + i)] = 1.0f;
    return ds;
}

/// Two identity Dense layers with a ReLU between and a Softmax after.
/// Predicts the hot index of a one-hot input, so its accuracy on
/// make_onehot() is exactly 1.
inline ModelGraph build_tiny_mlp() {
    ModelGraph model;
    model.name = "tiny_mlp";
    model.input_shape = {4, 1, 1};
    model.class_count = 4;

    const auto identity_dense = [](int id) {
        Node n;
        n.id = id;
        n.kind = LayerKind::Dense;
        Tensor w({4, 4});
        for (int i = 0; i < 4; ++i) w[static_cast<std::size_t>(i * 4 + i)] = 1.0f;
        n.params.emplace("weight", std::move(w));
        n.params.emplace("bias", Tensor({4}));
        return n;
    };
    model.nodes.push_back(identity_dense(0));
    Node relu;
    relu.id = 1;
    relu.kind = LayerKind::ReLU;
    model.nodes.push_back(std::move(relu));
    model.nodes.push_back(identity_dense(2));
    Node sm;
    sm.id = 3;
    sm.kind = LayerKind::Softmax;
    model.nodes.push_back(std::move(sm));
    validate_model(model);
    return model;
}

/// Small randomly initialized residual net covering MaxPool and ResidualAdd:
/// conv - relu - maxpool - conv - add - relu - gap - dense. Three layer
/// groups. Untrained; structural tests only.
inline ModelGraph build_tiny_resnet(std::uint64_t seed) {
    PhiloxRng rng(seed, 23);
    const auto he_fill = [&](Tensor& t, int fan_in) {
        const double std_dev = std::sqrt(2.0 / fan_in);
        for (float& v : t.data())
            v = static_cast<float>(std_dev * rng.normal());
    };

    ModelGraph model;
    model.name = "tiny_resnet";
    model.input_shape = {1, 8, 8};
    model.class_count = 4;

    Node c0;
    c0.id = 0;
    c0.kind = LayerKind::Conv;
    c0.stride = 1;
    c0.padding = 1;
    Tensor w0({4, 1, 3, 3});
    he_fill(w0, 9);
    c0.params.emplace("weight", std::move(w0));
    c0.params.emplace("bias", Tensor({4}));
    model.nodes.push_back(std::move(c0));

    Node r1;
    r1.id = 1;
    r1.kind = LayerKind::ReLU;
    model.nodes.push_back(std::move(r1));

    Node p2;
    p2.id = 2;
    p2.kind = LayerKind::MaxPool;
    p2.pool_k = 2;
    p2.pool_stride = 2;
    model.nodes.push_back(std::move(p2));

    Node c3;
    c3.id = 3;
    c3.kind = LayerKind::Conv;
    c3.stride = 1;
    c3.padding = 1;
    Tensor w3({4, 4, 3, 3});
    he_fill(w3, 36);
    c3.params.emplace("weight", std::move(w3));
    c3.params.emplace("bias", Tensor({4}));
    model.nodes.push_back(std::move(c3));

    Node a4;
    a4.id = 4;
    a4.kind = LayerKind::ResidualAdd;
    a4.residual_source = 2;
    model.nodes.push_back(std::move(a4));

    Node r5;
    r5.id = 5;
    r5.kind = LayerKind::ReLU;
    model.nodes.push_back(std::move(r5));

    Node g6;
    g6.id = 6;
    g6.kind = LayerKind::GlobalAvgPool;
    model.nodes.push_back(std::move(g6));

    Node d7;
    d7.id = 7;
    d7.kind = LayerKind::Dense;
    Tensor w7({4, 4});
    he_fill(w7, 4);
    d7.params.emplace("weight", std::move(w7));
    d7.params.emplace("bias", Tensor({4}));
    model.nodes.push_back(std::move(d7));

    validate_model(model);
    return model;
}

namespace detail {

// Index into a flat NCHW buffer.
inline std::size_t at4(int n, int c, int y, int x, int ch, int h, int w) {
    return static_cast<std::size_t>(((n * ch + c) * h + y) * w + x);
}

struct CnnWeights {
    static constexpr int c1 = 6, c2 = 8, classes = 4, hw = 8;
    std::vector<float> w1, b1;  // [c1,1,3,3], [c1]
    std::vector<float> w2, b2;  // [c2,c1,3,3], [c2]
    std::vector<float> w3, b3;  // [classes,c2], [classes]
};

// Padded 3x3 convolution forward over one batch, NCHW, unit stride.
inline void conv3x3_fwd(const float* in, int batch, int cin, const float* w,
                        const float* b, int cout, float* out) {
    constexpr int hw = CnnWeights::hw;
    for (int n = 0; n < batch; ++n)
        for (int co = 0; co < cout; ++co)
            for (int y = 0; y < hw; ++y)
                for (int x = 0; x < hw; ++x) {
                    float acc = b[co];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int ky = 0; ky < 3; ++ky) {
                            const int iy = y + ky - 1;
                            if (iy < 0 || iy >= hw) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int ix = x + kx - 1;
                                if (ix < 0 || ix >= hw) continue;
                                acc += in[at4(n, ci, iy, ix, cin, hw, hw)] *
                                       w[((co * cin + ci) * 3 + ky) * 3 + kx];
                            }
                        }
                    out[at4(n, co, y, x, cout, hw, hw)] = acc;
                }
}

// Gradients of the same convolution: accumulate into dw/db and write din.
inline void conv3x3_bwd(const float* in, const float* dout, int batch, int cin,
                        int cout, const float* w, float* dw, float* db,
                        float* din) {
    constexpr int hw = CnnWeights::hw;
    std::fill(din, din + static_cast<std::size_t>(batch) * cin * hw * hw, 0.0f);
    for (int n = 0; n < batch; ++n)
        for (int co = 0; co < cout; ++co)
            for (int y = 0; y < hw; ++y)
                for (int x = 0; x < hw; ++x) {
                    const float g = dout[at4(n, co, y, x, cout, hw, hw)];
                    db[co] += g;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int ky = 0; ky < 3; ++ky) {
                            const int iy = y + ky - 1;
                            if (iy < 0 || iy >= hw) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int ix = x + kx - 1;
                                if (ix < 0 || ix >= hw) continue;
                                const std::size_t ii =
                                    at4(n, ci, iy, ix, cin, hw, hw);
                                dw[((co * cin + ci) * 3 + ky) * 3 + kx] +=
                                    g * in[ii];
                                din[ii] +=
                                    g * w[((co * cin + ci) * 3 + ky) * 3 + kx];
                            }
                        }
                }
}

/// Plain SGD-with-momentum training of the no-BN fixture net on the stripes
/// task. Scalar loops throughout; runtime is a few seconds at fixture scale.
inline CnnWeights train_cnn(const Dataset& train, std::uint64_t seed,
                            int epochs, double lr, double momentum) {
    constexpr int c1 = CnnWeights::c1, c2 = CnnWeights::c2,
                  classes = CnnWeights::classes, hw = CnnWeights::hw;
    constexpr int batch_cap = 32;
    const int m = static_cast<int>(train.size());

    PhiloxRng rng(seed, 29);
    CnnWeights net;
    net.w1.resize(c1 * 9);
    net.b1.assign(c1, 0.0f);
    net.w2.resize(c2 * c1 * 9);
    net.b2.assign(c2, 0.0f);
    net.w3.resize(classes * c2);
    net.b3.assign(classes, 0.0f);
    const auto he = [&](std::vector<float>& w, int fan_in) {
        const double s = std::sqrt(2.0 / fan_in);
        for (float& v : w) v = static_cast<float>(s * rng.normal());
    };
    he(net.w1, 9);
    he(net.w2, c1 * 9);
    he(net.w3, c2);

    std::vector<float> vw1(net.w1.size()), vb1(net.b1.size()),
        vw2(net.w2.size()), vb2(net.b2.size()), vw3(net.w3.size()),
        vb3(net.b3.size());

    std::vector<float> x(batch_cap * hw * hw), z1(batch_cap * c1 * hw * hw),
        a1(z1.size()), z2(batch_cap * c2 * hw * hw), a2(z2.size()),
        feat(batch_cap * c2), logits(batch_cap * classes),
        dlogits(batch_cap * classes), dfeat(batch_cap * c2), da2(z2.size()),
        da1(z1.size()), dx(x.size());
    std::vector<float> gw1(net.w1.size()), gb1(net.b1.size()),
        gw2(net.w2.size()), gb2(net.b2.size()), gw3(net.w3.size()),
        gb3(net.b3.size());

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (int i = m - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(j)]);
        }
        for (int start = 0; start < m; start += batch_cap) {
            const int b = std::min(batch_cap, m - start);

            for (int n = 0; n < b; ++n) {
                const int src = order[static_cast<std::size_t>(start + n)];
                const float* sp =
                    train.inputs.data().data() + static_cast<std::size_t>(src) * hw * hw;
                std::copy(sp, sp + hw * hw, x.begin() + n * hw * hw);
            }

            conv3x3_fwd(x.data(), b, 1, net.w1.data(), net.b1.data(), c1,
                        z1.data());
            for (int i = 0; i < b * c1 * hw * hw; ++i)
                a1[i] = z1[i] > 0 ? z1[i] : 0.0f;
            conv3x3_fwd(a1.data(), b, c1, net.w2.data(), net.b2.data(), c2,
                        z2.data());
            for (int i = 0; i < b * c2 * hw * hw; ++i)
                a2[i] = z2[i] > 0 ? z2[i] : 0.0f;
            for (int n = 0; n < b; ++n)
                for (int c = 0; c < c2; ++c) {
                    float s = 0;
                    for (int i = 0; i < hw * hw; ++i)
                        s += a2[at4(n, c, 0, 0, c2, hw, hw) + i];
                    feat[n * c2 + c] = s / (hw * hw);
                }
            for (int n = 0; n < b; ++n)
                for (int k = 0; k < classes; ++k) {
                    float s = net.b3[k];
                    for (int c = 0; c < c2; ++c)
                        s += feat[n * c2 + c] * net.w3[k * c2 + c];
                    logits[n * classes + k] = s;
                }

            for (int n = 0; n < b; ++n) {
                float mx = logits[n * classes];
                for (int k = 1; k < classes; ++k)
                    mx = std::max(mx, logits[n * classes + k]);
                float denom = 0;
                for (int k = 0; k < classes; ++k)
                    denom += std::exp(logits[n * classes + k] - mx);
                const int label = train.labels[static_cast<std::size_t>(
                    order[static_cast<std::size_t>(start + n)])];
                for (int k = 0; k < classes; ++k) {
                    const float p =
                        std::exp(logits[n * classes + k] - mx) / denom;
                    dlogits[n * classes + k] =
                        (p - (k == label ? 1.0f : 0.0f)) / b;
                }
            }

            std::fill(gw1.begin(), gw1.end(), 0.0f);
            std::fill(gb1.begin(), gb1.end(), 0.0f);
            std::fill(gw2.begin(), gw2.end(), 0.0f);
            std::fill(gb2.begin(), gb2.end(), 0.0f);
            std::fill(gw3.begin(), gw3.end(), 0.0f);
            std::fill(gb3.begin(), gb3.end(), 0.0f);

            for (int n = 0; n < b; ++n)
                for (int k = 0; k < classes; ++k) {
                    const float g = dlogits[n * classes + k];
                    gb3[k] += g;
                    for (int c = 0; c < c2; ++c)
                        gw3[k * c2 + c] += g * feat[n * c2 + c];
                }
            for (int n = 0; n < b; ++n)
                for (int c = 0; c < c2; ++c) {
                    float s = 0;
                    for (int k = 0; k < classes; ++k)
                        s += dlogits[n * classes + k] * net.w3[k * c2 + c];
                    dfeat[n * c2 + c] = s;
                }
            for (int n = 0; n < b; ++n)
                for (int c = 0; c < c2; ++c) {
                    const float g = dfeat[n * c2 + c] / (hw * hw);
                    for (int i = 0; i < hw * hw; ++i) {
                        const std::size_t ii = at4(n, c, 0, 0, c2, hw, hw) + i;
                        da2[ii] = z2[ii] > 0 ? g : 0.0f;
                    }
                }
            conv3x3_bwd(a1.data(), da2.data(), b, c1, c2, net.w2.data(),
                        gw2.data(), gb2.data(), da1.data());
            for (int i = 0; i < b * c1 * hw * hw; ++i)
                if (z1[i] <= 0) da1[i] = 0.0f;
            conv3x3_bwd(x.data(), da1.data(), b, 1, c1, net.w1.data(),
                        gw1.data(), gb1.data(), dx.data());

            const auto step = [&](std::vector<float>& w, std::vector<float>& v,
                                  const std::vector<float>& g) {
                for (std::size_t i = 0; i < w.size(); ++i) {
                    v[i] = static_cast<float>(momentum * v[i] - lr * g[i]);
                    w[i] += v[i];
                }
            };
            step(net.w1, vw1, gw1);
            step(net.b1, vb1, gb1);
            step(net.w2, vw2, gw2);
            step(net.b2, vb2, gb2);
            step(net.w3, vw3, gw3);
            step(net.b3, vb3, gb3);
        }
    }
    return net;
}

inline Tensor to_tensor(const std::vector<float>& v,
                        std::vector<std::int64_t> shape) {
    Tensor t(std::move(shape));
    std::copy(v.begin(), v.end(), t.data().begin());
    return t;
}

}  // namespace detail

/// Trained stripes classifier without BatchNorm:
/// conv - relu - conv - relu - gap - dense. Three layer groups.
inline ModelGraph train_tiny_cnn_nobn(std::uint64_t seed = 7) {
    const Dataset train = make_stripes("stripes_train", 150, 1001);
    const detail::CnnWeights net = detail::train_cnn(train, seed, 30, 0.05, 0.9);
    constexpr int c1 = detail::CnnWeights::c1, c2 = detail::CnnWeights::c2;

    ModelGraph model;
    model.name = "tiny_cnn_nobn";
    model.input_shape = {1, 8, 8};
    model.class_count = 4;

    Node conv1;
    conv1.id = 0;
    conv1.kind = LayerKind::Conv;
    conv1.stride = 1;
    conv1.padding = 1;
    conv1.params.emplace("weight", detail::to_tensor(net.w1, {c1, 1, 3, 3}));
    conv1.params.emplace("bias", detail::to_tensor(net.b1, {c1}));
    model.nodes.push_back(std::move(conv1));

    Node r1;
    r1.id = 1;
    r1.kind = LayerKind::ReLU;
    model.nodes.push_back(std::move(r1));

    Node conv2;
    conv2.id = 2;
    conv2.kind = LayerKind::Conv;
    conv2.stride = 1;
    conv2.padding = 1;
    conv2.params.emplace("weight", detail::to_tensor(net.w2, {c2, c1, 3, 3}));
    conv2.params.emplace("bias", detail::to_tensor(net.b2, {c2}));
    model.nodes.push_back(std::move(conv2));

    Node r2;
    r2.id = 3;
    r2.kind = LayerKind::ReLU;
    model.nodes.push_back(std::move(r2));

    Node gap;
    gap.id = 4;
    gap.kind = LayerKind::GlobalAvgPool;
    model.nodes.push_back(std::move(gap));

    Node dense;
    dense.id = 5;
    dense.kind = LayerKind::Dense;
    Tensor w3({c2, 4});
    for (int k = 0; k < 4; ++k)
        for (int c = 0; c < c2; ++c)
            w3[static_cast<std::size_t>(c * 4 + k)] = net.w3[k * c2 + c];
    dense.params.emplace("weight", std::move(w3));
    dense.params.emplace("bias", detail::to_tensor(net.b3, {4}));
    model.nodes.push_back(std::move(dense));

    validate_model(model);
    return model;
}

/// Insert a BatchNorm node after each Conv, calibrated so that at inference
/// it reproduces the wrapped activation exactly: gamma = sqrt(var + eps) and
/// beta = mean make the affine form collapse to scale 1, shift 0, while the
/// stored statistics are the real per-channel moments of the calibration
/// set. Predictions therefore match the donor net bit for bit, and noise
/// injected into the BN group perturbs genuinely meaningful values.
inline ModelGraph add_batch_norm(const ModelGraph& donor, const Dataset& calib,
                                 const std::string& name) {
    ModelGraph model;
    model.name = name;
    model.input_shape = donor.input_shape;
    model.class_count = donor.class_count;

    // Per-channel moments of each Conv node's output over the calibration
    // set, in the donor graph (population formula, matching layer_sigma).
    std::vector<std::vector<double>> means, vars;
    {
        std::vector<std::vector<double>> sums, sq_sums;
        std::vector<std::int64_t> counts;
        for (const Node& n : donor.nodes)
            if (n.kind == LayerKind::Conv) {
                const std::int64_t c = n.params.at("weight").dim(0);
                sums.emplace_back(static_cast<std::size_t>(c), 0.0);
                sq_sums.emplace_back(static_cast<std::size_t>(c), 0.0);
                counts.push_back(0);
            }
        const std::int64_t m = calib.size();
        const std::int64_t per = calib.inputs.numel() / m;
        for (std::int64_t start = 0; start < m; start += 32) {
            const std::int64_t b = std::min<std::int64_t>(32, m - start);
            Tensor batch({b, calib.inputs.dim(1), calib.inputs.dim(2),
                          calib.inputs.dim(3)});
            const auto src = calib.inputs.data().subspan(
                static_cast<std::size_t>(start * per),
                static_cast<std::size_t>(b * per));
            std::copy(src.begin(), src.end(), batch.data().begin());

            Tensor cur = std::move(batch);
            std::size_t conv_index = 0;
            for (const Node& n : donor.nodes) {
                switch (n.kind) {
                    case LayerKind::Conv: {
                        const Tensor* bias = n.has_param("bias")
                                                 ? &n.params.at("bias")
                                                 : nullptr;
                        cur = conv2d(cur, n.params.at("weight"), bias, n.stride,
                                     n.padding);
                        const std::int64_t ch = cur.dim(1),
                                           hw = cur.dim(2) * cur.dim(3);
                        for (std::int64_t bi = 0; bi < b; ++bi)
                            for (std::int64_t c = 0; c < ch; ++c)
                                for (std::int64_t i = 0; i < hw; ++i) {
                                    const double v = cur[static_cast<std::size_t>(
                                        (bi * ch + c) * hw + i)];
                                    sums[conv_index][static_cast<std::size_t>(c)] += v;
                                    sq_sums[conv_index]
                                           [static_cast<std::size_t>(c)] += v * v;
                                }
                        counts[conv_index] += b * hw;
                        ++conv_index;
                        break;
                    }
                    case LayerKind::ReLU: cur = relu(cur); break;
                    case LayerKind::GlobalAvgPool: cur = global_avg_pool(cur); break;
                    case LayerKind::Dense:
                        cur = dense(anb::detail::flatten_rows(cur),
                                    n.params.at("weight"),
                                    n.has_param("bias") ? &n.params.at("bias")
                                                        : nullptr);
                        break;
                    default:
                        throw InvalidArgumentError(
                            "add_batch_norm supports conv/relu/gap/dense "
                            "donors only");
                }
            }
        }
        for (std::size_t k = 0; k < sums.size(); ++k) {
            means.emplace_back();
            vars.emplace_back();
            for (std::size_t c = 0; c < sums[k].size(); ++c) {
                const double mu = sums[k][c] / static_cast<double>(counts[k]);
                means[k].push_back(mu);
                vars[k].push_back(
                    std::max(0.0, sq_sums[k][c] / static_cast<double>(counts[k]) -
                                      mu * mu));
            }
        }
    }

    int id = 0;
    std::size_t conv_index = 0;
    for (const Node& src : donor.nodes) {
        Node n = src;
        n.id = id++;
        model.nodes.push_back(std::move(n));
        if (src.kind == LayerKind::Conv) {
            Node bn;
            bn.id = id++;
            bn.kind = LayerKind::BatchNorm;
            bn.epsilon = 1e-5f;
            const std::size_t ch = means[conv_index].size();
            Tensor gamma({static_cast<std::int64_t>(ch)}),
                beta({static_cast<std::int64_t>(ch)}),
                mean({static_cast<std::int64_t>(ch)}),
                var({static_cast<std::int64_t>(ch)});
            for (std::size_t c = 0; c < ch; ++c) {
                const float mu = static_cast<float>(means[conv_index][c]);
                const float v = static_cast<float>(vars[conv_index][c]);
                mean[c] = mu;
                var[c] = v;
                beta[c] = mu;
                // Same float expression the inference path evaluates, so
                // gamma / sqrt(var + eps) is exactly 1.
                gamma[c] = std::sqrt(v + bn.epsilon);
            }
            bn.params.emplace("gamma", std::move(gamma));
            bn.params.emplace("beta", std::move(beta));
            bn.params.emplace("moving_mean", std::move(mean));
            bn.params.emplace("moving_var", std::move(var));
            model.nodes.push_back(std::move(bn));
            ++conv_index;
        }
    }
    validate_model(model);
    return model;
}

/// Trained stripes classifier with calibrated BatchNorm after each Conv:
/// conv - bn - relu - conv - bn - relu - gap - dense. Five layer groups.
inline ModelGraph train_tiny_cnn(std::uint64_t seed = 7) {
    const ModelGraph nobn = train_tiny_cnn_nobn(seed);
    const Dataset calib = make_stripes("stripes_train", 150, 1001);
    return add_batch_norm(nobn, calib, "tiny_cnn");
}

/// Write every fixture model and dataset under out_dir. All seeds are baked
/// in; reruns anywhere produce identical files.
inline void make_fixtures(const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    save_model(build_tiny_mlp(), out_dir / "tiny_mlp.anb");
    const ModelGraph nobn = train_tiny_cnn_nobn(7);
    save_model(nobn, out_dir / "tiny_cnn_nobn.anb");
    const Dataset calib = make_stripes("stripes_train", 150, 1001);
    save_model(add_batch_norm(nobn, calib, "tiny_cnn"), out_dir / "tiny_cnn.anb");
    save_model(build_tiny_resnet(5), out_dir / "tiny_resnet.anb");
    save_dataset(make_stripes("stripes_test", 40, 2002),
                 out_dir / "stripes_test.and");
    save_dataset(make_onehot(), out_dir / "onehot.and");
}

}  // namespace anb::fixtures
