#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "anb/tensor.hpp"

namespace anb {

namespace detail {

// C[m x n] = A[m x k] * B[k x n], row-major, float accumulation.
inline void gemm_nn(const float* a, const float* b, float* c, std::int64_t m,
                    std::int64_t k, std::int64_t n) {
    std::fill(c, c + m * n, 0.0f);
    for (std::int64_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const float av = arow[p];
            const float* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m x n] = A[m x k] * B[n x k]^T, row-major, float accumulation.
inline void gemm_nt(const float* a, const float* b, float* c, std::int64_t m,
                    std::int64_t k, std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        for (std::int64_t j = 0; j < n; ++j) {
            const float* brow = b + j * k;
            float acc = 0.0f;
            for (std::int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[i * n + j] = acc;
        }
    }
}

}  // namespace detail

/// 2-D cross-correlation, NCHW input against OIHW kernel.
/// Output spatial size is floor((in + 2*padding - k)/stride) + 1.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel,
                     const Tensor* bias, int stride, int padding) {
    if (input.rank() != 4 || kernel.rank() != 4)
        throw ShapeError("conv2d: input " + shape_str(input.shape()) +
                         " and kernel " + shape_str(kernel.shape()) +
                         " must both be rank 4");
    if (stride < 1) throw InvalidArgumentError("conv2d: stride must be >= 1");
    if (padding < 0) throw InvalidArgumentError("conv2d: padding must be >= 0");
    const std::int64_t n = input.dim(0), ci = input.dim(1), h = input.dim(2),
                       w = input.dim(3);
    const std::int64_t co = kernel.dim(0), ki = kernel.dim(1),
                       kh = kernel.dim(2), kw = kernel.dim(3);
    if (ci != ki)
        throw ShapeError("conv2d: input " + shape_str(input.shape()) +
                         " has " + std::to_string(ci) +
                         " channels but kernel " + shape_str(kernel.shape()) +
                         " expects " + std::to_string(ki));
    const std::int64_t oh = (h + 2 * padding - kh) / stride + 1;
    const std::int64_t ow = (w + 2 * padding - kw) / stride + 1;
    if (h + 2 * padding < kh || w + 2 * padding < kw || oh < 1 || ow < 1)
        throw ShapeError("conv2d: input " + shape_str(input.shape()) +
                         " too small for kernel " + shape_str(kernel.shape()) +
                         " at stride " + std::to_string(stride) + ", padding " +
                         std::to_string(padding));
    if (bias && (bias->rank() != 1 || bias->dim(0) != co))
        throw ShapeError("conv2d: bias " + shape_str(bias->shape()) +
                         " does not match kernel " + shape_str(kernel.shape()));

    // im2col: one patch row per output position, then a single GEMM.
    const std::int64_t patch = ci * kh * kw;
    const std::int64_t rows = n * oh * ow;
    std::vector<float> cols(static_cast<std::size_t>(rows * patch), 0.0f);
    const float* in = input.data().data();
    for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                float* dst = cols.data() + ((b * oh + oy) * ow + ox) * patch;
                for (std::int64_t c = 0; c < ci; ++c) {
                    for (std::int64_t ky = 0; ky < kh; ++ky) {
                        const std::int64_t iy = oy * stride - padding + ky;
                        for (std::int64_t kx = 0; kx < kw; ++kx) {
                            const std::int64_t ix = ox * stride - padding + kx;
                            float v = 0.0f;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                v = in[((b * ci + c) * h + iy) * w + ix];
                            dst[(c * kh + ky) * kw + kx] = v;
                        }
                    }
                }
            }
        }
    }

    std::vector<float> prod(static_cast<std::size_t>(rows * co));
    detail::gemm_nt(cols.data(), kernel.data().data(), prod.data(), rows, patch,
                    co);

    Tensor out({n, co, oh, ow});
    float* o = out.data().data();
    const float* bz = bias ? bias->data().data() : nullptr;
    for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t c = 0; c < co; ++c)
            for (std::int64_t oy = 0; oy < oh; ++oy)
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    float v = prod[((b * oh + oy) * ow + ox) * co + c];
                    if (bz) v += bz[c];
                    o[((b * co + c) * oh + oy) * ow + ox] = v;
                }
    return out;
}

/// Matrix product plus broadcast bias: [n x f] * [f x g] (+ bias[g]).
inline Tensor dense(const Tensor& input, const Tensor& weight,
                    const Tensor* bias) {
    if (input.rank() != 2 || weight.rank() != 2)
        throw ShapeError("dense: input " + shape_str(input.shape()) +
                         " and weight " + shape_str(weight.shape()) +
                         " must both be rank 2");
    const std::int64_t n = input.dim(0), f = input.dim(1);
    const std::int64_t wf = weight.dim(0), g = weight.dim(1);
    if (f != wf)
        throw ShapeError("dense: input " + shape_str(input.shape()) +
                         " inner dim does not match weight " +
                         shape_str(weight.shape()));
    if (bias && (bias->rank() != 1 || bias->dim(0) != g))
        throw ShapeError("dense: bias " + shape_str(bias->shape()) +
                         " does not match weight " + shape_str(weight.shape()));
    Tensor out({n, g});
    detail::gemm_nn(input.data().data(), weight.data().data(),
                    out.data().data(), n, f, g);
    if (bias) {
        float* o = out.data().data();
        const float* bz = bias->data().data();
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < g; ++j) o[i * g + j] += bz[j];
    }
    return out;
}

/// Inference-mode batch norm over the channel dimension (dim 1):
/// (x - mean)/sqrt(var + eps) * gamma + beta.
inline Tensor batch_norm_inference(const Tensor& input, const Tensor& gamma,
                                   const Tensor& beta,
                                   const Tensor& moving_mean,
                                   const Tensor& moving_var, float epsilon) {
    if (input.rank() < 2)
        throw ShapeError("batch_norm: input " + shape_str(input.shape()) +
                         " must have a channel dimension");
    const std::int64_t c = input.dim(1);
    for (const Tensor* t : {&gamma, &beta, &moving_mean, &moving_var})
        if (t->rank() != 1 || t->dim(0) != c)
            throw ShapeError("batch_norm: parameter " + shape_str(t->shape()) +
                             " does not match input " +
                             shape_str(input.shape()) + " with " +
                             std::to_string(c) + " channels");
    const float* var = moving_var.data().data();
    for (std::int64_t i = 0; i < c; ++i)
        if (var[i] < 0.0f)
            throw InvalidArgumentError(
                "batch_norm: negative variance entry at channel " +
                std::to_string(i) + " (corrupt model file)");

    const std::int64_t n = input.dim(0);
    std::int64_t inner = 1;
    for (std::size_t d = 2; d < input.rank(); ++d) inner *= input.dim(d);

    Tensor out(input.shape());
    const float* in = input.data().data();
    float* o = out.data().data();
    const float* ga = gamma.data().data();
    const float* be = beta.data().data();
    const float* mu = moving_mean.data().data();
    for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const float den = std::sqrt(var[ch] + epsilon);
            const std::int64_t base = (b * c + ch) * inner;
            for (std::int64_t i = 0; i < inner; ++i)
                o[base + i] = (in[base + i] - mu[ch]) / den * ga[ch] + be[ch];
        }
    return out;
}

inline Tensor relu(const Tensor& input) {
    Tensor out(input.shape());
    const float* in = input.data().data();
    float* o = out.data().data();
    for (std::int64_t i = 0; i < input.numel(); ++i)
        o[i] = in[i] > 0.0f ? in[i] : 0.0f;
    return out;
}

inline Tensor max_pool2d(const Tensor& input, int k, int stride) {
    if (input.rank() != 4)
        throw ShapeError("max_pool2d: input " + shape_str(input.shape()) +
                         " must be rank 4");
    if (k < 1 || stride < 1)
        throw InvalidArgumentError("max_pool2d: window and stride must be >= 1");
    const std::int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2),
                       w = input.dim(3);
    const std::int64_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
    if (h < k || w < k || oh < 1 || ow < 1)
        throw ShapeError("max_pool2d: input " + shape_str(input.shape()) +
                         " too small for window " + std::to_string(k));
    Tensor out({n, c, oh, ow});
    const float* in = input.data().data();
    float* o = out.data().data();
    for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t ch = 0; ch < c; ++ch)
            for (std::int64_t oy = 0; oy < oh; ++oy)
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    float best = -std::numeric_limits<float>::infinity();
                    for (std::int64_t ky = 0; ky < k; ++ky)
                        for (std::int64_t kx = 0; kx < k; ++kx) {
                            const float v =
                                in[((b * c + ch) * h + oy * stride + ky) * w +
                                   ox * stride + kx];
                            if (v > best) best = v;
                        }
                    o[((b * c + ch) * oh + oy) * ow + ox] = best;
                }
    return out;
}

/// NCHW -> [n x c] spatial mean.
inline Tensor global_avg_pool(const Tensor& input) {
    if (input.rank() != 4)
        throw ShapeError("global_avg_pool: input " + shape_str(input.shape()) +
                         " must be rank 4");
    const std::int64_t n = input.dim(0), c = input.dim(1),
                       hw = input.dim(2) * input.dim(3);
    Tensor out({n, c});
    const float* in = input.data().data();
    float* o = out.data().data();
    for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t ch = 0; ch < c; ++ch) {
            float acc = 0.0f;
            const float* p = in + (b * c + ch) * hw;
            for (std::int64_t i = 0; i < hw; ++i) acc += p[i];
            o[b * c + ch] = acc / static_cast<float>(hw);
        }
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("add: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
    Tensor out(a.shape());
    const float* pa = a.data().data();
    const float* pb = b.data().data();
    float* o = out.data().data();
    for (std::int64_t i = 0; i < a.numel(); ++i) o[i] = pa[i] + pb[i];
    return out;
}

/// Row-wise softmax of an [n x k] tensor, max-shifted for stability.
inline Tensor softmax(const Tensor& input) {
    if (input.rank() != 2)
        throw ShapeError("softmax: input " + shape_str(input.shape()) +
                         " must be rank 2");
    const std::int64_t n = input.dim(0), k = input.dim(1);
    Tensor out(input.shape());
    const float* in = input.data().data();
    float* o = out.data().data();
    for (std::int64_t r = 0; r < n; ++r) {
        const float* row = in + r * k;
        float mx = row[0];
        for (std::int64_t j = 1; j < k; ++j)
            if (row[j] > mx) mx = row[j];
        float sum = 0.0f;
        for (std::int64_t j = 0; j < k; ++j) {
            const float e = std::exp(row[j] - mx);
            o[r * k + j] = e;
            sum += e;
        }
        for (std::int64_t j = 0; j < k; ++j) o[r * k + j] /= sum;
    }
    return out;
}

/// Per-row argmax of an [n x k] tensor; ties break toward the lowest index.
inline std::vector<int> argmax_rows(const Tensor& input) {
    if (input.rank() != 2)
        throw ShapeError("argmax_rows: input " + shape_str(input.shape()) +
                         " must be rank 2");
    const std::int64_t n = input.dim(0), k = input.dim(1);
    const float* in = input.data().data();
    std::vector<int> out(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < n; ++r) {
        int best = 0;
        float bv = in[r * k];
        for (std::int64_t j = 1; j < k; ++j)
            if (in[r * k + j] > bv) {
                bv = in[r * k + j];
                best = static_cast<int>(j);
            }
        out[r] = best;
    }
    return out;
}

}  // namespace anb
