#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anb/errors.hpp"

namespace anb {

inline std::string shape_str(std::span<const std::int64_t> dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(dims[i]);
    }
    return s.empty() ? std::string("scalar") : s;
}

/// Dense row-major float32 tensor. The shape is fixed at construction;
/// element values may be overwritten in place (parameter updates, noise).
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0f) {}

    Tensor(std::vector<std::int64_t> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::size_t>(checked_numel(shape_)) != data_.size())
            throw ShapeError("tensor " + shape_str(shape_) + " expects " +
                             std::to_string(checked_numel(shape_)) +
                             " elements, got " + std::to_string(data_.size()));
    }

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t dim(std::size_t i) const { return shape_.at(i); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    float operator[](std::size_t i) const { return data_[i]; }
    float& operator[](std::size_t i) { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    static std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
        std::int64_t n = 1;
        for (std::int64_t d : shape) {
            if (d <= 0)
                throw ShapeError("tensor shape " + shape_str(shape) +
                                 " has a non-positive dimension");
            n *= d;
        }
        return n;
    }

    std::vector<std::int64_t> shape_;
    std::vector<float> data_;
};

}  // namespace anb
