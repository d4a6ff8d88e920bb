#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tempotrack/error.hpp"

namespace tempotrack {

// Dense row-major float32 tensor. The one value type every operator in the
// library consumes and produces. Copyable, movable, no aliasing: each tensor
// owns its storage.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled tensor of the given extents.
    explicit Tensor(std::vector<int> shape)
        : shape_(std::move(shape)), data_(checked_size(shape_), 0.0f) {}

    Tensor(std::vector<int> shape, std::vector<float> values)
        : shape_(std::move(shape)), data_(std::move(values)) {
        if (data_.size() != checked_size(shape_)) {
            throw DimensionError("tensor: data length does not match shape product");
        }
    }

    static Tensor full(std::vector<int> shape, float value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& at(int i) {
        assert(rank() == 1);
        return data_[static_cast<std::size_t>(i)];
    }
    float at(int i) const { return const_cast<Tensor*>(this)->at(i); }

    float& at(int i, int j) {
        assert(rank() == 2);
        return data_[static_cast<std::size_t>(i) * dim(1) + j];
    }
    float at(int i, int j) const { return const_cast<Tensor*>(this)->at(i, j); }

    float& at(int i, int j, int k) {
        assert(rank() == 3);
        return data_[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    float at(int i, int j, int k) const { return const_cast<Tensor*>(this)->at(i, j, k); }

    float& at(int i, int j, int k, int l) {
        assert(rank() == 4);
        return data_[((static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k) * dim(3) + l];
    }
    float at(int i, int j, int k, int l) const {
        return const_cast<Tensor*>(this)->at(i, j, k, l);
    }

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }
    bool operator!=(const Tensor& other) const { return !(*this == other); }

private:
    static std::size_t checked_size(const std::vector<int>& shape) {
        if (shape.empty()) {
            throw DimensionError("tensor: shape must have at least one extent");
        }
        std::size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw DimensionError("tensor: extents must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::vector<int> shape_;
    std::vector<float> data_;
};

inline std::string shape_string(const Tensor& t) {
    std::string s = "[";
    for (int i = 0; i < t.rank(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.dim(i));
    }
    s += "]";
    return s;
}

}  // namespace tempotrack
