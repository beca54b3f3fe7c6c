#pragma once

#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "secnn/errors.hpp"

namespace secnn {

inline std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

inline std::size_t shape_volume(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
}

// Dense row-major N-dimensional array, last axis fastest. The element type
// is float on the training path and double on the verification path.
// A zero extent is only legal for the empty-dataset case; every kernel
// checks for the extents it needs.
template <std::floating_point T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(shape_volume(shape_), T{0}) {}

    Tensor(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_volume(shape_)) {
            throw shape_error("tensor data size " + std::to_string(data_.size()) +
                              " does not match shape " + shape_to_string(shape_));
        }
    }

    static Tensor full(std::vector<std::size_t> shape, T value) {
        Tensor t(std::move(shape));
        t.fill(value);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t flat) { return data_[flat]; }
    const T& operator[](std::size_t flat) const { return data_[flat]; }

    template <typename... Ix>
    T& operator()(Ix... ix) {
        return data_[offset(ix...)];
    }
    template <typename... Ix>
    const T& operator()(Ix... ix) const {
        return data_[offset(ix...)];
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    // Same storage under a new shape; volumes must agree.
    Tensor reshaped(std::vector<std::size_t> new_shape) const {
        if (shape_volume(new_shape) != data_.size()) {
            throw shape_error("reshape " + shape_to_string(shape_) + " -> " +
                              shape_to_string(new_shape) + " changes the element count");
        }
        return Tensor(std::move(new_shape), data_);
    }

    template <std::floating_point U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return Tensor<U>(shape_, std::move(out));
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    template <typename... Ix>
    std::size_t offset(Ix... ix) const {
        const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
        std::size_t flat = 0;
        for (std::size_t axis = 0; axis < sizeof...(Ix); ++axis) {
            flat = flat * shape_[axis] + idx[axis];
        }
        return flat;
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

template <std::floating_point T>
void require_shape(const Tensor<T>& t, const std::vector<std::size_t>& expected,
                   const char* what) {
    if (t.shape() != expected) {
        throw shape_error(std::string(what) + ": expected " + shape_to_string(expected) +
                          ", got " + shape_to_string(t.shape()));
    }
}

template <std::floating_point T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw shape_error(std::string(what) + ": expected rank " + std::to_string(rank) +
                          ", got shape " + shape_to_string(t.shape()));
    }
}

}  // namespace secnn
