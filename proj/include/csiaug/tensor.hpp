// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <new>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "csiaug/common.hpp"

namespace csiaug {

namespace detail {

// All tensor buffers start on a 64-byte boundary.  SIMD kernels peel
// unaligned heads before the vector body, so with arbitrary heap addresses
// the association order of reductions — and therefore the rounded result —
// would vary run to run.  A fixed alignment pins those code paths and keeps
// the numerics bit-reproducible on one machine.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(alignment)));
    }
    void deallocate(T* p, std::size_t) noexcept {
        ::operator delete(p, std::align_val_t(alignment));
    }
    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
};

}  // namespace detail

// Dense row-major tensor of up to rank 4. Plain value type: copy/move do what
// vectors do, no views, no reference counting. All shapes are known at runtime.
template <typename S>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), S(0));
    }

    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, S value) {
        Tensor t(std::move(shape));
        t.fill(value);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }

    int dim(int i) const {
        if (i < 0) i += rank();
        require<ShapeError>(i >= 0 && i < rank(), "Tensor::dim index out of range");
        return shape_[static_cast<std::size_t>(i)];
    }

    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }
    std::span<S> flat() { return {data_.data(), data_.size()}; }
    std::span<const S> flat() const { return {data_.data(), data_.size()}; }

    S& operator[](std::size_t i) { return data_[i]; }
    const S& operator[](std::size_t i) const { return data_[i]; }

    S& at(int i) { return data_[idx(i)]; }
    const S& at(int i) const { return data_[idx(i)]; }
    S& at(int i, int j) { return data_[idx(i, j)]; }
    const S& at(int i, int j) const { return data_[idx(i, j)]; }
    S& at(int i, int j, int k) { return data_[idx(i, j, k)]; }
    const S& at(int i, int j, int k) const { return data_[idx(i, j, k)]; }
    S& at(int i, int j, int k, int l) { return data_[idx(i, j, k, l)]; }
    const S& at(int i, int j, int k, int l) const { return data_[idx(i, j, k, l)]; }

    void fill(S value) { std::fill(data_.begin(), data_.end(), value); }

    void zero() { fill(S(0)); }

    // Reinterprets the buffer with a new shape of equal element count.
    Tensor reshaped(std::vector<int> shape) const {
        require<ShapeError>(checked_numel(shape) == numel(), "Tensor::reshaped: element count mismatch");
        Tensor out;
        out.shape_ = std::move(shape);
        out.data_ = data_;
        return out;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Tensor& operator+=(const Tensor& o) {
        require<ShapeError>(same_shape(o), "Tensor += shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Tensor& operator-=(const Tensor& o) {
        require<ShapeError>(same_shape(o), "Tensor -= shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    Tensor& operator*=(S v) {
        for (auto& x : data_) x *= v;
        return *this;
    }

    // this += alpha * other
    void axpy(S alpha, const Tensor& o) {
        require<ShapeError>(same_shape(o), "Tensor::axpy shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * o.data_[i];
    }

    S min_value() const {
        require<InvalidInputError>(!empty(), "Tensor::min_value on empty tensor");
        return *std::min_element(data_.begin(), data_.end());
    }

    S max_value() const {
        require<InvalidInputError>(!empty(), "Tensor::max_value on empty tensor");
        return *std::max_element(data_.begin(), data_.end());
    }

    double sum() const {
        double acc = 0.0;
        for (const auto& x : data_) acc += static_cast<double>(x);
        return acc;
    }

    double mean() const {
        require<InvalidInputError>(!empty(), "Tensor::mean on empty tensor");
        return sum() / static_cast<double>(numel());
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](S v) { return std::isfinite(static_cast<double>(v)); });
    }

    template <typename S2>
    Tensor<S2> cast() const {
        Tensor<S2> out;
        out.set_shape_and_data(shape_, [&](auto& dst) {
            dst.resize(data_.size());
            for (std::size_t i = 0; i < data_.size(); ++i) dst[i] = static_cast<S2>(data_[i]);
        });
        return out;
    }

    std::string shape_string() const {
        std::ostringstream os;
        os << '[';
        for (int i = 0; i < rank(); ++i) os << (i ? "," : "") << shape_[static_cast<std::size_t>(i)];
        os << ']';
        return os.str();
    }

    template <typename F>
    void set_shape_and_data(const std::vector<int>& shape, F&& writer) {
        shape_ = shape;
        writer(data_);
        require<ShapeError>(data_.size() == checked_numel(shape_),
                            "Tensor::set_shape_and_data: size mismatch");
    }

private:
    static std::size_t checked_numel(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            require<ShapeError>(d >= 0, "Tensor: negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t idx(int i) const {
        return static_cast<std::size_t>(i);
    }
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
               static_cast<std::size_t>(j);
    }
    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(shape_[2]) +
               static_cast<std::size_t>(k);
    }
    std::size_t idx(int i, int j, int k, int l) const {
        return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
                 static_cast<std::size_t>(j)) *
                    static_cast<std::size_t>(shape_[2]) +
                static_cast<std::size_t>(k)) *
                   static_cast<std::size_t>(shape_[3]) +
               static_cast<std::size_t>(l);
    }

    std::vector<int> shape_;
    std::vector<S, detail::AlignedAllocator<S>> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace csiaug
