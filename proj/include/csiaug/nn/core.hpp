// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "csiaug/rng.hpp"
#include "csiaug/tensor.hpp"

namespace csiaug::nn {

// Named view of one trainable tensor and its gradient accumulator. Layers hand
// these out by reference; the optimizer and checkpoint code key on the name.
template <typename S>
struct ParamRef {
    std::string name;
    Tensor<S>* value;
    Tensor<S>* grad;
};

template <typename S>
using Params = std::vector<ParamRef<S>>;

template <typename S>
inline void add_param(Params<S>& out, const std::string& name, Tensor<S>& value, Tensor<S>& grad) {
    out.push_back(ParamRef<S>{name, &value, &grad});
}

template <typename S>
inline std::size_t param_count(const Params<S>& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.value->numel();
    return n;
}

template <typename S>
inline void zero_grads(const Params<S>& params) {
    for (const auto& p : params) p.grad->zero();
}

// Row-major matrix views over tensor storage, for Eigen GEMM.
template <typename S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename S>
inline MatMap<S> as_matrix(Tensor<S>& t, int rows, int cols) {
    require<ShapeError>(t.numel() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                        "as_matrix: element count mismatch");
    return MatMap<S>(t.data(), rows, cols);
}

template <typename S>
inline ConstMatMap<S> as_matrix(const Tensor<S>& t, int rows, int cols) {
    require<ShapeError>(t.numel() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                        "as_matrix: element count mismatch");
    return ConstMatMap<S>(t.data(), rows, cols);
}

// Uniform fan-in initialization (the usual convolution/linear default):
// weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), same bound for the bias.
template <typename S>
inline void init_fan_in_uniform(Tensor<S>& w, Tensor<S>* bias, int fan_in, Rng& rng) {
    require<ConfigError>(fan_in > 0, "init_fan_in_uniform: fan_in must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    rng.fill_uniform(w.flat(), -bound, bound);
    if (bias) rng.fill_uniform(bias->flat(), -bound, bound);
}

}  // namespace csiaug::nn
