// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "csiaug/nn/layers.hpp"

namespace csiaug::nn {

template <typename S>
struct LossResult {
    double loss = 0.0;
    Tensor<S> grad;  // d(loss)/d(input), same shape as the input
};

// Mean squared error over all elements.
template <typename S>
inline LossResult<S> mse_loss(const Tensor<S>& pred, const Tensor<S>& target) {
    require<ShapeError>(pred.same_shape(target), "mse_loss: shape mismatch");
    require<InvalidInputError>(!pred.empty(), "mse_loss: empty input");
    LossResult<S> out;
    out.grad = Tensor<S>(pred.shape());
    const double inv_n = 1.0 / static_cast<double>(pred.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        acc += d * d;
        out.grad[i] = static_cast<S>(2.0 * d * inv_n);
    }
    out.loss = acc * inv_n;
    return out;
}

// Softmax cross entropy over logits [N, K]; loss averaged over the batch.
template <typename S>
struct CrossEntropyResult {
    double loss = 0.0;
    Tensor<S> dlogits;  // [N, K]
    Tensor<S> probs;    // [N, K]
};

template <typename S>
inline CrossEntropyResult<S> cross_entropy(const Tensor<S>& logits, const std::vector<int>& labels) {
    require<ShapeError>(logits.rank() == 2, "cross_entropy: logits must be [N, K]");
    const int n = logits.dim(0), k = logits.dim(1);
    require<ShapeError>(static_cast<int>(labels.size()) == n, "cross_entropy: label count mismatch");

    CrossEntropyResult<S> out;
    out.probs = softmax_lastdim(logits);
    out.dlogits = out.probs;
    double acc = 0.0;
    const double inv_n = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        require<ConfigError>(y >= 0 && y < k, "cross_entropy: label out of range");
        const double p = std::max(static_cast<double>(out.probs.at(i, y)), 1e-30);
        acc -= std::log(p);
        out.dlogits.at(i, y) -= S(1);
    }
    for (std::size_t i = 0; i < out.dlogits.numel(); ++i)
        out.dlogits[i] = static_cast<S>(static_cast<double>(out.dlogits[i]) * inv_n);
    out.loss = acc * inv_n;
    return out;
}

}  // namespace csiaug::nn
