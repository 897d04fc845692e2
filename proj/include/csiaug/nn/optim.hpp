// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "csiaug/nn/core.hpp"

namespace csiaug::nn {

// AdamW with decoupled weight decay (applied to every parameter). Moment
// tensors are keyed by parameter name so optimizer state survives checkpoint
// round trips irrespective of registration order.
template <typename S>
struct AdamW {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::uint64_t step_count = 0;

    void step(const Params<S>& params) {
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (const auto& p : params) {
            Tensor<S>& m = moment(m_, p);
            Tensor<S>& v = moment(v_, p);
            Tensor<S>& value = *p.value;
            const Tensor<S>& grad = *p.grad;
            for (std::size_t i = 0; i < value.numel(); ++i) {
                const double g = static_cast<double>(grad[i]);
                const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
                const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
                m[i] = static_cast<S>(mi);
                v[i] = static_cast<S>(vi);
                const double update = (mi / bc1) / (std::sqrt(vi / bc2) + eps);
                value[i] = static_cast<S>(static_cast<double>(value[i]) -
                                          lr * (update + weight_decay *
                                                             static_cast<double>(value[i])));
            }
        }
    }

    const std::map<std::string, Tensor<S>>& first_moments() const { return m_; }
    const std::map<std::string, Tensor<S>>& second_moments() const { return v_; }
    void set_moments(std::map<std::string, Tensor<S>> m, std::map<std::string, Tensor<S>> v) {
        m_ = std::move(m);
        v_ = std::move(v);
    }

private:
    std::map<std::string, Tensor<S>> m_, v_;

    Tensor<S>& moment(std::map<std::string, Tensor<S>>& store, const ParamRef<S>& p) {
        auto it = store.find(p.name);
        if (it == store.end()) it = store.emplace(p.name, Tensor<S>(p.value->shape())).first;
        require<ShapeError>(it->second.same_shape(*p.value), "AdamW: moment shape mismatch for " + p.name);
        return it->second;
    }
};

}  // namespace csiaug::nn
