// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "csiaug/nn/layers.hpp"

namespace csiaug::nn {

// Multi-head self-attention over [N, T, D]. Dropout is applied to the
// attention probabilities and to the projected output.
template <typename S>
struct MultiHeadSelfAttention {
    int dim = 0, heads = 0, head_dim = 0;
    Linear<S> qkv, proj;
    Dropout<S> attn_drop, out_drop;

    MultiHeadSelfAttention() = default;
    MultiHeadSelfAttention(int dim_, int heads_, double dropout, Rng& rng)
        : dim(dim_),
          heads(heads_),
          head_dim(dim_ / heads_),
          qkv(dim_, 3 * dim_, rng),
          proj(dim_, dim_, rng),
          attn_drop(dropout),
          out_drop(dropout) {
        require<ConfigError>(dim % heads == 0, "attention: dim % heads != 0");
    }

    void collect(const std::string& prefix, Params<S>& out) {
        qkv.collect(prefix + ".qkv", out);
        proj.collect(prefix + ".proj", out);
    }

    Tensor<S> forward(const Tensor<S>& x, Rng& rng, bool training) {
        require<ShapeError>(x.rank() == 3 && x.dim(2) == dim, "attention: bad input shape");
        const int n = x.dim(0), t = x.dim(1);
        n_ = n;
        t_ = t;

        Tensor<S> qkv_out = qkv.forward(x);  // [N, T, 3D]
        q_ = Tensor<S>({n, heads, t, head_dim});
        k_ = Tensor<S>({n, heads, t, head_dim});
        v_ = Tensor<S>({n, heads, t, head_dim});
        for (int i = 0; i < n; ++i)
            for (int tt = 0; tt < t; ++tt)
                for (int h = 0; h < heads; ++h)
                    for (int d = 0; d < head_dim; ++d) {
                        q_.at(i, h, tt, d) = qkv_out.at(i, tt, h * head_dim + d);
                        k_.at(i, h, tt, d) = qkv_out.at(i, tt, dim + h * head_dim + d);
                        v_.at(i, h, tt, d) = qkv_out.at(i, tt, 2 * dim + h * head_dim + d);
                    }

        const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(head_dim)));
        Tensor<S> scores({n, heads, t, t});
        for (int i = 0; i < n; ++i)
            for (int h = 0; h < heads; ++h) {
                ConstMatMap<S> qm(q_.data() + slice(i, h, head_dim), t, head_dim);
                ConstMatMap<S> km(k_.data() + slice(i, h, head_dim), t, head_dim);
                MatMap<S> sm(scores.data() + slice(i, h, t), t, t);
                sm.noalias() = qm * km.transpose();
                sm *= scale;
            }

        probs_ = softmax_lastdim(scores);
        probs_dropped_ = attn_drop.forward(probs_, rng, training);

        Tensor<S> ctx({n, heads, t, head_dim});
        for (int i = 0; i < n; ++i)
            for (int h = 0; h < heads; ++h) {
                ConstMatMap<S> pm(probs_dropped_.data() + slice(i, h, t), t, t);
                ConstMatMap<S> vm(v_.data() + slice(i, h, head_dim), t, head_dim);
                MatMap<S> cm(ctx.data() + slice(i, h, head_dim), t, head_dim);
                cm.noalias() = pm * vm;
            }

        // Merge heads back to [N, T, D].
        Tensor<S> merged({n, t, dim});
        for (int i = 0; i < n; ++i)
            for (int tt = 0; tt < t; ++tt)
                for (int h = 0; h < heads; ++h)
                    for (int d = 0; d < head_dim; ++d)
                        merged.at(i, tt, h * head_dim + d) = ctx.at(i, h, tt, d);

        return out_drop.forward(proj.forward(merged), rng, training);
    }

    // Pre-dropout attention probabilities from the latest forward,
    // [N, heads, T, T]; each row is a distribution over key positions.
    const Tensor<S>& attention() const { return probs_; }

    Tensor<S> backward(const Tensor<S>& dy) {
        const int n = n_, t = t_;
        Tensor<S> dmerged = proj.backward(out_drop.backward(dy));

        Tensor<S> dctx({n, heads, t, head_dim});
        for (int i = 0; i < n; ++i)
            for (int tt = 0; tt < t; ++tt)
                for (int h = 0; h < heads; ++h)
                    for (int d = 0; d < head_dim; ++d)
                        dctx.at(i, h, tt, d) = dmerged.at(i, tt, h * head_dim + d);

        Tensor<S> dprobs_dropped({n, heads, t, t});
        Tensor<S> dv({n, heads, t, head_dim});
        for (int i = 0; i < n; ++i)
            for (int h = 0; h < heads; ++h) {
                ConstMatMap<S> dcm(dctx.data() + slice(i, h, head_dim), t, head_dim);
                ConstMatMap<S> vm(v_.data() + slice(i, h, head_dim), t, head_dim);
                ConstMatMap<S> pm(probs_dropped_.data() + slice(i, h, t), t, t);
                MatMap<S>(dprobs_dropped.data() + slice(i, h, t), t, t).noalias() =
                    dcm * vm.transpose();
                MatMap<S>(dv.data() + slice(i, h, head_dim), t, head_dim).noalias() =
                    pm.transpose() * dcm;
            }

        const Tensor<S> dprobs = attn_drop.backward(dprobs_dropped);

        // Softmax backward: ds = p * (dp - sum(dp * p)) per row.
        Tensor<S> dscores({n, heads, t, t});
        {
            const int rows = n * heads * t;
            for (int r = 0; r < rows; ++r) {
                const S* p = probs_.data() + static_cast<std::size_t>(r) * t;
                const S* dp = dprobs.data() + static_cast<std::size_t>(r) * t;
                S* ds = dscores.data() + static_cast<std::size_t>(r) * t;
                double dot = 0.0;
                for (int j = 0; j < t; ++j) dot += static_cast<double>(p[j]) * static_cast<double>(dp[j]);
                for (int j = 0; j < t; ++j)
                    ds[j] = static_cast<S>(static_cast<double>(p[j]) *
                                           (static_cast<double>(dp[j]) - dot));
            }
        }

        const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(head_dim)));
        Tensor<S> dq({n, heads, t, head_dim});
        Tensor<S> dk({n, heads, t, head_dim});
        for (int i = 0; i < n; ++i)
            for (int h = 0; h < heads; ++h) {
                MatMap<S> dsm(dscores.data() + slice(i, h, t), t, t);
                dsm *= scale;
                ConstMatMap<S> qm(q_.data() + slice(i, h, head_dim), t, head_dim);
                ConstMatMap<S> km(k_.data() + slice(i, h, head_dim), t, head_dim);
                MatMap<S>(dq.data() + slice(i, h, head_dim), t, head_dim).noalias() = dsm * km;
                MatMap<S>(dk.data() + slice(i, h, head_dim), t, head_dim).noalias() =
                    dsm.transpose() * qm;
            }

        Tensor<S> dqkv({n, t, 3 * dim});
        for (int i = 0; i < n; ++i)
            for (int tt = 0; tt < t; ++tt)
                for (int h = 0; h < heads; ++h)
                    for (int d = 0; d < head_dim; ++d) {
                        dqkv.at(i, tt, h * head_dim + d) = dq.at(i, h, tt, d);
                        dqkv.at(i, tt, dim + h * head_dim + d) = dk.at(i, h, tt, d);
                        dqkv.at(i, tt, 2 * dim + h * head_dim + d) = dv.at(i, h, tt, d);
                    }
        return qkv.backward(dqkv);
    }

private:
    int n_ = 0, t_ = 0;
    Tensor<S> q_, k_, v_, probs_, probs_dropped_;

    std::size_t slice(int i, int h, int inner) const {
        return (static_cast<std::size_t>(i) * heads + static_cast<std::size_t>(h)) *
               static_cast<std::size_t>(t_) * static_cast<std::size_t>(inner);
    }
};

}  // namespace csiaug::nn
