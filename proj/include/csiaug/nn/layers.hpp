// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0
//
// Hand-written layers with explicit forward/backward passes. Contract shared
// by every layer here:
//   - forward() caches whatever the gradient needs; backward(dy) must follow
//     the matching forward exactly once and returns dx,
//   - parameter gradients ACCUMULATE into the d* tensors; call zero_grads()
//     between optimizer steps,
//   - a layer instance therefore appears at most once per forward pass.
// Convolutions lower onto im2col + GEMM; the column buffer is rebuilt in the
// backward pass instead of cached (memory stays bounded by activations).

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "csiaug/nn/core.hpp"

namespace csiaug::nn {

// ---------------------------------------------------------------------------
// Linear: y = x W^T + b over the last dimension.
template <typename S>
struct Linear {
    int in_features = 0;
    int out_features = 0;
    bool has_bias = true;
    Tensor<S> weight, bias, dweight, dbias;

    Linear() = default;
    Linear(int in, int out, Rng& rng, bool with_bias = true)
        : in_features(in),
          out_features(out),
          has_bias(with_bias),
          weight({out, in}),
          bias(with_bias ? Tensor<S>({out}) : Tensor<S>()),
          dweight({out, in}),
          dbias(with_bias ? Tensor<S>({out}) : Tensor<S>()) {
        init_fan_in_uniform(weight, has_bias ? &bias : nullptr, in, rng);
    }

    void collect(const std::string& prefix, Params<S>& out) {
        add_param(out, prefix + ".weight", weight, dweight);
        if (has_bias) add_param(out, prefix + ".bias", bias, dbias);
    }

    Tensor<S> forward(const Tensor<S>& x) {
        require<ShapeError>(x.rank() >= 1 && x.dim(-1) == in_features,
                            "Linear: last dim != in_features");
        input_ = x;
        const int m = static_cast<int>(x.numel()) / in_features;
        std::vector<int> out_shape = x.shape();
        out_shape.back() = out_features;
        Tensor<S> y(out_shape);
        as_matrix(y, m, out_features).noalias() =
            as_matrix(x, m, in_features) * as_matrix(weight, out_features, in_features).transpose();
        if (has_bias) {
            auto ym = as_matrix(y, m, out_features);
            ym.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(bias.data(),
                                                                                  out_features);
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        require<ShapeError>(dy.dim(-1) == out_features, "Linear: bad upstream gradient shape");
        const int m = static_cast<int>(dy.numel()) / out_features;
        as_matrix(dweight, out_features, in_features).noalias() +=
            as_matrix(dy, m, out_features).transpose() * as_matrix(input_, m, in_features);
        if (has_bias) {
            Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>> db(dbias.data(), out_features);
            db += as_matrix(dy, m, out_features).colwise().sum();
        }
        Tensor<S> dx(input_.shape());
        as_matrix(dx, m, in_features).noalias() =
            as_matrix(dy, m, out_features) * as_matrix(weight, out_features, in_features);
        return dx;
    }

private:
    Tensor<S> input_;
};

// ---------------------------------------------------------------------------
// Conv2d with square kernel, symmetric zero padding.
template <typename S>
struct Conv2d {
    int in_channels = 0, out_channels = 0, kernel = 0, stride = 1, pad = 0;
    Tensor<S> weight, bias, dweight, dbias;  // weight [Cout, Cin, k, k]

    Conv2d() = default;
    Conv2d(int cin, int cout, int k, int stride_, int pad_, Rng& rng)
        : in_channels(cin),
          out_channels(cout),
          kernel(k),
          stride(stride_),
          pad(pad_),
          weight({cout, cin, k, k}),
          bias({cout}),
          dweight({cout, cin, k, k}),
          dbias({cout}) {
        init_fan_in_uniform(weight, &bias, cin * k * k, rng);
    }

    void collect(const std::string& prefix, Params<S>& out) {
        add_param(out, prefix + ".weight", weight, dweight);
        add_param(out, prefix + ".bias", bias, dbias);
    }

    int out_size(int in) const { return (in + 2 * pad - kernel) / stride + 1; }

    Tensor<S> forward(const Tensor<S>& x) {
        require<ShapeError>(x.rank() == 4 && x.dim(1) == in_channels, "Conv2d: bad input shape");
        input_ = x;
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int oh = out_size(h), ow = out_size(w);
        require<ShapeError>(oh > 0 && ow > 0, "Conv2d: output collapsed to zero size");

        Tensor<S> y({n, out_channels, oh, ow});
        Tensor<S> col({in_channels * kernel * kernel, oh * ow});
        for (int i = 0; i < n; ++i) {
            im2col(x, i, col);
            MatMap<S>(y.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(out_channels) * oh * ow,
                      out_channels, oh * ow)
                .noalias() = as_matrix(weight, out_channels, in_channels * kernel * kernel) *
                             as_matrix(col, in_channels * kernel * kernel, oh * ow);
            for (int c = 0; c < out_channels; ++c) {
                S* dst = y.data() + ((static_cast<std::size_t>(i) * out_channels + c) *
                                     static_cast<std::size_t>(oh) * ow);
                const S b = bias[static_cast<std::size_t>(c)];
                for (int j = 0; j < oh * ow; ++j) dst[j] += b;
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        const int n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
        const int oh = out_size(h), ow = out_size(w);
        require<ShapeError>(dy.rank() == 4 && dy.dim(0) == n && dy.dim(1) == out_channels &&
                                dy.dim(2) == oh && dy.dim(3) == ow,
                            "Conv2d: bad upstream gradient shape");

        Tensor<S> dx(input_.shape());
        Tensor<S> col({in_channels * kernel * kernel, oh * ow});
        Tensor<S> dcol({in_channels * kernel * kernel, oh * ow});
        for (int i = 0; i < n; ++i) {
            ConstMatMap<S> dym(dy.data() + static_cast<std::size_t>(i) *
                                               static_cast<std::size_t>(out_channels) * oh * ow,
                               out_channels, oh * ow);
            im2col(input_, i, col);
            as_matrix(dweight, out_channels, in_channels * kernel * kernel).noalias() +=
                dym * as_matrix(col, in_channels * kernel * kernel, oh * ow).transpose();
            as_matrix(dcol, in_channels * kernel * kernel, oh * ow).noalias() =
                as_matrix(weight, out_channels, in_channels * kernel * kernel).transpose() * dym;
            col2im(dcol, i, dx);
            Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(dbias.data(), out_channels) +=
                dym.rowwise().sum();
        }
        return dx;
    }

private:
    Tensor<S> input_;

    void im2col(const Tensor<S>& x, int sample, Tensor<S>& col) const {
        const int h = x.dim(2), w = x.dim(3);
        const int oh = out_size(h), ow = out_size(w);
        S* out = col.data();
        for (int c = 0; c < in_channels; ++c) {
            const S* src = x.data() + ((static_cast<std::size_t>(sample) * in_channels + c) *
                                       static_cast<std::size_t>(h) * w);
            for (int ki = 0; ki < kernel; ++ki) {
                for (int kj = 0; kj < kernel; ++kj) {
                    for (int oi = 0; oi < oh; ++oi) {
                        const int ii = oi * stride + ki - pad;
                        if (ii < 0 || ii >= h) {
                            for (int oj = 0; oj < ow; ++oj) *out++ = S(0);
                            continue;
                        }
                        for (int oj = 0; oj < ow; ++oj) {
                            const int jj = oj * stride + kj - pad;
                            *out++ = (jj < 0 || jj >= w) ? S(0) : src[ii * w + jj];
                        }
                    }
                }
            }
        }
    }

    void col2im(const Tensor<S>& dcol, int sample, Tensor<S>& dx) const {
        const int h = dx.dim(2), w = dx.dim(3);
        const int oh = out_size(h), ow = out_size(w);
        const S* in = dcol.data();
        for (int c = 0; c < in_channels; ++c) {
            S* dst = dx.data() + ((static_cast<std::size_t>(sample) * in_channels + c) *
                                  static_cast<std::size_t>(h) * w);
            for (int ki = 0; ki < kernel; ++ki) {
                for (int kj = 0; kj < kernel; ++kj) {
                    for (int oi = 0; oi < oh; ++oi) {
                        const int ii = oi * stride + ki - pad;
                        if (ii < 0 || ii >= h) {
                            in += ow;
                            continue;
                        }
                        for (int oj = 0; oj < ow; ++oj) {
                            const int jj = oj * stride + kj - pad;
                            if (jj >= 0 && jj < w) dst[ii * w + jj] += *in;
                            ++in;
                        }
                    }
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// GroupNorm over [N, C, H, W]; statistics per (sample, group).
template <typename S>
struct GroupNorm {
    int num_groups = 0, channels = 0;
    double eps = 1e-5;
    Tensor<S> gamma, beta, dgamma, dbeta;

    GroupNorm() = default;
    GroupNorm(int groups, int channels_, double eps_ = 1e-5)
        : num_groups(groups), channels(channels_), eps(eps_) {
        require<ConfigError>(channels % groups == 0, "GroupNorm: channels % groups != 0");
        gamma = Tensor<S>::full({channels}, S(1));
        beta = Tensor<S>({channels});
        dgamma = Tensor<S>({channels});
        dbeta = Tensor<S>({channels});
    }

    void collect(const std::string& prefix, Params<S>& out) {
        add_param(out, prefix + ".gamma", gamma, dgamma);
        add_param(out, prefix + ".beta", beta, dbeta);
    }

    Tensor<S> forward(const Tensor<S>& x) {
        require<ShapeError>(x.rank() == 4 && x.dim(1) == channels, "GroupNorm: bad input shape");
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int cg = channels / num_groups;
        const std::size_t group_elems = static_cast<std::size_t>(cg) * h * w;

        xhat_ = Tensor<S>(x.shape());
        inv_sigma_ = Tensor<S>({n, num_groups});
        Tensor<S> y(x.shape());
        for (int i = 0; i < n; ++i) {
            for (int g = 0; g < num_groups; ++g) {
                const S* src = x.data() + (static_cast<std::size_t>(i) * channels +
                                           static_cast<std::size_t>(g) * cg) *
                                              static_cast<std::size_t>(h) * w;
                double mean = 0.0;
                for (std::size_t j = 0; j < group_elems; ++j) mean += static_cast<double>(src[j]);
                mean /= static_cast<double>(group_elems);
                double var = 0.0;
                for (std::size_t j = 0; j < group_elems; ++j) {
                    const double d = static_cast<double>(src[j]) - mean;
                    var += d * d;
                }
                var /= static_cast<double>(group_elems);
                const double inv = 1.0 / std::sqrt(var + eps);
                inv_sigma_.at(i, g) = static_cast<S>(inv);

                S* xh = xhat_.data() + (src - x.data());
                S* dst = y.data() + (src - x.data());
                for (int c = 0; c < cg; ++c) {
                    const S gm = gamma[static_cast<std::size_t>(g * cg + c)];
                    const S bt = beta[static_cast<std::size_t>(g * cg + c)];
                    for (int j = 0; j < h * w; ++j) {
                        const std::size_t off = static_cast<std::size_t>(c) * h * w + j;
                        const S v = static_cast<S>((static_cast<double>(src[off]) - mean) * inv);
                        xh[off] = v;
                        dst[off] = gm * v + bt;
                    }
                }
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        require<ShapeError>(dy.same_shape(xhat_), "GroupNorm: bad upstream gradient shape");
        const int n = dy.dim(0), h = dy.dim(2), w = dy.dim(3);
        const int cg = channels / num_groups;
        const std::size_t group_elems = static_cast<std::size_t>(cg) * h * w;

        Tensor<S> dx(dy.shape());
        for (int i = 0; i < n; ++i) {
            for (int g = 0; g < num_groups; ++g) {
                const std::size_t base = (static_cast<std::size_t>(i) * channels +
                                          static_cast<std::size_t>(g) * cg) *
                                         static_cast<std::size_t>(h) * w;
                const S* dyp = dy.data() + base;
                const S* xh = xhat_.data() + base;

                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (int c = 0; c < cg; ++c) {
                    const double gm = gamma[static_cast<std::size_t>(g * cg + c)];
                    for (int j = 0; j < h * w; ++j) {
                        const std::size_t off = static_cast<std::size_t>(c) * h * w + j;
                        const double dxh = gm * static_cast<double>(dyp[off]);
                        sum_dxhat += dxh;
                        sum_dxhat_xhat += dxh * static_cast<double>(xh[off]);
                    }
                }
                const double mean_dxhat = sum_dxhat / static_cast<double>(group_elems);
                const double mean_dxhat_xhat = sum_dxhat_xhat / static_cast<double>(group_elems);
                const double inv = static_cast<double>(inv_sigma_.at(i, g));

                S* dxp = dx.data() + base;
                for (int c = 0; c < cg; ++c) {
                    const double gm = gamma[static_cast<std::size_t>(g * cg + c)];
                    for (int j = 0; j < h * w; ++j) {
                        const std::size_t off = static_cast<std::size_t>(c) * h * w + j;
                        const double dxh = gm * static_cast<double>(dyp[off]);
                        dxp[off] = static_cast<S>(
                            inv * (dxh - mean_dxhat -
                                   static_cast<double>(xh[off]) * mean_dxhat_xhat));
                    }
                }

                for (int c = 0; c < cg; ++c) {
                    double dg = 0.0, db = 0.0;
                    for (int j = 0; j < h * w; ++j) {
                        const std::size_t off = static_cast<std::size_t>(c) * h * w + j;
                        dg += static_cast<double>(dyp[off]) * static_cast<double>(xh[off]);
                        db += static_cast<double>(dyp[off]);
                    }
                    dgamma[static_cast<std::size_t>(g * cg + c)] += static_cast<S>(dg);
                    dbeta[static_cast<std::size_t>(g * cg + c)] += static_cast<S>(db);
                }
            }
        }
        return dx;
    }

private:
    Tensor<S> xhat_, inv_sigma_;
};

// ---------------------------------------------------------------------------
// LayerNorm over the last dimension. `affine = false` gives the plain
// standardization used ahead of the classifier head.
template <typename S>
struct LayerNorm {
    int dim = 0;
    bool affine = true;
    double eps = 1e-5;
    Tensor<S> gamma, beta, dgamma, dbeta;

    LayerNorm() = default;
    explicit LayerNorm(int dim_, bool affine_ = true, double eps_ = 1e-5)
        : dim(dim_), affine(affine_), eps(eps_) {
        if (affine) {
            gamma = Tensor<S>::full({dim}, S(1));
            beta = Tensor<S>({dim});
            dgamma = Tensor<S>({dim});
            dbeta = Tensor<S>({dim});
        }
    }

    void collect(const std::string& prefix, Params<S>& out) {
        if (!affine) return;
        add_param(out, prefix + ".gamma", gamma, dgamma);
        add_param(out, prefix + ".beta", beta, dbeta);
    }

    Tensor<S> forward(const Tensor<S>& x) {
        require<ShapeError>(x.dim(-1) == dim, "LayerNorm: last dim mismatch");
        const int rows = static_cast<int>(x.numel()) / dim;
        xhat_ = Tensor<S>(x.shape());
        inv_sigma_ = Tensor<S>({rows});
        Tensor<S> y(x.shape());
        for (int r = 0; r < rows; ++r) {
            const S* src = x.data() + static_cast<std::size_t>(r) * dim;
            double mean = 0.0;
            for (int j = 0; j < dim; ++j) mean += static_cast<double>(src[j]);
            mean /= dim;
            double var = 0.0;
            for (int j = 0; j < dim; ++j) {
                const double d = static_cast<double>(src[j]) - mean;
                var += d * d;
            }
            var /= dim;
            const double inv = 1.0 / std::sqrt(var + eps);
            inv_sigma_[static_cast<std::size_t>(r)] = static_cast<S>(inv);

            S* xh = xhat_.data() + static_cast<std::size_t>(r) * dim;
            S* dst = y.data() + static_cast<std::size_t>(r) * dim;
            for (int j = 0; j < dim; ++j) {
                const S v = static_cast<S>((static_cast<double>(src[j]) - mean) * inv);
                xh[j] = v;
                dst[j] = affine ? gamma[static_cast<std::size_t>(j)] * v +
                                      beta[static_cast<std::size_t>(j)]
                                : v;
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        require<ShapeError>(dy.same_shape(xhat_), "LayerNorm: bad upstream gradient shape");
        const int rows = static_cast<int>(dy.numel()) / dim;
        Tensor<S> dx(dy.shape());
        for (int r = 0; r < rows; ++r) {
            const S* dyp = dy.data() + static_cast<std::size_t>(r) * dim;
            const S* xh = xhat_.data() + static_cast<std::size_t>(r) * dim;
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (int j = 0; j < dim; ++j) {
                const double g = affine ? static_cast<double>(gamma[static_cast<std::size_t>(j)]) : 1.0;
                const double dxh = g * static_cast<double>(dyp[j]);
                sum_dxhat += dxh;
                sum_dxhat_xhat += dxh * static_cast<double>(xh[j]);
                if (affine) {
                    dgamma[static_cast<std::size_t>(j)] +=
                        static_cast<S>(static_cast<double>(dyp[j]) * static_cast<double>(xh[j]));
                    dbeta[static_cast<std::size_t>(j)] += dyp[j];
                }
            }
            const double inv = static_cast<double>(inv_sigma_[static_cast<std::size_t>(r)]);
            S* dxp = dx.data() + static_cast<std::size_t>(r) * dim;
            for (int j = 0; j < dim; ++j) {
                const double g = affine ? static_cast<double>(gamma[static_cast<std::size_t>(j)]) : 1.0;
                const double dxh = g * static_cast<double>(dyp[j]);
                dxp[j] = static_cast<S>(inv * (dxh - sum_dxhat / dim -
                                               static_cast<double>(xh[j]) * sum_dxhat_xhat / dim));
            }
        }
        return dx;
    }

private:
    Tensor<S> xhat_, inv_sigma_;
};

// ---------------------------------------------------------------------------
// Activations.
template <typename S>
struct SiLU {
    Tensor<S> forward(const Tensor<S>& x) {
        input_ = x;
        Tensor<S> y(x.shape());
        for (std::size_t i = 0; i < x.numel(); ++i) {
            const double v = static_cast<double>(x[i]);
            y[i] = static_cast<S>(v / (1.0 + std::exp(-v)));
        }
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) {
        Tensor<S> dx(input_.shape());
        for (std::size_t i = 0; i < dx.numel(); ++i) {
            const double v = static_cast<double>(input_[i]);
            const double sig = 1.0 / (1.0 + std::exp(-v));
            dx[i] = static_cast<S>(static_cast<double>(dy[i]) * sig * (1.0 + v * (1.0 - sig)));
        }
        return dx;
    }

private:
    Tensor<S> input_;
};

template <typename S>
struct Gelu {
    Tensor<S> forward(const Tensor<S>& x) {
        input_ = x;
        Tensor<S> y(x.shape());
        for (std::size_t i = 0; i < x.numel(); ++i) {
            const double v = static_cast<double>(x[i]);
            y[i] = static_cast<S>(0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)));
        }
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) {
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        Tensor<S> dx(input_.shape());
        for (std::size_t i = 0; i < dx.numel(); ++i) {
            const double v = static_cast<double>(input_[i]);
            const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
            dx[i] = static_cast<S>(static_cast<double>(dy[i]) * (cdf + v * pdf));
        }
        return dx;
    }

private:
    Tensor<S> input_;
};

// ---------------------------------------------------------------------------
// Inverted dropout; identity when not training.
template <typename S>
struct Dropout {
    double p = 0.0;

    Dropout() = default;
    explicit Dropout(double p_) : p(p_) {
        require<ConfigError>(p >= 0.0 && p < 1.0, "Dropout: p must be in [0, 1)");
    }

    Tensor<S> forward(const Tensor<S>& x, Rng& rng, bool training) {
        if (!training || p == 0.0) {
            active_ = false;
            return x;
        }
        active_ = true;
        mask_ = Tensor<S>(x.shape());
        const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
        Tensor<S> y(x.shape());
        for (std::size_t i = 0; i < x.numel(); ++i) {
            const S m = rng.uniform() < p ? S(0) : keep_scale;
            mask_[i] = m;
            y[i] = x[i] * m;
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        if (!active_) return dy;
        require<ShapeError>(dy.same_shape(mask_), "Dropout: bad upstream gradient shape");
        Tensor<S> dx(dy.shape());
        for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] = dy[i] * mask_[i];
        return dx;
    }

private:
    Tensor<S> mask_;
    bool active_ = false;
};

// ---------------------------------------------------------------------------
// Embedding lookup for integer class labels.
template <typename S>
struct Embedding {
    int num_embeddings = 0, dim = 0;
    Tensor<S> weight, dweight;

    Embedding() = default;
    Embedding(int num, int dim_, Rng& rng)
        : num_embeddings(num), dim(dim_), weight({num, dim_}), dweight({num, dim_}) {
        rng.fill_normal(weight.flat(), 0.0, 1.0);
    }

    void collect(const std::string& prefix, Params<S>& out) {
        add_param(out, prefix + ".weight", weight, dweight);
    }

    Tensor<S> forward(const std::vector<int>& labels) {
        labels_ = labels;
        Tensor<S> y({static_cast<int>(labels.size()), dim});
        for (std::size_t i = 0; i < labels.size(); ++i) {
            require<ConfigError>(labels[i] >= 0 && labels[i] < num_embeddings,
                                 "Embedding: label out of range");
            for (int j = 0; j < dim; ++j)
                y.at(static_cast<int>(i), j) = weight.at(labels[i], j);
        }
        return y;
    }

    void backward(const Tensor<S>& dy) {
        require<ShapeError>(dy.dim(0) == static_cast<int>(labels_.size()) && dy.dim(-1) == dim,
                            "Embedding: bad upstream gradient shape");
        for (std::size_t i = 0; i < labels_.size(); ++i)
            for (int j = 0; j < dim; ++j)
                dweight.at(labels_[i], j) += dy.at(static_cast<int>(i), j);
    }

private:
    std::vector<int> labels_;
};

// ---------------------------------------------------------------------------
// 2x2 average pooling, stride 2 (used by the classifier's input reduction).
template <typename S>
struct AvgPool2x2 {
    Tensor<S> forward(const Tensor<S>& x) {
        require<ShapeError>(x.rank() == 4 && x.dim(2) % 2 == 0 && x.dim(3) % 2 == 0,
                            "AvgPool2x2: spatial dims must be even");
        in_shape_ = x.shape();
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        Tensor<S> y({n, c, h / 2, w / 2});
        for (int i = 0; i < n; ++i)
            for (int ch = 0; ch < c; ++ch)
                for (int r = 0; r < h / 2; ++r)
                    for (int col = 0; col < w / 2; ++col)
                        y.at(i, ch, r, col) =
                            static_cast<S>(0.25) *
                            (x.at(i, ch, 2 * r, 2 * col) + x.at(i, ch, 2 * r, 2 * col + 1) +
                             x.at(i, ch, 2 * r + 1, 2 * col) + x.at(i, ch, 2 * r + 1, 2 * col + 1));
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        Tensor<S> dx(in_shape_);
        const int n = dy.dim(0), c = dy.dim(1), oh = dy.dim(2), ow = dy.dim(3);
        for (int i = 0; i < n; ++i)
            for (int ch = 0; ch < c; ++ch)
                for (int r = 0; r < oh; ++r)
                    for (int col = 0; col < ow; ++col) {
                        const S g = dy.at(i, ch, r, col) * static_cast<S>(0.25);
                        dx.at(i, ch, 2 * r, 2 * col) = g;
                        dx.at(i, ch, 2 * r, 2 * col + 1) = g;
                        dx.at(i, ch, 2 * r + 1, 2 * col) = g;
                        dx.at(i, ch, 2 * r + 1, 2 * col + 1) = g;
                    }
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Nearest-neighbour 2x upsampling (decoder side of the U-Net).
template <typename S>
struct UpsampleNearest2x {
    Tensor<S> forward(const Tensor<S>& x) {
        require<ShapeError>(x.rank() == 4, "UpsampleNearest2x: rank-4 input expected");
        in_shape_ = x.shape();
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        Tensor<S> y({n, c, 2 * h, 2 * w});
        for (int i = 0; i < n; ++i)
            for (int ch = 0; ch < c; ++ch)
                for (int r = 0; r < h; ++r)
                    for (int col = 0; col < w; ++col) {
                        const S v = x.at(i, ch, r, col);
                        y.at(i, ch, 2 * r, 2 * col) = v;
                        y.at(i, ch, 2 * r, 2 * col + 1) = v;
                        y.at(i, ch, 2 * r + 1, 2 * col) = v;
                        y.at(i, ch, 2 * r + 1, 2 * col + 1) = v;
                    }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        Tensor<S> dx(in_shape_);
        const int n = dx.dim(0), c = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
        for (int i = 0; i < n; ++i)
            for (int ch = 0; ch < c; ++ch)
                for (int r = 0; r < h; ++r)
                    for (int col = 0; col < w; ++col)
                        dx.at(i, ch, r, col) =
                            dy.at(i, ch, 2 * r, 2 * col) + dy.at(i, ch, 2 * r, 2 * col + 1) +
                            dy.at(i, ch, 2 * r + 1, 2 * col) + dy.at(i, ch, 2 * r + 1, 2 * col + 1);
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Sinusoidal features for scalar timesteps: [cos(t f_0..), sin(t f_0..)] with
// geometrically spaced frequencies, max period 10000.
template <typename S>
inline Tensor<S> sinusoidal_embedding(const std::vector<double>& t, int dim) {
    require<ConfigError>(dim >= 2 && dim % 2 == 0, "sinusoidal_embedding: dim must be even");
    const int half = dim / 2;
    Tensor<S> out({static_cast<int>(t.size()), dim});
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (int j = 0; j < half; ++j) {
            const double freq = std::exp(-std::log(10000.0) * j / half);
            const double arg = t[i] * freq;
            out.at(static_cast<int>(i), j) = static_cast<S>(std::cos(arg));
            out.at(static_cast<int>(i), half + j) = static_cast<S>(std::sin(arg));
        }
    }
    return out;
}

// Numerically stable softmax over the last dimension.
template <typename S>
inline Tensor<S> softmax_lastdim(const Tensor<S>& x) {
    const int dim = x.dim(-1);
    const int rows = static_cast<int>(x.numel()) / dim;
    Tensor<S> y(x.shape());
    for (int r = 0; r < rows; ++r) {
        const S* src = x.data() + static_cast<std::size_t>(r) * dim;
        S* dst = y.data() + static_cast<std::size_t>(r) * dim;
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < dim; ++j) mx = std::max(mx, static_cast<double>(src[j]));
        double sum = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double e = std::exp(static_cast<double>(src[j]) - mx);
            dst[j] = static_cast<S>(e);
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < dim; ++j) dst[j] = static_cast<S>(static_cast<double>(dst[j]) * inv);
    }
    return y;
}

}  // namespace csiaug::nn
