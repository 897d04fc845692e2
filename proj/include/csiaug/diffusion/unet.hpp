// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "csiaug/common.hpp"
#include "csiaug/nn/core.hpp"
#include "csiaug/nn/layers.hpp"
#include "csiaug/rng.hpp"
#include "csiaug/tensor.hpp"

namespace csiaug::diffusion {

// Conditional noise-predictor topology: head convolution (channel expansion),
// a stack of residual stages with stride-2 downsampling between them, a
// two-block middle, mirrored up-sampling stages that concatenate the saved
// stage outputs (skip connections), and a norm/act/conv tail back to the
// input channel count.  A shared conditioning vector — learned map of the
// sinusoidal step features plus a learned label embedding — is injected into
// every residual block.
struct UNetConfig {
    int in_channels = 4;
    int base_width = 64;
    std::vector<int> stage_multipliers = {1, 2, 4};
    int embedding_dim = 256;
    int num_classes = 6;
    int norm_groups = 8;

    int stages() const { return static_cast<int>(stage_multipliers.size()); }
    int stage_channels(int i) const { return base_width * stage_multipliers[static_cast<std::size_t>(i)]; }

    void validate() const {
        require<ConfigError>(in_channels >= 1, "unet: in_channels must be >= 1");
        require<ConfigError>(base_width >= 1, "unet: base_width must be >= 1");
        require<ConfigError>(!stage_multipliers.empty(), "unet: need at least one stage");
        require<ConfigError>(embedding_dim >= 2 && embedding_dim % 2 == 0,
                             "unet: embedding_dim must be even and >= 2");
        require<ConfigError>(num_classes >= 1, "unet: num_classes must be >= 1");
        require<ConfigError>(norm_groups >= 1, "unet: norm_groups must be >= 1");
        require<ConfigError>(base_width % norm_groups == 0,
                             "unet: base_width must be divisible by norm_groups");
        for (int m : stage_multipliers)
            require<ConfigError>(m >= 1, "unet: stage multipliers must be >= 1");
    }

    // Small model for 32x32 experiments on a single core.
    static UNetConfig desk(int num_classes_, int in_channels_ = 4) {
        UNetConfig c;
        c.in_channels = in_channels_;
        c.base_width = 16;
        c.stage_multipliers = {1, 2};
        c.embedding_dim = 64;
        c.num_classes = num_classes_;
        return c;
    }
};

// Concatenate along the channel dimension of [N, C, H, W] tensors.
template <typename S>
inline Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
    require<ShapeError>(a.rank() == 4 && b.rank() == 4 && a.dim(0) == b.dim(0) &&
                            a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
                        "concat_channels: incompatible shapes");
    const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor<S> y({n, ca + cb, h, w});
    for (int i = 0; i < n; ++i) {
        S* dst = y.data() + static_cast<std::size_t>(i) * (ca + cb) * plane;
        const S* pa = a.data() + static_cast<std::size_t>(i) * ca * plane;
        const S* pb = b.data() + static_cast<std::size_t>(i) * cb * plane;
        std::copy(pa, pa + static_cast<std::size_t>(ca) * plane, dst);
        std::copy(pb, pb + static_cast<std::size_t>(cb) * plane, dst + static_cast<std::size_t>(ca) * plane);
    }
    return y;
}

// Inverse of concat_channels for gradients: splits [N, ca+cb, H, W].
template <typename S>
inline std::pair<Tensor<S>, Tensor<S>> split_channels(const Tensor<S>& d, int ca, int cb) {
    require<ShapeError>(d.rank() == 4 && d.dim(1) == ca + cb, "split_channels: channel mismatch");
    const int n = d.dim(0), h = d.dim(2), w = d.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor<S> a({n, ca, h, w}), b({n, cb, h, w});
    for (int i = 0; i < n; ++i) {
        const S* src = d.data() + static_cast<std::size_t>(i) * (ca + cb) * plane;
        std::copy(src, src + static_cast<std::size_t>(ca) * plane,
                  a.data() + static_cast<std::size_t>(i) * ca * plane);
        std::copy(src + static_cast<std::size_t>(ca) * plane,
                  src + static_cast<std::size_t>(ca + cb) * plane,
                  b.data() + static_cast<std::size_t>(i) * cb * plane);
    }
    return {std::move(a), std::move(b)};
}

// Residual block: norm/act/conv, conditioning add, norm/act/conv, plus a
// (possibly projected) identity path.  conv2 is zero-initialized so a fresh
// block is exactly its identity path and the whole network starts at zero
// output, which keeps the first training steps well-scaled.
template <typename S>
struct ResBlock {
    int in_channels = 0, out_channels = 0;
    nn::GroupNorm<S> gn1, gn2;
    nn::SiLU<S> act1, act2, act_emb;
    nn::Conv2d<S> conv1, conv2;
    nn::Linear<S> emb_proj;
    nn::Conv2d<S> skip_proj;
    bool projected_skip = false;

    ResBlock() = default;
    ResBlock(int in_c, int out_c, int emb_dim, int groups, Rng& rng)
        : in_channels(in_c),
          out_channels(out_c),
          gn1(groups, in_c),
          gn2(groups, out_c),
          conv1(in_c, out_c, 3, 1, 1, rng),
          conv2(out_c, out_c, 3, 1, 1, rng),
          emb_proj(emb_dim, out_c, rng),
          projected_skip(in_c != out_c) {
        if (projected_skip) skip_proj = nn::Conv2d<S>(in_c, out_c, 1, 1, 0, rng);
        conv2.weight.zero();
        conv2.bias.zero();
    }

    void collect(const std::string& prefix, nn::Params<S>& out) {
        gn1.collect(prefix + ".gn1", out);
        conv1.collect(prefix + ".conv1", out);
        emb_proj.collect(prefix + ".emb", out);
        gn2.collect(prefix + ".gn2", out);
        conv2.collect(prefix + ".conv2", out);
        if (projected_skip) skip_proj.collect(prefix + ".skip", out);
    }

    // x [N, in_c, H, W], emb [N, E] -> [N, out_c, H, W]
    Tensor<S> forward(const Tensor<S>& x, const Tensor<S>& emb) {
        Tensor<S> h = conv1.forward(act1.forward(gn1.forward(x)));
        const Tensor<S> e = emb_proj.forward(act_emb.forward(emb));  // [N, out_c]
        const int n = h.dim(0);
        const std::size_t plane = static_cast<std::size_t>(h.dim(2)) * h.dim(3);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < out_channels; ++c) {
                S* dst = h.data() + (static_cast<std::size_t>(i) * out_channels + c) * plane;
                const S add = e.at(i, c);
                for (std::size_t j = 0; j < plane; ++j) dst[j] += add;
            }
        Tensor<S> y = conv2.forward(act2.forward(gn2.forward(h)));
        if (projected_skip) {
            y += skip_proj.forward(x);
        } else {
            y += x;
        }
        return y;
    }

    // Adds the conditioning gradient into demb ([N, E]).
    Tensor<S> backward(const Tensor<S>& dy, Tensor<S>& demb) {
        Tensor<S> dh = gn2.backward(act2.backward(conv2.backward(dy)));
        const int n = dh.dim(0);
        const std::size_t plane = static_cast<std::size_t>(dh.dim(2)) * dh.dim(3);
        Tensor<S> de({n, out_channels});
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < out_channels; ++c) {
                const S* src = dh.data() + (static_cast<std::size_t>(i) * out_channels + c) * plane;
                double acc = 0.0;
                for (std::size_t j = 0; j < plane; ++j) acc += static_cast<double>(src[j]);
                de.at(i, c) = static_cast<S>(acc);
            }
        demb += act_emb.backward(emb_proj.backward(de));
        Tensor<S> dx = gn1.backward(act1.backward(conv1.backward(dh)));
        if (projected_skip) {
            dx += skip_proj.backward(dy);
        } else {
            dx += dy;
        }
        return dx;
    }
};

// The noise predictor itself.  forward/backward must be called in strict
// alternation (layers cache one activation set); there is no dropout, so
// evaluation is deterministic given the weights.
template <typename S>
class UNet {
  public:
    UNet() = default;
    UNet(const UNetConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg.validate();
        const int e = cfg.embedding_dim;
        const int g = cfg.norm_groups;
        const int s = cfg.stages();

        time_mlp1_ = nn::Linear<S>(e, e, rng);
        time_mlp2_ = nn::Linear<S>(e, e, rng);
        label_emb_ = nn::Embedding<S>(cfg.num_classes, e, rng);
        head_ = nn::Conv2d<S>(cfg.in_channels, cfg.base_width, 3, 1, 1, rng);

        int prev = cfg.base_width;
        for (int i = 0; i < s; ++i) {
            const int c = cfg.stage_channels(i);
            require<ConfigError>(c % g == 0, "unet: stage width must be divisible by norm_groups");
            down_res1_.emplace_back(prev, c, e, g, rng);
            down_res2_.emplace_back(c, c, e, g, rng);
            if (i + 1 < s) down_conv_.emplace_back(c, c, 3, 2, 1, rng);
            prev = c;
        }
        mid1_ = ResBlock<S>(prev, prev, e, g, rng);
        mid2_ = ResBlock<S>(prev, prev, e, g, rng);
        for (int i = 0; i < s; ++i) {
            const int c = cfg.stage_channels(i);
            up_res1_.emplace_back(2 * c, c, e, g, rng);
            up_res2_.emplace_back(c, c, e, g, rng);
            if (i > 0) up_conv_.emplace_back(c, cfg.stage_channels(i - 1), 3, 1, 1, rng);
        }
        upsample_.resize(static_cast<std::size_t>(s > 0 ? s - 1 : 0));
        tail_gn_ = nn::GroupNorm<S>(g, cfg.stage_channels(0));
        tail_conv_ = nn::Conv2d<S>(cfg.stage_channels(0), cfg.in_channels, 3, 1, 1, rng);
        tail_conv_.weight.zero();
        tail_conv_.bias.zero();
    }

    const UNetConfig& config() const { return cfg_; }

    void collect(nn::Params<S>& out) {
        time_mlp1_.collect("unet.time.mlp1", out);
        time_mlp2_.collect("unet.time.mlp2", out);
        label_emb_.collect("unet.label", out);
        head_.collect("unet.head", out);
        for (std::size_t i = 0; i < down_res1_.size(); ++i) {
            const std::string p = "unet.down" + std::to_string(i);
            down_res1_[i].collect(p + ".res1", out);
            down_res2_[i].collect(p + ".res2", out);
            if (i < down_conv_.size()) down_conv_[i].collect(p + ".down", out);
        }
        mid1_.collect("unet.mid1", out);
        mid2_.collect("unet.mid2", out);
        for (std::size_t i = 0; i < up_res1_.size(); ++i) {
            const std::string p = "unet.up" + std::to_string(i);
            up_res1_[i].collect(p + ".res1", out);
            up_res2_[i].collect(p + ".res2", out);
            if (i > 0) up_conv_[i - 1].collect(p + ".conv", out);
        }
        tail_gn_.collect("unet.tail.gn", out);
        tail_conv_.collect("unet.tail.conv", out);
    }

    nn::Params<S> params() {
        nn::Params<S> out;
        collect(out);
        return out;
    }

    // x [N, C, H, W]; one step index and one label per sample.
    Tensor<S> forward(const Tensor<S>& x, const std::vector<int>& t, const std::vector<int>& labels) {
        require<ShapeError>(x.rank() == 4 && x.dim(1) == cfg_.in_channels, "unet: bad input shape");
        const int n = x.dim(0);
        require<ShapeError>(static_cast<int>(t.size()) == n && static_cast<int>(labels.size()) == n,
                            "unet: one step and one label per sample required");
        const int s = cfg_.stages();
        const int down_factor = 1 << (s - 1);
        require<ShapeError>(x.dim(2) % down_factor == 0 && x.dim(3) % down_factor == 0,
                            "unet: spatial dims must be divisible by 2^(stages-1)");

        std::vector<double> tv(t.begin(), t.end());
        Tensor<S> emb =
            time_mlp2_.forward(time_act_.forward(time_mlp1_.forward(
                nn::sinusoidal_embedding<S>(tv, cfg_.embedding_dim))));
        emb += label_emb_.forward(labels);
        emb_rows_ = n;

        Tensor<S> h = head_.forward(x);
        skips_.clear();
        for (int i = 0; i < s; ++i) {
            h = down_res1_[static_cast<std::size_t>(i)].forward(h, emb);
            h = down_res2_[static_cast<std::size_t>(i)].forward(h, emb);
            skips_.push_back(h);
            if (i + 1 < s) h = down_conv_[static_cast<std::size_t>(i)].forward(h);
        }
        h = mid1_.forward(h, emb);
        h = mid2_.forward(h, emb);
        for (int i = s - 1; i >= 0; --i) {
            h = concat_channels(h, skips_[static_cast<std::size_t>(i)]);
            h = up_res1_[static_cast<std::size_t>(i)].forward(h, emb);
            h = up_res2_[static_cast<std::size_t>(i)].forward(h, emb);
            if (i > 0) {
                h = upsample_[static_cast<std::size_t>(i - 1)].forward(h);
                h = up_conv_[static_cast<std::size_t>(i - 1)].forward(h);
            }
        }
        return tail_conv_.forward(tail_act_.forward(tail_gn_.forward(h)));
    }

    // Gradient wrt the input; parameter gradients accumulate inside layers.
    Tensor<S> backward(const Tensor<S>& dy) {
        const int s = cfg_.stages();
        Tensor<S> d = tail_gn_.backward(tail_act_.backward(tail_conv_.backward(dy)));
        Tensor<S> demb({emb_rows_, cfg_.embedding_dim});

        std::vector<Tensor<S>> dskips(static_cast<std::size_t>(s));
        for (int i = 0; i < s; ++i) {
            if (i > 0) {
                d = up_conv_[static_cast<std::size_t>(i - 1)].backward(d);
                d = upsample_[static_cast<std::size_t>(i - 1)].backward(d);
            }
            d = up_res2_[static_cast<std::size_t>(i)].backward(d, demb);
            d = up_res1_[static_cast<std::size_t>(i)].backward(d, demb);
            const int c = cfg_.stage_channels(i);
            auto parts = split_channels(d, c, c);
            d = std::move(parts.first);
            dskips[static_cast<std::size_t>(i)] = std::move(parts.second);
        }
        d = mid2_.backward(d, demb);
        d = mid1_.backward(d, demb);
        for (int i = s - 1; i >= 0; --i) {
            if (i + 1 < s) d = down_conv_[static_cast<std::size_t>(i)].backward(d);
            d += dskips[static_cast<std::size_t>(i)];
            d = down_res2_[static_cast<std::size_t>(i)].backward(d, demb);
            d = down_res1_[static_cast<std::size_t>(i)].backward(d, demb);
        }
        d = head_.backward(d);

        label_emb_.backward(demb);
        time_mlp1_.backward(time_act_.backward(time_mlp2_.backward(demb)));
        return d;
    }

  private:
    UNetConfig cfg_;
    nn::Linear<S> time_mlp1_, time_mlp2_;
    nn::SiLU<S> time_act_;
    nn::Embedding<S> label_emb_;
    nn::Conv2d<S> head_;
    std::vector<ResBlock<S>> down_res1_, down_res2_;
    std::vector<nn::Conv2d<S>> down_conv_;
    ResBlock<S> mid1_, mid2_;
    std::vector<ResBlock<S>> up_res1_, up_res2_;
    std::vector<nn::Conv2d<S>> up_conv_;
    std::vector<nn::UpsampleNearest2x<S>> upsample_;
    nn::GroupNorm<S> tail_gn_;
    nn::SiLU<S> tail_act_;
    nn::Conv2d<S> tail_conv_;
    std::vector<Tensor<S>> skips_;
    int emb_rows_ = 0;
};

}  // namespace csiaug::diffusion
