// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "csiaug/common.hpp"
#include "csiaug/nn/attention.hpp"
#include "csiaug/nn/core.hpp"
#include "csiaug/nn/layers.hpp"
#include "csiaug/rng.hpp"
#include "csiaug/tensor.hpp"

namespace csiaug::vit {

// Compact transformer classifier over CSI images: 2x2 average pooling, 16
// time-slab patches, learned linear tokenization with additive position
// embeddings, pre-norm attention/MLP blocks, mean pooling, an affine-free
// standardization, and a linear head.
struct ViTConfig {
    int channels = 4;
    int carriers = 256;    // input rows
    int time_slots = 256;  // input columns
    int num_patches = 16;  // slabs along the downsampled time axis
    int token_dim = 64;
    int depth = 2;
    int heads = 4;
    int mlp_dim = 128;
    double dropout = 0.15;
    double head_eps = 1e-5;
    int num_classes = 6;

    double learning_rate = 1e-4;
    double weight_decay = 0.1;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;

    int pooled_carriers() const { return carriers / 2; }
    int pooled_time() const { return time_slots / 2; }
    int patch_time() const { return pooled_time() / num_patches; }
    int patch_dim() const { return channels * pooled_carriers() * patch_time(); }

    void validate() const {
        require<ConfigError>(channels >= 1, "vit: channels must be >= 1");
        require<ConfigError>(carriers >= 2 && carriers % 2 == 0,
                             "vit: carriers must be even (2x2 pooling)");
        require<ConfigError>(time_slots >= 2 && time_slots % 2 == 0,
                             "vit: time_slots must be even (2x2 pooling)");
        require<ConfigError>(num_patches >= 1, "vit: num_patches must be >= 1");
        require<ConfigError>(pooled_time() % num_patches == 0,
                             "vit: patches must tile the downsampled time axis exactly");
        require<ConfigError>(token_dim >= 1 && token_dim % heads == 0,
                             "vit: token_dim must be divisible by heads");
        require<ConfigError>(depth >= 1, "vit: depth must be >= 1");
        require<ConfigError>(mlp_dim >= 1, "vit: mlp_dim must be >= 1");
        require<ConfigError>(dropout >= 0.0 && dropout < 1.0, "vit: dropout must be in [0, 1)");
        require<ConfigError>(head_eps > 0.0, "vit: head_eps must be > 0");
        require<ConfigError>(num_classes >= 2, "vit: need at least two classes");
        require<ConfigError>(learning_rate > 0.0, "vit: learning_rate must be > 0");
        require<ConfigError>(weight_decay >= 0.0, "vit: weight_decay must be >= 0");
        require<ConfigError>(epochs >= 0, "vit: epochs must be >= 0");
        require<ConfigError>(batch_size >= 1, "vit: batch_size must be >= 1");
    }

    // Small variant for 32x32 experiments.
    static ViTConfig desk(int num_classes_, std::uint64_t seed_) {
        ViTConfig c;
        c.carriers = 32;
        c.time_slots = 32;
        c.num_classes = num_classes_;
        c.seed = seed_;
        return c;
    }
};

inline nlohmann::json vit_config_to_json(const ViTConfig& c) {
    return nlohmann::json{{"channels", c.channels},
                          {"carriers", c.carriers},
                          {"time_slots", c.time_slots},
                          {"num_patches", c.num_patches},
                          {"token_dim", c.token_dim},
                          {"depth", c.depth},
                          {"heads", c.heads},
                          {"mlp_dim", c.mlp_dim},
                          {"dropout", c.dropout},
                          {"head_eps", c.head_eps},
                          {"num_classes", c.num_classes},
                          {"learning_rate", c.learning_rate},
                          {"weight_decay", c.weight_decay},
                          {"epochs", c.epochs},
                          {"batch_size", c.batch_size},
                          {"seed", c.seed}};
}

inline ViTConfig vit_config_from_json(const nlohmann::json& j) {
    ViTConfig c;
    c.channels = j.value("channels", c.channels);
    c.carriers = j.value("carriers", c.carriers);
    c.time_slots = j.value("time_slots", c.time_slots);
    c.num_patches = j.value("num_patches", c.num_patches);
    c.token_dim = j.value("token_dim", c.token_dim);
    c.depth = j.value("depth", c.depth);
    c.heads = j.value("heads", c.heads);
    c.mlp_dim = j.value("mlp_dim", c.mlp_dim);
    c.dropout = j.value("dropout", c.dropout);
    c.head_eps = j.value("head_eps", c.head_eps);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    return c;
}

namespace detail {

// Cuts the pooled image into time slabs and flattens each one channel-major,
// carrier-major, time-minor: [N, C, K, T] -> [N, P, C*K*(T/P)].
template <typename S>
inline Tensor<S> extract_patches(const Tensor<S>& x, int num_patches) {
    require<ShapeError>(x.rank() == 4, "extract_patches: rank-4 input expected");
    const int n = x.dim(0), c = x.dim(1), k = x.dim(2), t = x.dim(3);
    require<ShapeError>(t % num_patches == 0, "extract_patches: patches must tile time");
    const int pt = t / num_patches;
    Tensor<S> out({n, num_patches, c * k * pt});
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < num_patches; ++p) {
            S* dst = out.data() + (static_cast<std::size_t>(i) * num_patches + p) *
                                      static_cast<std::size_t>(c) * k * pt;
            for (int ch = 0; ch < c; ++ch)
                for (int row = 0; row < k; ++row) {
                    const S* src = x.data() + ((static_cast<std::size_t>(i) * c + ch) *
                                                   static_cast<std::size_t>(k) +
                                               row) *
                                                  static_cast<std::size_t>(t) +
                                   static_cast<std::size_t>(p) * pt;
                    for (int col = 0; col < pt; ++col) *dst++ = src[col];
                }
        }
    return out;
}

// Adjoint of extract_patches.
template <typename S>
inline Tensor<S> scatter_patches(const Tensor<S>& d, int channels, int k, int t) {
    const int n = d.dim(0), num_patches = d.dim(1);
    const int pt = t / num_patches;
    Tensor<S> out({n, channels, k, t});
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < num_patches; ++p) {
            const S* src = d.data() + (static_cast<std::size_t>(i) * num_patches + p) *
                                          static_cast<std::size_t>(channels) * k * pt;
            for (int ch = 0; ch < channels; ++ch)
                for (int row = 0; row < k; ++row) {
                    S* dst = out.data() + ((static_cast<std::size_t>(i) * channels + ch) *
                                               static_cast<std::size_t>(k) +
                                           row) *
                                              static_cast<std::size_t>(t) +
                                   static_cast<std::size_t>(p) * pt;
                    for (int col = 0; col < pt; ++col) dst[col] = *src++;
                }
        }
    return out;
}

}  // namespace detail

// One pre-norm transformer block: x + attn(norm(x)), then x + mlp(norm(x)).
template <typename S>
struct EncoderBlock {
    nn::LayerNorm<S> ln1, ln2;
    nn::MultiHeadSelfAttention<S> attn;
    nn::Linear<S> fc1, fc2;
    nn::Gelu<S> act;
    nn::Dropout<S> drop1, drop2;

    EncoderBlock() = default;
    EncoderBlock(int dim, int heads, int mlp_dim, double dropout, Rng& rng)
        : ln1(dim),
          ln2(dim),
          attn(dim, heads, dropout, rng),
          fc1(dim, mlp_dim, rng),
          fc2(mlp_dim, dim, rng),
          drop1(dropout),
          drop2(dropout) {}

    void collect(const std::string& prefix, nn::Params<S>& out) {
        ln1.collect(prefix + ".ln1", out);
        attn.collect(prefix + ".attn", out);
        ln2.collect(prefix + ".ln2", out);
        fc1.collect(prefix + ".fc1", out);
        fc2.collect(prefix + ".fc2", out);
    }

    Tensor<S> forward(const Tensor<S>& x, Rng& rng, bool training) {
        Tensor<S> h = attn.forward(ln1.forward(x), rng, training);
        h += x;
        Tensor<S> m = drop2.forward(
            fc2.forward(drop1.forward(act.forward(fc1.forward(ln2.forward(h))), rng, training)),
            rng, training);
        m += h;
        return m;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        Tensor<S> dh =
            ln2.backward(fc1.backward(act.backward(drop1.backward(fc2.backward(drop2.backward(dy))))));
        dh += dy;
        Tensor<S> dx = ln1.backward(attn.backward(dh));
        dx += dh;
        return dx;
    }
};

template <typename S>
class SimpleViTFi {
  public:
    SimpleViTFi() = default;
    SimpleViTFi(const ViTConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg.validate();
        patch_proj_ = nn::Linear<S>(cfg.patch_dim(), cfg.token_dim, rng);
        pos_emb_ = Tensor<S>({cfg.num_patches, cfg.token_dim});
        dpos_emb_ = Tensor<S>({cfg.num_patches, cfg.token_dim});
        // Small-scale position init keeps early tokens dominated by content.
        rng.fill_normal(pos_emb_.flat(), 0.0, 0.02);
        blocks_.reserve(static_cast<std::size_t>(cfg.depth));
        for (int i = 0; i < cfg.depth; ++i)
            blocks_.emplace_back(cfg.token_dim, cfg.heads, cfg.mlp_dim, cfg.dropout, rng);
        final_norm_ = nn::LayerNorm<S>(cfg.token_dim, /*affine=*/false, cfg.head_eps);
        head_ = nn::Linear<S>(cfg.token_dim, cfg.num_classes, rng);
    }

    const ViTConfig& config() const { return cfg_; }

    void collect(nn::Params<S>& out) {
        patch_proj_.collect("vit.patch", out);
        nn::add_param(out, "vit.pos", pos_emb_, dpos_emb_);
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i].collect("vit.block" + std::to_string(i), out);
        head_.collect("vit.head", out);
    }

    nn::Params<S> params() {
        nn::Params<S> out;
        collect(out);
        return out;
    }

    // Pool, slice into time slabs, project, and add position embeddings:
    // [N, C, K, T] -> [N, num_patches, token_dim].
    Tensor<S> tokenize(const Tensor<S>& x) {
        require<ShapeError>(x.rank() == 4 && x.dim(1) == cfg_.channels &&
                                x.dim(2) == cfg_.carriers && x.dim(3) == cfg_.time_slots,
                            "vit: bad input shape");
        Tensor<S> tokens = patch_proj_.forward(
            detail::extract_patches(pool_.forward(x), cfg_.num_patches));
        for (int i = 0; i < x.dim(0); ++i)
            for (int p = 0; p < cfg_.num_patches; ++p)
                for (int j = 0; j < cfg_.token_dim; ++j)
                    tokens.at(i, p, j) += pos_emb_.at(p, j);
        return tokens;
    }

    // Standardize each pooled feature row (no learned scale/shift) and score:
    // [N, token_dim] -> [N, num_classes].
    Tensor<S> classify_features(const Tensor<S>& pooled) {
        return head_.forward(final_norm_.forward(pooled));
    }

    // [N, C, K, T] -> logits [N, num_classes].
    Tensor<S> forward(const Tensor<S>& x, Rng& rng, bool training) {
        const int n = x.dim(0);
        Tensor<S> tokens = tokenize(x);
        for (auto& block : blocks_) tokens = block.forward(tokens, rng, training);

        // Mean over tokens, then affine-free standardization and the head.
        pooled_rows_ = n;
        Tensor<S> pooled({n, cfg_.token_dim});
        const S inv_p = static_cast<S>(1.0 / cfg_.num_patches);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < cfg_.token_dim; ++j) {
                double acc = 0.0;
                for (int p = 0; p < cfg_.num_patches; ++p)
                    acc += static_cast<double>(tokens.at(i, p, j));
                pooled.at(i, j) = static_cast<S>(acc) * inv_p;
            }
        return classify_features(pooled);
    }

    // Encoder internals, exposed for inspection (e.g. attention maps).
    std::vector<EncoderBlock<S>>& blocks() { return blocks_; }

    // Gradient wrt the input; parameter gradients accumulate inside layers.
    Tensor<S> backward(const Tensor<S>& dlogits) {
        Tensor<S> dpooled = final_norm_.backward(head_.backward(dlogits));
        Tensor<S> dtokens({pooled_rows_, cfg_.num_patches, cfg_.token_dim});
        const S inv_p = static_cast<S>(1.0 / cfg_.num_patches);
        for (int i = 0; i < pooled_rows_; ++i)
            for (int p = 0; p < cfg_.num_patches; ++p)
                for (int j = 0; j < cfg_.token_dim; ++j)
                    dtokens.at(i, p, j) = dpooled.at(i, j) * inv_p;

        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it)
            dtokens = it->backward(dtokens);

        for (int i = 0; i < pooled_rows_; ++i)
            for (int p = 0; p < cfg_.num_patches; ++p)
                for (int j = 0; j < cfg_.token_dim; ++j)
                    dpos_emb_.at(p, j) += dtokens.at(i, p, j);

        return pool_.backward(detail::scatter_patches(
            patch_proj_.backward(dtokens), cfg_.channels, cfg_.pooled_carriers(),
            cfg_.pooled_time()));
    }

    std::size_t parameter_count() {
        auto p = params();
        return nn::param_count(p);
    }

    // Human-readable shape walkthrough plus the exact trainable size.
    std::string summary() {
        std::ostringstream os;
        os << "SimpleViTFi\n"
           << "  input           " << cfg_.channels << "x" << cfg_.carriers << "x"
           << cfg_.time_slots << "\n"
           << "  pooled (2x2 avg) " << cfg_.channels << "x" << cfg_.pooled_carriers() << "x"
           << cfg_.pooled_time() << "\n"
           << "  patches         " << cfg_.num_patches << " x (" << cfg_.channels << "x"
           << cfg_.pooled_carriers() << "x" << cfg_.patch_time() << ") -> " << cfg_.patch_dim()
           << " values each\n"
           << "  tokens          " << cfg_.num_patches << " x " << cfg_.token_dim
           << " (learned projection + learnable position embedding)\n"
           << "  encoder         depth " << cfg_.depth << ", heads " << cfg_.heads << ", mlp "
           << cfg_.mlp_dim << ", dropout " << cfg_.dropout << "\n"
           << "  pooling         mean over " << cfg_.num_patches << " tokens\n"
           << "  head            standardize (eps " << cfg_.head_eps << ") + linear -> "
           << cfg_.num_classes << " classes\n"
           << "  parameters      " << parameter_count() << "\n";
        return os.str();
    }

  private:
    ViTConfig cfg_;
    nn::AvgPool2x2<S> pool_;
    nn::Linear<S> patch_proj_;
    Tensor<S> pos_emb_, dpos_emb_;
    std::vector<EncoderBlock<S>> blocks_;
    nn::LayerNorm<S> final_norm_;
    nn::Linear<S> head_;
    int pooled_rows_ = 0;
};

// Deterministic argmax prediction; ties resolve to the lowest class index.
template <typename S>
inline int predicted_class(const Tensor<S>& logits, int row) {
    const int k = logits.dim(-1);
    int best = 0;
    for (int j = 1; j < k; ++j)
        if (logits.at(row, j) > logits.at(row, best)) best = j;
    return best;
}

}  // namespace csiaug::vit
