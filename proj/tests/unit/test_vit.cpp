// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0
//
// Pooling is checked against a brute-force double loop, patch extraction
// against an index-arithmetic oracle and an adjoint identity, the encoder
// against permutation invariance of mean pooling, and the whole model's
// gradients against central finite differences on a reduced configuration.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <vector>

#include "catch_amalgamated.hpp"
#include "csiaug/nn/layers.hpp"
#include "csiaug/vit/classifier.hpp"
#include "csiaug/vit/vit.hpp"

using namespace csiaug;

namespace {

template <typename S>
Tensor<S> random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor<S> t(std::move(shape));
    rng.fill_normal(t.flat(), 0.0, scale);
    return t;
}

// Separable two-class set: the sign of a constant channel-0 offset decides
// the class; the rest is low-amplitude noise.
template <typename S>
void make_separable(Tensor<S>& x, std::vector<int>& y, Rng& rng) {
    rng.fill_normal(x.flat(), 0.0, 0.3);
    const int n = x.dim(0), k = x.dim(2), t = x.dim(3);
    y.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] = i % 2;
        const S delta = static_cast<S>(i % 2 == 0 ? 0.8 : -0.8);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < t; ++c) x.at(i, 0, r, c) += delta;
    }
}

vit::ViTConfig reduced_config() {
    auto cfg = vit::ViTConfig::desk(3, 5);
    cfg.token_dim = 8;
    cfg.depth = 1;
    cfg.heads = 2;
    cfg.mlp_dim = 16;
    cfg.dropout = 0.0;  // finite differences need a deterministic loss
    return cfg;
}

}  // namespace

TEST_CASE("vit config validates and presets are consistent") {
    vit::ViTConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());
    CHECK(cfg.pooled_carriers() == 128);
    CHECK(cfg.pooled_time() == 128);
    CHECK(cfg.patch_time() == 8);
    CHECK(cfg.patch_dim() == 4096);

    auto desk = vit::ViTConfig::desk(6, 1);
    REQUIRE_NOTHROW(desk.validate());
    CHECK(desk.patch_time() == 1);
    CHECK(desk.patch_dim() == 64);

    auto bad = cfg;
    bad.token_dim = 66;  // not divisible by 4 heads
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.num_patches = 48;  // 128 % 48 != 0
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.time_slots = 255;  // odd
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.dropout = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.num_classes = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    auto j = vit::vit_config_to_json(cfg);
    auto back = vit::vit_config_from_json(j);
    CHECK(back.carriers == cfg.carriers);
    CHECK(back.token_dim == cfg.token_dim);
    CHECK(back.dropout == cfg.dropout);
    CHECK(back.seed == cfg.seed);
    CHECK(back.epochs == cfg.epochs);
}

TEST_CASE("2x2 average pooling matches a brute-force oracle") {
    Rng rng(11);
    TensorD x = random_tensor<double>({2, 3, 8, 10}, rng);
    nn::AvgPool2x2<double> pool;
    TensorD y = pool.forward(x);
    REQUIRE(y.shape() == std::vector<int>({2, 3, 4, 5}));
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 4; ++r)
                for (int t = 0; t < 5; ++t) {
                    const double expect = (x.at(n, c, 2 * r, 2 * t) + x.at(n, c, 2 * r, 2 * t + 1) +
                                           x.at(n, c, 2 * r + 1, 2 * t) +
                                           x.at(n, c, 2 * r + 1, 2 * t + 1)) /
                                          4.0;
                    CHECK(y.at(n, c, r, t) == Catch::Approx(expect).margin(1e-6));
                }

    // Constant image pools to the same constant.
    TensorD flat({1, 1, 4, 4});
    for (std::size_t i = 0; i < flat.numel(); ++i) flat[i] = 0.7;
    TensorD fp = nn::AvgPool2x2<double>().forward(flat);
    for (std::size_t i = 0; i < fp.numel(); ++i) CHECK(fp[i] == Catch::Approx(0.7).margin(1e-12));

    // A 0/1 checkerboard averages to one half everywhere.
    TensorD board({1, 1, 6, 6});
    for (int r = 0; r < 6; ++r)
        for (int t = 0; t < 6; ++t) board.at(0, 0, r, t) = (r + t) % 2 == 0 ? 1.0 : 0.0;
    TensorD bp = nn::AvgPool2x2<double>().forward(board);
    for (std::size_t i = 0; i < bp.numel(); ++i) CHECK(bp[i] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("patch extraction is channel-major, carrier-major, time-minor") {
    const int n = 2, c = 3, k = 4, t = 12, patches = 4, pt = t / patches;
    TensorD x({n, c, k, t});
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch)
            for (int row = 0; row < k; ++row)
                for (int col = 0; col < t; ++col)
                    x.at(i, ch, row, col) = i * 100000 + ch * 10000 + row * 100 + col;

    TensorD out = vit::detail::extract_patches(x, patches);
    REQUIRE(out.shape() == std::vector<int>({n, patches, c * k * pt}));
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < patches; ++p)
            for (int ch = 0; ch < c; ++ch)
                for (int row = 0; row < k; ++row)
                    for (int col = 0; col < pt; ++col) {
                        const int flat = (ch * k + row) * pt + col;
                        CHECK(out.at(i, p, flat) ==
                              x.at(i, ch, row, p * pt + col));
                    }
}

TEST_CASE("patch scatter inverts extraction and is its adjoint") {
    Rng rng(3);
    TensorD x = random_tensor<double>({2, 4, 6, 16}, rng);
    TensorD patches = vit::detail::extract_patches(x, 8);
    TensorD back = vit::detail::scatter_patches(patches, 4, 6, 16);
    REQUIRE(back.shape() == x.shape());
    CHECK(std::memcmp(back.data(), x.data(), x.numel() * sizeof(double)) == 0);

    // <extract(x), y> == <x, scatter(y)> for random y.
    TensorD y = random_tensor<double>({2, 8, 4 * 6 * 2}, rng);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < patches.numel(); ++i) lhs += patches[i] * y[i];
    TensorD ys = vit::detail::scatter_patches(y, 4, 6, 16);
    for (std::size_t i = 0; i < x.numel(); ++i) rhs += x[i] * ys[i];
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("perturbing one time slot changes exactly one patch") {
    Rng rng(5);
    TensorD x = random_tensor<double>({1, 4, 8, 32}, rng);
    TensorD base = vit::detail::extract_patches(x, 16);  // 2 columns per patch
    TensorD bumped = x;
    bumped.at(0, 2, 5, 13) += 1.0;  // column 13 lives in patch 6
    TensorD after = vit::detail::extract_patches(bumped, 16);
    for (int p = 0; p < 16; ++p) {
        bool differs = false;
        for (int j = 0; j < after.dim(2); ++j)
            if (after.at(0, p, j) != base.at(0, p, j)) differs = true;
        CHECK(differs == (p == 13 / 2));
    }
}

TEST_CASE("zero input with zero projection bias tokenizes to the position embedding") {
    auto cfg = vit::ViTConfig::desk(4, 9);
    Rng rng(9);
    vit::SimpleViTFi<double> model(cfg, rng);
    auto params = model.params();
    const TensorD* pos = nullptr;
    for (auto& p : params) {
        if (p.name == "vit.patch.bias")
            for (std::size_t i = 0; i < p.value->numel(); ++i) (*p.value)[i] = 0.0;
        if (p.name == "vit.pos") pos = p.value;
    }
    REQUIRE(pos != nullptr);

    TensorD zeros({3, 4, 32, 32});
    TensorD tokens = model.tokenize(zeros);
    REQUIRE(tokens.shape() == std::vector<int>({3, cfg.num_patches, cfg.token_dim}));
    for (int i = 0; i < 3; ++i)
        for (int p = 0; p < cfg.num_patches; ++p)
            for (int j = 0; j < cfg.token_dim; ++j)
                CHECK(tokens.at(i, p, j) == pos->at(p, j));
}

TEST_CASE("identity projection passes raw patches through tokenization") {
    auto cfg = vit::ViTConfig::desk(4, 2);
    REQUIRE(cfg.patch_dim() == cfg.token_dim);  // 4*16*1 == 64
    Rng rng(2);
    vit::SimpleViTFi<double> model(cfg, rng);
    for (auto& p : model.params()) {
        if (p.name == "vit.patch.weight") {
            for (std::size_t i = 0; i < p.value->numel(); ++i) (*p.value)[i] = 0.0;
            for (int d = 0; d < cfg.token_dim; ++d) p.value->at(d, d) = 1.0;
        } else if (p.name == "vit.patch.bias" || p.name == "vit.pos") {
            for (std::size_t i = 0; i < p.value->numel(); ++i) (*p.value)[i] = 0.0;
        }
    }

    TensorD x = random_tensor<double>({2, 4, 32, 32}, rng);
    TensorD tokens = model.tokenize(x);
    TensorD expect = vit::detail::extract_patches(nn::AvgPool2x2<double>().forward(x),
                                                  cfg.num_patches);
    REQUIRE(tokens.shape() == expect.shape());
    for (std::size_t i = 0; i < tokens.numel(); ++i)
        CHECK(tokens[i] == Catch::Approx(expect[i]).margin(1e-12));
}

TEST_CASE("attention rows are probability distributions") {
    auto cfg = vit::ViTConfig::desk(5, 21);
    Rng rng(21);
    vit::SimpleViTFi<float> model(cfg, rng);
    TensorF x = random_tensor<float>({3, 4, 32, 32}, rng);
    Rng unused(0);
    model.forward(x, unused, /*training=*/false);

    for (auto& block : model.blocks()) {
        const TensorF& probs = block.attn.attention();
        REQUIRE(probs.rank() == 4);
        for (int i = 0; i < probs.dim(0); ++i)
            for (int h = 0; h < probs.dim(1); ++h)
                for (int q = 0; q < probs.dim(2); ++q) {
                    double sum = 0.0;
                    for (int kk = 0; kk < probs.dim(3); ++kk) sum += probs.at(i, h, q, kk);
                    CHECK(sum == Catch::Approx(1.0).margin(1e-6));
                    for (int kk = 0; kk < probs.dim(3); ++kk)
                        CHECK(probs.at(i, h, q, kk) >= 0.0f);
                }
    }
}

TEST_CASE("jointly permuting patches and position rows leaves logits unchanged") {
    // Mean pooling makes the encoder equivariant under token permutation, so
    // permuting the input time slabs together with the position-embedding
    // rows must not move the pooled logits.
    auto cfg = vit::ViTConfig::desk(4, 31);
    Rng rng(31);
    vit::SimpleViTFi<double> model(cfg, rng);
    TensorD x = random_tensor<double>({2, 4, 32, 32}, rng);
    Rng unused(0);
    TensorD base = model.forward(x, unused, /*training=*/false);

    std::vector<int> perm(static_cast<std::size_t>(cfg.num_patches));
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffler(77);
    shuffler.shuffle(perm);

    // Permute the raw time axis in slab blocks (each pooled slab spans two
    // raw columns here).
    const int raw_per_patch = cfg.time_slots / cfg.num_patches;
    TensorD xp({2, 4, 32, 32});
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 4; ++c)
            for (int r = 0; r < 32; ++r)
                for (int p = 0; p < cfg.num_patches; ++p)
                    for (int col = 0; col < raw_per_patch; ++col)
                        xp.at(i, c, r, p * raw_per_patch + col) =
                            x.at(i, c, r,
                                 perm[static_cast<std::size_t>(p)] * raw_per_patch + col);

    // Permute the position rows the same way.
    for (auto& pr : model.params()) {
        if (pr.name != "vit.pos") continue;
        TensorD original = *pr.value;
        for (int p = 0; p < cfg.num_patches; ++p)
            for (int j = 0; j < cfg.token_dim; ++j)
                pr.value->at(p, j) = original.at(perm[static_cast<std::size_t>(p)], j);
    }

    TensorD permuted = model.forward(xp, unused, /*training=*/false);
    REQUIRE(permuted.shape() == base.shape());
    for (std::size_t i = 0; i < base.numel(); ++i)
        CHECK(permuted[i] == Catch::Approx(base[i]).margin(1e-5));
}

TEST_CASE("evaluation-mode forward is bit-deterministic") {
    auto cfg = vit::ViTConfig::desk(6, 13);
    Rng rng(13);
    vit::SimpleViTFi<float> model(cfg, rng);
    TensorF x = random_tensor<float>({4, 4, 32, 32}, rng);
    Rng r1(0), r2(999);  // eval mode must ignore the stream entirely
    TensorF a = model.forward(x, r1, /*training=*/false);
    TensorF b = model.forward(x, r2, /*training=*/false);
    REQUIRE(a.numel() == b.numel());
    CHECK(std::memcmp(a.data(), b.data(), a.numel() * sizeof(float)) == 0);
}

TEST_CASE("constant pooled features score to the head bias") {
    auto cfg = vit::ViTConfig::desk(5, 17);
    Rng rng(17);
    vit::SimpleViTFi<double> model(cfg, rng);
    const TensorD* bias = nullptr;
    for (auto& p : model.params())
        if (p.name == "vit.head.bias") bias = p.value;
    REQUIRE(bias != nullptr);

    // Standardizing a constant row gives exactly zero, so only bias remains.
    TensorD pooled({3, cfg.token_dim});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < cfg.token_dim; ++j) pooled.at(i, j) = 2.5 + i;
    TensorD logits = model.classify_features(pooled);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < cfg.num_classes; ++j) CHECK(logits.at(i, j) == bias->at(j));
}

TEST_CASE("feature standardization makes the head nearly scale-invariant") {
    auto cfg = vit::ViTConfig::desk(5, 19);
    Rng rng(19);
    vit::SimpleViTFi<double> model(cfg, rng);
    TensorD pooled = random_tensor<double>({4, cfg.token_dim}, rng);
    TensorD scaled = pooled;
    for (std::size_t i = 0; i < scaled.numel(); ++i) scaled[i] *= 10.0;
    TensorD a = model.classify_features(pooled);
    TensorD b = model.classify_features(scaled);
    for (std::size_t i = 0; i < a.numel(); ++i)
        CHECK(std::abs(a[i] - b[i]) < 1e-4);
}

TEST_CASE("argmax prediction breaks ties toward the lowest class") {
    TensorD logits({2, 4});
    logits.at(0, 0) = 1.0;
    logits.at(0, 1) = 3.0;
    logits.at(0, 2) = 3.0;
    logits.at(0, 3) = 2.0;
    for (int j = 0; j < 4; ++j) logits.at(1, j) = 0.25;
    CHECK(vit::predicted_class(logits, 0) == 1);
    CHECK(vit::predicted_class(logits, 1) == 0);
}

TEST_CASE("parameter count matches the closed form") {
    // patch projection + positions + depth * (2 norms + attention + MLP)
    // + affine-free standardization (0) + head.
    auto count_for = [](const vit::ViTConfig& c) -> std::size_t {
        const std::size_t d = static_cast<std::size_t>(c.token_dim);
        const std::size_t block = 2 * d + (d * 3 * d + 3 * d) + (d * d + d) + 2 * d +
                                  (d * static_cast<std::size_t>(c.mlp_dim) + c.mlp_dim) +
                                  (static_cast<std::size_t>(c.mlp_dim) * d + d);
        return static_cast<std::size_t>(c.patch_dim()) * d + d +
               static_cast<std::size_t>(c.num_patches) * d +
               static_cast<std::size_t>(c.depth) * block +
               d * static_cast<std::size_t>(c.num_classes) + c.num_classes;
    };

    vit::ViTConfig full;
    full.num_classes = 6;
    Rng rng(1);
    vit::SimpleViTFi<float> model(full, rng);
    CHECK(model.parameter_count() == count_for(full));
    CHECK(model.parameter_count() == 330176u + 65u * 6u);

    auto desk = vit::ViTConfig::desk(3, 1);
    Rng rng2(2);
    vit::SimpleViTFi<float> small(desk, rng2);
    CHECK(small.parameter_count() == count_for(desk));

    auto reduced = reduced_config();
    Rng rng3(3);
    vit::SimpleViTFi<float> tiny(reduced, rng3);
    CHECK(tiny.parameter_count() == count_for(reduced));
}

TEST_CASE("classifier gradients match finite differences on a reduced model") {
    auto cfg = reduced_config();
    Rng rng(41);
    vit::SimpleViTFi<double> model(cfg, rng);
    TensorD x = random_tensor<double>({3, 4, 32, 32}, rng);
    std::vector<int> labels = {0, 2, 1};
    Rng unused(0);

    auto loss_at = [&]() {
        return nn::cross_entropy(model.forward(x, unused, /*training=*/true), labels).loss;
    };

    auto params = model.params();
    nn::zero_grads(params);
    auto scored = nn::cross_entropy(model.forward(x, unused, true), labels);
    model.backward(scored.dlogits);

    Rng pick(43);
    int checked = 0;
    for (auto& p : params) {
        const std::size_t count = p.value->numel();
        for (int rep = 0; rep < 2; ++rep) {
            const auto idx =
                static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(count) - 1));
            const double saved = (*p.value)[idx];
            const double h = 1e-5;
            (*p.value)[idx] = saved + h;
            const double up = loss_at();
            (*p.value)[idx] = saved - h;
            const double down = loss_at();
            (*p.value)[idx] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = (*p.grad)[idx];
            const double bound =
                1e-3 * std::max(std::abs(analytic), std::abs(numeric)) + 1e-8;
            INFO(p.name << "[" << idx << "] analytic " << analytic << " numeric " << numeric);
            CHECK(std::abs(analytic - numeric) <= bound);
            ++checked;
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("confusion matrix rows count each class and accuracies follow") {
    std::vector<int> labels, preds;
    Rng rng(53);
    const int k = 5;
    std::vector<int> class_counts(k, 0);
    for (int i = 0; i < 200; ++i) {
        const int y = static_cast<int>(rng.uniform_int(0, k - 1));
        const int p = rng.uniform() < 0.6 ? y : static_cast<int>(rng.uniform_int(0, k - 1));
        labels.push_back(y);
        preds.push_back(p);
        ++class_counts[static_cast<std::size_t>(y)];
    }
    auto m = vit::metrics_from_predictions(labels, preds, k);
    CHECK(m.total == 200);
    int trace = 0;
    for (int c = 0; c < k; ++c) {
        const auto& row = m.confusion[static_cast<std::size_t>(c)];
        CHECK(std::accumulate(row.begin(), row.end(), 0) ==
              class_counts[static_cast<std::size_t>(c)]);
        trace += row[static_cast<std::size_t>(c)];
        if (class_counts[static_cast<std::size_t>(c)] > 0)
            CHECK(m.per_class_accuracy[static_cast<std::size_t>(c)] ==
                  Catch::Approx(static_cast<double>(row[static_cast<std::size_t>(c)]) /
                                class_counts[static_cast<std::size_t>(c)]));
    }
    CHECK(m.overall_accuracy == Catch::Approx(static_cast<double>(trace) / 200.0));

    auto j = vit::metrics_to_json(m);
    auto back = vit::metrics_from_json(j);
    CHECK(back.confusion == m.confusion);
    CHECK(back.overall_accuracy == m.overall_accuracy);
    CHECK(back.total == m.total);

    CHECK_THROWS_AS(vit::metrics_from_predictions({0, 7}, {0, 0}, 5), ConfigError);
    CHECK_THROWS_AS(vit::metrics_from_predictions({0}, {0, 0}, 5), ShapeError);
}

TEST_CASE("fresh classifier loss sits near the uniform-guess entropy") {
    auto cfg = vit::ViTConfig::desk(6, 101);
    Rng init(mix_seed(cfg.seed, 0x717u));
    vit::SimpleViTFi<float> model(cfg, init);
    Rng rng(7);
    TensorF x = random_tensor<float>({36, 4, 32, 32}, rng);
    std::vector<int> y(36);
    for (int i = 0; i < 36; ++i) y[static_cast<std::size_t>(i)] = i % 6;
    Rng unused(0);
    auto scored = nn::cross_entropy(model.forward(x, unused, /*training=*/false), y);
    const double target = std::log(6.0);
    CHECK(std::abs(scored.loss - target) <= 0.2 * target);
}

TEST_CASE("training rejects empty or malformed splits") {
    auto cfg = vit::ViTConfig::desk(2, 3);
    cfg.epochs = 1;
    TensorF empty({0, 4, 32, 32});
    CHECK_THROWS_AS(vit::train_classifier(cfg, empty, std::vector<int>{}), ConfigError);

    TensorF bad_shape({2, 4, 16, 32});
    CHECK_THROWS_AS(vit::train_classifier(cfg, bad_shape, std::vector<int>{0, 1}), ShapeError);

    TensorF ok({2, 4, 32, 32});
    CHECK_THROWS_AS(vit::train_classifier(cfg, ok, std::vector<int>{0}), ShapeError);
    CHECK_THROWS_AS(vit::train_classifier(cfg, ok, std::vector<int>{0, 2}), ConfigError);
}

TEST_CASE("separable two-class data trains to full accuracy within 50 epochs") {
    auto cfg = vit::ViTConfig::desk(2, 7);
    cfg.epochs = 50;
    cfg.batch_size = 8;
    TensorF x({40, 4, 32, 32});
    std::vector<int> y;
    Rng gen(99);
    make_separable(x, y, gen);

    auto result = vit::train_classifier(cfg, x, y);
    CHECK(result.final_epoch == 50);
    CHECK(result.loss_curve.size() == 50u * 5u);
    for (auto& [step, loss] : result.loss_curve) CHECK(std::isfinite(loss));
    CHECK(result.loss_curve.front().first == 1);
    CHECK(result.loss_curve.back().first == 250);

    auto metrics = vit::evaluate(result.model, x, y);
    CHECK(metrics.overall_accuracy == 1.0);
    CHECK(metrics.per_class_accuracy[0] == 1.0);
    CHECK(metrics.per_class_accuracy[1] == 1.0);
}

TEST_CASE("training is deterministic under a fixed seed") {
    auto cfg = vit::ViTConfig::desk(2, 23);
    cfg.epochs = 2;
    cfg.batch_size = 8;
    TensorF x({16, 4, 32, 32});
    std::vector<int> y;
    Rng gen(5);
    make_separable(x, y, gen);

    auto a = vit::train_classifier(cfg, x, y);
    auto b = vit::train_classifier(cfg, x, y);
    REQUIRE(a.loss_curve.size() == b.loss_curve.size());
    for (std::size_t i = 0; i < a.loss_curve.size(); ++i)
        CHECK(a.loss_curve[i].second == b.loss_curve[i].second);
    auto pa = a.model.params(), pb = b.model.params();
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK(std::memcmp(pa[i].value->data(), pb[i].value->data(),
                          pa[i].value->numel() * sizeof(float)) == 0);

    auto other = cfg;
    other.seed = 24;
    auto c = vit::train_classifier(other, x, y);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.loss_curve.size(); ++i)
        if (a.loss_curve[i].second != c.loss_curve[i].second) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("resuming a classifier checkpoint reproduces the uninterrupted run") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "csiaug_vit_ckpt";
    fs::create_directories(dir);

    auto cfg = vit::ViTConfig::desk(2, 29);
    cfg.epochs = 4;
    cfg.batch_size = 8;
    TensorF x({16, 4, 32, 32});
    std::vector<int> y;
    Rng gen(6);
    make_separable(x, y, gen);

    auto full = vit::train_classifier(cfg, x, y);

    vit::ClassifierTrainOptions opts;
    opts.checkpoint_path = dir / "half.csit";
    opts.checkpoint_every = 2;
    auto half_cfg = cfg;
    half_cfg.epochs = 2;
    vit::train_classifier(half_cfg, x, y, opts);

    vit::ClassifierTrainOptions resume;
    resume.resume_from = dir / "half.csit";
    auto resumed = vit::train_classifier(cfg, x, y, resume);

    CHECK(resumed.final_epoch == 4);
    REQUIRE(resumed.loss_curve.size() == full.loss_curve.size() / 2);
    for (std::size_t i = 0; i < resumed.loss_curve.size(); ++i) {
        CHECK(resumed.loss_curve[i].first == full.loss_curve[i + 4].first);
        CHECK(resumed.loss_curve[i].second == full.loss_curve[i + 4].second);
    }
    auto pf = full.model.params(), pr = resumed.model.params();
    for (std::size_t i = 0; i < pf.size(); ++i) {
        INFO(pf[i].name);
        CHECK(std::memcmp(pf[i].value->data(), pr[i].value->data(),
                          pf[i].value->numel() * sizeof(float)) == 0);
    }

    // Architecture mismatch is rejected.
    auto wrong = cfg;
    wrong.token_dim = 32;
    wrong.heads = 4;
    vit::ClassifierTrainOptions bad;
    bad.resume_from = dir / "half.csit";
    CHECK_THROWS_AS(vit::train_classifier(wrong, x, y, bad), ConfigError);

    fs::remove_all(dir);
}

TEST_CASE("summary reports the patch decomposition and parameter count") {
    vit::ViTConfig cfg;
    cfg.num_classes = 6;
    Rng rng(61);
    vit::SimpleViTFi<float> model(cfg, rng);
    const std::string text = model.summary();
    CHECK(text.find("4x256x256") != std::string::npos);
    CHECK(text.find("4x128x128") != std::string::npos);
    CHECK(text.find("16 x (4x128x8)") != std::string::npos);
    CHECK(text.find("4096") != std::string::npos);
    CHECK(text.find("330566") != std::string::npos);
}
