// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "csiaug/common.hpp"
#include "csiaug/nn/checkpoint.hpp"
#include "csiaug/nn/loss.hpp"
#include "csiaug/nn/optim.hpp"
#include "csiaug/rng.hpp"
#include "csiaug/tensor.hpp"
#include "csiaug/vit/vit.hpp"

namespace csiaug::vit {

// Row i of `confusion` counts true-class-i samples by predicted class, so
// each row sums to that class's sample count and the diagonal over the total
// gives overall accuracy.
struct ClassifierMetrics {
    std::vector<std::vector<int>> confusion;
    std::vector<double> per_class_accuracy;
    double overall_accuracy = 0.0;
    int total = 0;
};

inline nlohmann::json metrics_to_json(const ClassifierMetrics& m) {
    return nlohmann::json{{"confusion", m.confusion},
                          {"per_class_accuracy", m.per_class_accuracy},
                          {"overall_accuracy", m.overall_accuracy},
                          {"total", m.total}};
}

inline ClassifierMetrics metrics_from_json(const nlohmann::json& j) {
    ClassifierMetrics m;
    m.confusion = j.at("confusion").get<std::vector<std::vector<int>>>();
    m.per_class_accuracy = j.at("per_class_accuracy").get<std::vector<double>>();
    m.overall_accuracy = j.at("overall_accuracy").get<double>();
    m.total = j.at("total").get<int>();
    return m;
}

inline ClassifierMetrics metrics_from_predictions(const std::vector<int>& labels,
                                                  const std::vector<int>& predictions,
                                                  int num_classes) {
    require<ShapeError>(labels.size() == predictions.size(),
                        "metrics: label/prediction count mismatch");
    ClassifierMetrics m;
    m.confusion.assign(static_cast<std::size_t>(num_classes),
                       std::vector<int>(static_cast<std::size_t>(num_classes), 0));
    m.total = static_cast<int>(labels.size());
    int correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i], p = predictions[i];
        require<ConfigError>(y >= 0 && y < num_classes, "metrics: label out of range");
        require<ConfigError>(p >= 0 && p < num_classes, "metrics: prediction out of range");
        ++m.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
        if (p == y) ++correct;
    }
    m.per_class_accuracy.assign(static_cast<std::size_t>(num_classes), 0.0);
    for (int c = 0; c < num_classes; ++c) {
        const auto& row = m.confusion[static_cast<std::size_t>(c)];
        const int row_sum = std::accumulate(row.begin(), row.end(), 0);
        if (row_sum > 0)
            m.per_class_accuracy[static_cast<std::size_t>(c)] =
                static_cast<double>(row[static_cast<std::size_t>(c)]) / row_sum;
    }
    m.overall_accuracy = m.total > 0 ? static_cast<double>(correct) / m.total : 0.0;
    return m;
}

// Eval-mode predictions (dropout disabled), batched to bound peak memory.
template <typename S>
inline std::vector<int> predict(SimpleViTFi<S>& model, const Tensor<S>& images,
                                int batch_size = 32) {
    require<ShapeError>(images.rank() == 4, "predict: rank-4 image batch expected");
    const int n = images.dim(0);
    const int c = images.dim(1), k = images.dim(2), t = images.dim(3);
    Rng unused(0);  // eval mode draws nothing
    std::vector<int> predictions;
    predictions.reserve(static_cast<std::size_t>(n));
    for (int start = 0; start < n; start += batch_size) {
        const int count = std::min(batch_size, n - start);
        Tensor<S> batch({count, c, k, t});
        std::copy_n(images.data() + static_cast<std::size_t>(start) * c * k * t, batch.numel(),
                    batch.data());
        Tensor<S> logits = model.forward(batch, unused, /*training=*/false);
        for (int i = 0; i < count; ++i) predictions.push_back(predicted_class(logits, i));
    }
    return predictions;
}

template <typename S>
inline ClassifierMetrics evaluate(SimpleViTFi<S>& model, const Tensor<S>& images,
                                  const std::vector<int>& labels) {
    require<ShapeError>(images.dim(0) == static_cast<int>(labels.size()),
                        "evaluate: image/label count mismatch");
    return metrics_from_predictions(labels, predict(model, images),
                                    model.config().num_classes);
}

struct ClassifierTrainOptions {
    std::ostream* progress = nullptr;
    int progress_every = 10;  // epochs between progress lines
    std::filesystem::path checkpoint_path;
    int checkpoint_every = 0;  // epochs between saves; 0 = final only
    std::filesystem::path resume_from;
};

template <typename S>
struct TrainClassifierResult {
    SimpleViTFi<S> model;
    std::vector<std::pair<int, double>> loss_curve;  // (optimizer step, batch loss)
    int final_epoch = 0;
};

template <typename S>
inline void save_classifier_checkpoint(const std::filesystem::path& path, const ViTConfig& cfg,
                                       int epoch, int step, SimpleViTFi<S>& model,
                                       const nn::AdamW<S>& opt, const Rng& data_rng) {
    nn::Checkpoint ck;
    ck.meta["kind"] = "classifier";
    ck.meta["epoch"] = epoch;
    ck.meta["step"] = step;
    ck.meta["config"] = vit_config_to_json(cfg);
    ck.meta["data_rng"] = nn::rng_state_to_json(data_rng.state());
    auto params = model.params();
    nn::save_params(ck, params);
    nn::save_optimizer(ck, opt);
    nn::write_checkpoint(path, ck);
}

// Restores parameters, optimizer moments, and the data stream; returns the
// epoch the checkpoint was taken at.
template <typename S>
inline int load_classifier_checkpoint(const std::filesystem::path& path, const ViTConfig& cfg,
                                      SimpleViTFi<S>& model, nn::AdamW<S>& opt, Rng& data_rng,
                                      int& step) {
    nn::Checkpoint ck = nn::read_checkpoint(path);
    require<ConfigError>(ck.meta.value("kind", "") == "classifier",
                         "classifier checkpoint: wrong kind");
    const ViTConfig stored = vit_config_from_json(ck.meta.at("config"));
    require<ConfigError>(stored.channels == cfg.channels && stored.carriers == cfg.carriers &&
                             stored.time_slots == cfg.time_slots &&
                             stored.num_patches == cfg.num_patches &&
                             stored.token_dim == cfg.token_dim && stored.depth == cfg.depth &&
                             stored.heads == cfg.heads && stored.mlp_dim == cfg.mlp_dim &&
                             stored.num_classes == cfg.num_classes,
                         "classifier checkpoint: architecture mismatch");
    auto params = model.params();
    nn::load_params(ck, params);
    nn::load_optimizer(ck, opt, params);
    data_rng.set_state(nn::rng_state_from_json(ck.meta.at("data_rng")));
    step = ck.meta.at("step").get<int>();
    return ck.meta.at("epoch").get<int>();
}

// Cross-entropy training with decoupled weight decay. Each epoch draws, in a
// frozen order from one data stream, the shuffle followed by every dropout
// mask, so restoring the stream state at an epoch boundary resumes the exact
// run. Incomplete trailing batches are kept.
template <typename S>
inline TrainClassifierResult<S> train_classifier(const ViTConfig& cfg,
                                                 const Tensor<S>& images,
                                                 const std::vector<int>& labels,
                                                 const ClassifierTrainOptions& opts = {}) {
    cfg.validate();
    require<ShapeError>(images.rank() == 4 && images.dim(1) == cfg.channels &&
                            images.dim(2) == cfg.carriers && images.dim(3) == cfg.time_slots,
                        "train_classifier: bad image shape");
    const int n = images.dim(0);
    require<ConfigError>(n > 0, "train_classifier: empty training split");
    require<ShapeError>(static_cast<int>(labels.size()) == n,
                        "train_classifier: image/label count mismatch");
    for (int y : labels)
        require<ConfigError>(y >= 0 && y < cfg.num_classes,
                             "train_classifier: label out of range");

    Rng init_rng(mix_seed(cfg.seed, 0x717u));
    Rng data_rng(mix_seed(cfg.seed, 0xda7au));

    TrainClassifierResult<S> result;
    result.model = SimpleViTFi<S>(cfg, init_rng);

    nn::AdamW<S> opt;
    opt.lr = cfg.learning_rate;
    opt.weight_decay = cfg.weight_decay;

    int step = 0;
    int start_epoch = 0;
    if (!opts.resume_from.empty())
        start_epoch =
            load_classifier_checkpoint(opts.resume_from, cfg, result.model, opt, data_rng, step);
    result.final_epoch = start_epoch;

    auto params = result.model.params();
    const int c = images.dim(1), k = images.dim(2), t = images.dim(3);
    const std::size_t image_size = static_cast<std::size_t>(c) * k * t;

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        data_rng.shuffle(order);

        double epoch_loss = 0.0;
        int epoch_batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - start);
            Tensor<S> batch({count, c, k, t});
            std::vector<int> batch_labels(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i) {
                const int src = order[static_cast<std::size_t>(start + i)];
                std::copy_n(images.data() + static_cast<std::size_t>(src) * image_size,
                            image_size, batch.data() + static_cast<std::size_t>(i) * image_size);
                batch_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(src)];
            }

            nn::zero_grads(params);
            Tensor<S> logits = result.model.forward(batch, data_rng, /*training=*/true);
            auto scored = nn::cross_entropy(logits, batch_labels);
            require<GenerationError>(std::isfinite(scored.loss),
                                     "train_classifier: non-finite loss at step " +
                                         std::to_string(step + 1));
            result.model.backward(scored.dlogits);
            opt.step(params);

            ++step;
            result.loss_curve.emplace_back(step, scored.loss);
            epoch_loss += scored.loss;
            ++epoch_batches;
        }

        result.final_epoch = epoch;
        if (opts.progress && opts.progress_every > 0 &&
            (epoch % opts.progress_every == 0 || epoch == cfg.epochs))
            (*opts.progress) << "epoch " << epoch << "/" << cfg.epochs << "  loss "
                             << epoch_loss / std::max(epoch_batches, 1) << "\n";
        if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
            epoch % opts.checkpoint_every == 0 && epoch != cfg.epochs)
            save_classifier_checkpoint(opts.checkpoint_path, cfg, epoch, step, result.model, opt,
                                       data_rng);
    }

    if (!opts.checkpoint_path.empty())
        save_classifier_checkpoint(opts.checkpoint_path, cfg, result.final_epoch, step,
                                   result.model, opt, data_rng);
    return result;
}

}  // namespace csiaug::vit
