// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csiaug/common.hpp"
#include "csiaug/diffusion/schedule.hpp"
#include "csiaug/diffusion/unet.hpp"
#include "csiaug/nn/checkpoint.hpp"
#include "csiaug/nn/loss.hpp"
#include "csiaug/nn/optim.hpp"
#include "csiaug/rng.hpp"
#include "csiaug/tensor.hpp"

namespace csiaug::diffusion {

// Forward process: x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, one step
// index for the whole tensor.
template <typename S>
inline Tensor<S> q_sample(const Tensor<S>& x0, int t, const Tensor<S>& eps,
                          const NoiseSchedule& sched) {
    require<ShapeError>(x0.same_shape(eps), "q_sample: x0/eps shape mismatch");
    require<ConfigError>(t >= 1 && t <= sched.timesteps(), "q_sample: step out of range");
    const double abar = sched.alpha_bar(t);
    const S a = static_cast<S>(std::sqrt(abar));
    const S b = static_cast<S>(std::sqrt(1.0 - abar));
    Tensor<S> xt(x0.shape());
    for (std::size_t i = 0; i < xt.numel(); ++i) xt[i] = a * x0[i] + b * eps[i];
    return xt;
}

// Batched forward process with a per-sample step index; x0 is [N, ...].
template <typename S>
inline Tensor<S> q_sample_batch(const Tensor<S>& x0, const std::vector<int>& t,
                                const Tensor<S>& eps, const NoiseSchedule& sched) {
    require<ShapeError>(x0.same_shape(eps), "q_sample: x0/eps shape mismatch");
    require<ShapeError>(x0.rank() >= 2 && x0.dim(0) == static_cast<int>(t.size()),
                        "q_sample: one step index per sample required");
    const std::size_t per = x0.numel() / static_cast<std::size_t>(x0.dim(0));
    Tensor<S> xt(x0.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
        require<ConfigError>(t[i] >= 1 && t[i] <= sched.timesteps(),
                             "q_sample: step out of range");
        const double abar = sched.alpha_bar(t[i]);
        const S a = static_cast<S>(std::sqrt(abar));
        const S b = static_cast<S>(std::sqrt(1.0 - abar));
        const std::size_t off = i * per;
        for (std::size_t j = 0; j < per; ++j) xt[off + j] = a * x0[off + j] + b * eps[off + j];
    }
    return xt;
}

// One training objective evaluation: draw t ~ U{1..T} and eps ~ N(0,1) per
// sample, noise the batch, and score the predictor's noise estimate by mean
// squared error over every element.  Forward only; use training_step to also
// accumulate gradients.
template <typename S, typename Model>
inline double training_loss(Model& model, const Tensor<S>& x0, const std::vector<int>& labels,
                            const NoiseSchedule& sched, Rng& rng) {
    require<ShapeError>(x0.rank() == 4 && x0.dim(0) >= 1, "training_loss: batch must be non-empty");
    require<ShapeError>(x0.dim(0) == static_cast<int>(labels.size()),
                        "training_loss: one label per sample required");
    const int n = x0.dim(0);
    std::vector<int> t(static_cast<std::size_t>(n));
    for (auto& ti : t) ti = static_cast<int>(rng.uniform_int(1, sched.timesteps()));
    Tensor<S> eps(x0.shape());
    rng.fill_normal(eps.flat());
    const Tensor<S> xt = q_sample_batch(x0, t, eps, sched);
    const Tensor<S> eps_hat = model.forward(xt, t, labels);
    return nn::mse_loss(eps_hat, eps).loss;
}

// training_loss plus backpropagation into the model's gradient accumulators.
template <typename S, typename Model>
inline double training_step(Model& model, const Tensor<S>& x0, const std::vector<int>& labels,
                            const NoiseSchedule& sched, Rng& rng) {
    require<ShapeError>(x0.rank() == 4 && x0.dim(0) >= 1, "training_step: batch must be non-empty");
    require<ShapeError>(x0.dim(0) == static_cast<int>(labels.size()),
                        "training_step: one label per sample required");
    const int n = x0.dim(0);
    std::vector<int> t(static_cast<std::size_t>(n));
    for (auto& ti : t) ti = static_cast<int>(rng.uniform_int(1, sched.timesteps()));
    Tensor<S> eps(x0.shape());
    rng.fill_normal(eps.flat());
    const Tensor<S> xt = q_sample_batch(x0, t, eps, sched);
    const Tensor<S> eps_hat = model.forward(xt, t, labels);
    auto scored = nn::mse_loss(eps_hat, eps);
    model.backward(scored.grad);
    return scored.loss;
}

// One ancestral denoising step, Eq.-style posterior mean plus fixed-variance
// noise:
//   mu  = (x_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)
//   out = mu + sqrt(posterior_variance(t)) * z,  z = 0 at t = 1.
// The noise scale is the standard deviation, not the variance.
template <typename S, typename Model>
inline Tensor<S> p_sample_step(Model& model, const Tensor<S>& xt, int t,
                               const std::vector<int>& labels, const NoiseSchedule& sched,
                               Rng& rng) {
    require<ShapeError>(xt.rank() == 4 && xt.dim(0) == static_cast<int>(labels.size()),
                        "p_sample_step: one label per sample required");
    const double beta = sched.beta(t);
    const double alpha = sched.alpha(t);
    const double abar = sched.alpha_bar(t);
    const double coef = beta / std::sqrt(1.0 - abar);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double sigma = std::sqrt(sched.posterior_variance(t));

    const std::vector<int> tvec(static_cast<std::size_t>(xt.dim(0)), t);
    const Tensor<S> eps_hat = model.forward(xt, tvec, labels);
    Tensor<S> out(xt.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double mu = inv_sqrt_alpha * (static_cast<double>(xt[i]) -
                                            coef * static_cast<double>(eps_hat[i]));
        out[i] = static_cast<S>(t > 1 ? mu + sigma * rng.normal() : mu);
    }
    return out;
}

struct GenerateOptions {
    // Record the running state when it reaches these step indices; T is the
    // initial noise, 0 the final (pre-clamp) image.  Snapshots are raw.
    std::vector<int> snapshot_steps;
};

template <typename S>
struct GenerationOutput {
    Tensor<S> samples;                               // [n, C, K, T], clamped to [-1, 1]
    std::vector<std::pair<int, Tensor<S>>> snapshots;  // (step, state at that step)
};

// Ancestral sampling from pure noise, conditioned on one class label.  Each
// image draws from its own derived substream keyed by sample position, so the
// result for image j is the same whether images are generated singly or
// batched.  The caller's generator is advanced exactly once (stream key).
template <typename S, typename Model>
inline GenerationOutput<S> generate(Model& model, int label, int n, const NoiseSchedule& sched,
                                    Rng& rng, int channels, int height, int width,
                                    const GenerateOptions& opts = {}) {
    require<ConfigError>(n >= 0, "generate: n must be >= 0");
    GenerationOutput<S> out;
    out.samples = Tensor<S>({n, channels, height, width});
    if (n == 0) return out;

    const std::uint64_t base = rng.next_u64();
    std::vector<Rng> streams;
    streams.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) streams.emplace_back(mix_seed(base, static_cast<std::uint64_t>(j)));

    const std::size_t per = static_cast<std::size_t>(channels) * height * width;
    Tensor<S> x({n, channels, height, width});
    for (int j = 0; j < n; ++j)
        streams[static_cast<std::size_t>(j)].fill_normal(
            std::span<S>(x.data() + static_cast<std::size_t>(j) * per, per));

    const auto wants = [&](int step) {
        return std::find(opts.snapshot_steps.begin(), opts.snapshot_steps.end(), step) !=
               opts.snapshot_steps.end();
    };
    if (wants(sched.timesteps())) out.snapshots.emplace_back(sched.timesteps(), x);

    const std::vector<int> labels(static_cast<std::size_t>(n), label);
    for (int t = sched.timesteps(); t >= 1; --t) {
        const double beta = sched.beta(t);
        const double alpha = sched.alpha(t);
        const double abar = sched.alpha_bar(t);
        const double coef = beta / std::sqrt(1.0 - abar);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        const double sigma = std::sqrt(sched.posterior_variance(t));

        const std::vector<int> tvec(static_cast<std::size_t>(n), t);
        const Tensor<S> eps_hat = model.forward(x, tvec, labels);
        for (int j = 0; j < n; ++j) {
            Rng& stream = streams[static_cast<std::size_t>(j)];
            const std::size_t off = static_cast<std::size_t>(j) * per;
            for (std::size_t i = 0; i < per; ++i) {
                const double mu =
                    inv_sqrt_alpha * (static_cast<double>(x[off + i]) -
                                      coef * static_cast<double>(eps_hat[off + i]));
                x[off + i] = static_cast<S>(t > 1 ? mu + sigma * stream.normal() : mu);
            }
        }
        if (!x.all_finite())
            throw GenerationError("generate: non-finite state after denoising step " +
                                  std::to_string(t));
        if (wants(t - 1)) out.snapshots.emplace_back(t - 1, x);
    }

    for (std::size_t i = 0; i < x.numel(); ++i)
        out.samples[i] = std::clamp(x[i], S(-1), S(1));
    return out;
}

// ---------------------------------------------------------------------------
// Training driver.

struct DiffusionConfig {
    int timesteps = 500;
    double beta_start = 1e-4;
    double beta_end = 0.28;
    int channels = 4;
    int height = 256;  // carrier rows
    int width = 256;   // time slots
    int base_width = 64;
    std::vector<int> stage_multipliers = {1, 2, 4};
    int embedding_dim = 256;
    int num_classes = 6;
    int batch_size = 8;
    double learning_rate = 2e-4;
    double weight_decay = 0.0;
    int max_steps = 10000;
    std::uint64_t seed = 0;

    void validate() const {
        require<ConfigError>(timesteps >= 1, "diffusion: timesteps must be >= 1");
        require<ConfigError>(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
                             "diffusion: need 0 < beta_start <= beta_end < 1");
        require<ConfigError>(channels >= 1 && height >= 1 && width >= 1,
                             "diffusion: image shape must be positive");
        require<ConfigError>(batch_size >= 1, "diffusion: batch_size must be >= 1");
        require<ConfigError>(learning_rate > 0.0, "diffusion: learning_rate must be > 0");
        require<ConfigError>(weight_decay >= 0.0, "diffusion: weight_decay must be >= 0");
        require<ConfigError>(max_steps >= 0, "diffusion: max_steps must be >= 0");
        unet().validate();
    }

    UNetConfig unet() const {
        UNetConfig u;
        u.in_channels = channels;
        u.base_width = base_width;
        u.stage_multipliers = stage_multipliers;
        u.embedding_dim = embedding_dim;
        u.num_classes = num_classes;
        return u;
    }

    NoiseSchedule schedule() const { return NoiseSchedule::linear(timesteps, beta_start, beta_end); }

    // Small-model preset used by the synthetic 32x32 experiments.
    static DiffusionConfig desk(int num_classes_, std::uint64_t seed_) {
        DiffusionConfig c;
        c.timesteps = 200;
        c.channels = 4;
        c.height = 32;
        c.width = 32;
        c.base_width = 16;
        c.stage_multipliers = {1, 2};
        c.embedding_dim = 64;
        c.num_classes = num_classes_;
        c.batch_size = 8;
        c.seed = seed_;
        return c;
    }
};

inline nlohmann::json diffusion_config_to_json(const DiffusionConfig& c) {
    return nlohmann::json{{"timesteps", c.timesteps},
                          {"beta_start", c.beta_start},
                          {"beta_end", c.beta_end},
                          {"channels", c.channels},
                          {"height", c.height},
                          {"width", c.width},
                          {"base_width", c.base_width},
                          {"stage_multipliers", c.stage_multipliers},
                          {"embedding_dim", c.embedding_dim},
                          {"num_classes", c.num_classes},
                          {"batch_size", c.batch_size},
                          {"learning_rate", c.learning_rate},
                          {"weight_decay", c.weight_decay},
                          {"max_steps", c.max_steps},
                          {"seed", c.seed}};
}

inline DiffusionConfig diffusion_config_from_json(const nlohmann::json& j) {
    DiffusionConfig c;
    c.timesteps = j.value("timesteps", c.timesteps);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    c.channels = j.value("channels", c.channels);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.base_width = j.value("base_width", c.base_width);
    c.stage_multipliers = j.value("stage_multipliers", c.stage_multipliers);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.seed = j.value("seed", c.seed);
    return c;
}

struct DiffusionTrainOptions {
    std::ostream* progress = nullptr;        // one line every `progress_every` steps
    int progress_every = 100;
    std::filesystem::path checkpoint_path;   // empty: no checkpoints written
    int checkpoint_every = 0;                // 0: final checkpoint only
    std::filesystem::path resume_from;       // empty: fresh start
};

template <typename S>
struct TrainDiffusionResult {
    UNet<S> model;
    std::vector<std::pair<int, double>> loss_curve;  // (step, loss), every step
    int final_step = 0;
};

template <typename S>
inline void save_diffusion_checkpoint(const std::filesystem::path& path,
                                      const DiffusionConfig& cfg, UNet<S>& model,
                                      const nn::AdamW<S>& opt, const Rng& rng, int step) {
    nn::Checkpoint ck;
    ck.meta["kind"] = "diffusion";
    ck.meta["step"] = step;
    ck.meta["config"] = diffusion_config_to_json(cfg);
    ck.meta["rng"] = nn::rng_state_to_json(rng.state());
    auto params = model.params();
    nn::save_params(ck, params);
    nn::save_optimizer(ck, opt);
    nn::write_checkpoint(path, ck);
}

// Rebuilds model/optimizer/rng/step from a checkpoint; the stored config must
// match the shape-determining fields of `cfg`.
template <typename S>
inline int load_diffusion_checkpoint(const std::filesystem::path& path, const DiffusionConfig& cfg,
                                     UNet<S>& model, nn::AdamW<S>& opt, Rng& rng) {
    const nn::Checkpoint ck = nn::read_checkpoint(path);
    require<IoError>(ck.meta.value("kind", "") == "diffusion",
                     "diffusion checkpoint: wrong kind in " + path.string());
    const DiffusionConfig stored = diffusion_config_from_json(ck.meta.at("config"));
    require<ConfigError>(stored.channels == cfg.channels && stored.height == cfg.height &&
                             stored.width == cfg.width && stored.base_width == cfg.base_width &&
                             stored.stage_multipliers == cfg.stage_multipliers &&
                             stored.embedding_dim == cfg.embedding_dim &&
                             stored.num_classes == cfg.num_classes,
                         "diffusion checkpoint: model shape differs from config");
    auto params = model.params();
    nn::load_params(ck, params);
    nn::load_optimizer(ck, opt, params);
    rng.set_state(nn::rng_state_from_json(ck.meta.at("rng")));
    return ck.meta.at("step").get<int>();
}

// Minimizes the noise-prediction objective with decoupled-weight-decay Adam.
// images: [N, C, K, T] already normalized to [-1, 1]; one label per image.
// Deterministic under cfg.seed; resuming from a checkpoint at step s and
// continuing reproduces the uninterrupted run bit for bit.
template <typename S>
inline TrainDiffusionResult<S> train_diffusion(const DiffusionConfig& cfg, const Tensor<S>& images,
                                               const std::vector<int>& labels,
                                               const DiffusionTrainOptions& opts = {}) {
    cfg.validate();
    require<ShapeError>(images.rank() == 4 && images.dim(1) == cfg.channels &&
                            images.dim(2) == cfg.height && images.dim(3) == cfg.width,
                        "train_diffusion: images do not match configured shape");
    const int n_items = images.dim(0);
    require<ShapeError>(n_items >= 1, "train_diffusion: empty dataset");
    require<ShapeError>(static_cast<int>(labels.size()) == n_items,
                        "train_diffusion: one label per image required");
    for (int label : labels)
        require<ConfigError>(label >= 0 && label < cfg.num_classes,
                             "train_diffusion: label out of range");
    for (std::size_t i = 0; i < images.numel(); ++i)
        require<ConfigError>(images[i] >= S(-1.0001) && images[i] <= S(1.0001),
                             "train_diffusion: images must be normalized to [-1, 1]");

    const NoiseSchedule sched = cfg.schedule();
    Rng init_rng(mix_seed(cfg.seed, 0xd1ffu));
    Rng data_rng(mix_seed(cfg.seed, 0xda7au));

    TrainDiffusionResult<S> result;
    result.model = UNet<S>(cfg.unet(), init_rng);
    auto params = result.model.params();
    nn::AdamW<S> opt;
    opt.lr = cfg.learning_rate;
    opt.weight_decay = cfg.weight_decay;
    int start_step = 0;
    if (!opts.resume_from.empty())
        start_step =
            load_diffusion_checkpoint(opts.resume_from, cfg, result.model, opt, data_rng);
    result.final_step = start_step;

    const std::size_t per = images.numel() / static_cast<std::size_t>(n_items);
    Tensor<S> batch({cfg.batch_size, cfg.channels, cfg.height, cfg.width});
    std::vector<int> batch_labels(static_cast<std::size_t>(cfg.batch_size));

    for (int step = start_step + 1; step <= cfg.max_steps; ++step) {
        // Frozen draw order per step: sample indices, then per-sample t, then
        // noise — checkpoint resume depends on it.
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto idx = static_cast<std::size_t>(data_rng.uniform_int(0, n_items - 1));
            std::copy(images.data() + idx * per, images.data() + (idx + 1) * per,
                      batch.data() + static_cast<std::size_t>(b) * per);
            batch_labels[static_cast<std::size_t>(b)] = labels[idx];
        }
        nn::zero_grads(params);
        const double loss = training_step(result.model, batch, batch_labels, sched, data_rng);
        if (!std::isfinite(loss))
            throw GenerationError("train_diffusion: non-finite loss at step " +
                                  std::to_string(step));
        opt.step(params);
        result.loss_curve.emplace_back(step, loss);
        result.final_step = step;

        if (opts.progress && opts.progress_every > 0 && step % opts.progress_every == 0)
            (*opts.progress) << "[train-diffusion] step " << step << "/" << cfg.max_steps
                             << " loss " << loss << "\n";
        if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
            step % opts.checkpoint_every == 0)
            save_diffusion_checkpoint(opts.checkpoint_path, cfg, result.model, opt, data_rng, step);
    }
    if (!opts.checkpoint_path.empty())
        save_diffusion_checkpoint(opts.checkpoint_path, cfg, result.model, opt, data_rng,
                                  result.final_step);
    return result;
}

}  // namespace csiaug::diffusion
