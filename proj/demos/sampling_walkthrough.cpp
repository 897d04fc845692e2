// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0
//
// Conditional-sampler tour: train a small noise predictor on two synthetic
// classes, draw class-conditional samples, and render the reverse process as
// an image grid (left = pure noise, right = finished sample). A few minutes
// on one CPU core; outputs land in ./demo_output.

#include <filesystem>
#include <iostream>

#include "csiaug/harness/render.hpp"
#include "csiaug/harness/run.hpp"
#include "csiaug/synth/synthgen.hpp"

using namespace csiaug;

int main() {
    const std::filesystem::path out = "demo_output/sampling";
    std::filesystem::create_directories(out);

    synth::SynthProfile profile = synth::SynthProfile::desk_profile(/*seed=*/3, /*classes=*/2);
    profile.noise_std = 0.1;
    csi::Dataset d = synth_dataset(profile, /*samples_per_class=*/40).data;
    const csi::NormStats stats = csi::compute_norm_stats(d.images);
    for (auto& image : d.images) image = csi::normalize(image, stats);
    auto [images, labels] = harness::stack_images(d.images);

    diffusion::DiffusionConfig cfg = diffusion::DiffusionConfig::desk(/*num_classes=*/2,
                                                                      /*seed=*/11);
    cfg.max_steps = 600;

    std::cout << "training the noise predictor (" << cfg.max_steps << " steps)...\n";
    diffusion::DiffusionTrainOptions opts;
    opts.progress = &std::cout;
    auto trained = diffusion::train_diffusion(cfg, images, labels, opts);
    harness::write_losses_csv(out / "losses.csv", trained.loss_curve);

    // Record the reverse trajectory at a few steps for the grid.
    diffusion::GenerateOptions gopts;
    gopts.snapshot_steps = {cfg.timesteps, 150, 100, 50, 25, 0};

    Rng rng(5);
    const diffusion::NoiseSchedule sched = cfg.schedule();
    auto gen = diffusion::generate<float>(trained.model, /*label=*/0, /*n=*/4, sched, rng,
                                          cfg.channels, cfg.height, cfg.width, gopts);

    io::write_png(out / "denoising_grid.png", harness::render_denoising_grid(gen.snapshots));
    std::cout << "reverse-process grid: " << (out / "denoising_grid.png").string() << "\n"
              << "final samples clamped to [-1, 1]; tensor " << gen.samples.dim(0) << "x"
              << gen.samples.dim(1) << "x" << gen.samples.dim(2) << "x" << gen.samples.dim(3)
              << "\n";
    return 0;
}
