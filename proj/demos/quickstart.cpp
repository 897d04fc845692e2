// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0
//
// Smallest end-to-end tour: synthesize a labeled dataset, normalize it,
// train the classifier for a few epochs, and print the evaluation. Runs in
// well under a minute on one CPU core; outputs land in ./demo_output.

#include <filesystem>
#include <iostream>

#include "csiaug/harness/run.hpp"
#include "csiaug/synth/synthgen.hpp"

using namespace csiaug;

int main() {
    const std::filesystem::path out = "demo_output/quickstart";
    std::filesystem::create_directories(out);

    // 6 classes, 32x32 images, two antennas; moderate sensor noise.
    synth::SynthProfile profile = synth::SynthProfile::desk_profile(/*seed=*/7, /*classes=*/6);
    profile.noise_std = 0.2;
    const synth::SynthResult synth = synth_dataset(profile, /*samples_per_class=*/24);
    std::cout << "synthesized " << synth.data.images.size() << " samples\n";

    // Normalize with statistics from the data itself, then split by hand:
    // first 18 of each class train, the rest test.
    csi::Dataset d = synth.data;
    const csi::NormStats stats = csi::compute_norm_stats(d.images);
    for (auto& image : d.images) image = csi::normalize(image, stats);

    std::vector<csi::CsiImage> train, test;
    std::vector<int> per_class(6, 0);
    for (const auto& image : d.images)
        (per_class[static_cast<std::size_t>(image.label)]++ < 18 ? train : test).push_back(image);

    auto [train_x, train_y] = harness::stack_images(train);
    auto [test_x, test_y] = harness::stack_images(test);

    vit::ViTConfig cfg = vit::ViTConfig::desk(/*num_classes=*/6, /*seed=*/1);
    cfg.epochs = 30;

    {
        Rng rng(0);
        vit::SimpleViTFi<float> untrained(cfg, rng);
        std::cout << untrained.summary() << "\n";
    }

    vit::ClassifierTrainOptions opts;
    opts.progress = &std::cout;
    auto result = vit::train_classifier(cfg, train_x, train_y, opts);

    const auto metrics = vit::evaluate(result.model, test_x, test_y);
    std::cout << "test accuracy " << metrics.overall_accuracy << " on " << metrics.total
              << " held-out samples\n";
    io::write_png(out / "confusion.png", harness::render_confusion(metrics, "QUICKSTART"));
    std::cout << "confusion matrix image: " << (out / "confusion.png").string() << "\n";
    return 0;
}
