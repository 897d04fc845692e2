// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0
//
// csiaug command-line tool. Subcommands cover the full pipeline: synthetic
// dataset generation, frame-dump ingestion and normalization, sampler and
// classifier training, class-conditional sampling, scenario runs, and report
// aggregation. Every run is deterministic under its seed flags.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csiaug/csi/reader.hpp"
#include "csiaug/harness/run.hpp"
#include "csiaug/synth/synthgen.hpp"

namespace fs = std::filesystem;
using namespace csiaug;

namespace {

// Shared flag bundle; each subcommand reads the fields it documents.
struct Args {
    std::string out;
    std::string data;
    std::string config;
    std::string checkpoint;
    std::string resume;
    std::string stats_from;
    std::string plan;
    std::string scenario;
    std::vector<std::string> csv;
    std::vector<std::string> manifests;
    std::vector<int> labels;
    std::vector<int> classes_to_sample;
    std::string snapshots;
    std::uint64_t seed = 0;
    int num_classes = 6;
    int samples = 80;
    int carriers = 256;
    int time_slots = 256;
    int frames = csi::kFramesPerImage;
    int stride = 0;  // 0: equal to frames
    int count = 8;
    int epochs = 0;     // 0: keep config value
    int steps = 0;      // 0: keep config value
    int batch = 0;      // 0: keep config value
    int checkpoint_every = 0;
    int antenna_a = 0;
    int antenna_b = 3;
    double noise = -1.0;  // <0: keep profile default
    bool desk = false;
    bool normalize = false;
    bool quiet = false;
    std::string ground_truth;
};

nlohmann::json load_config_json(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    return harness::read_json_file(path);
}

std::vector<int> parse_step_list(const std::string& text) {
    std::vector<int> steps;
    std::string token;
    std::istringstream is(text);
    while (std::getline(is, token, ','))
        if (!token.empty()) steps.push_back(std::stoi(token));
    return steps;
}

std::ostream* progress_stream(const Args& a) { return a.quiet ? nullptr : &std::cerr; }

// ---------------------------------------------------------------------------

int cmd_synth(const Args& a) {
    synth::SynthProfile profile =
        a.desk ? synth::SynthProfile::desk_profile(a.seed, a.num_classes) : synth::SynthProfile{};
    if (!a.desk) {
        profile.num_classes = a.num_classes;
        profile.seed = a.seed;
        profile.carriers = a.carriers;
        profile.time_slots = a.time_slots;
    }
    if (a.noise >= 0.0) profile.noise_std = a.noise;

    const synth::SynthResult result = synth_dataset(profile, a.samples);
    csi::write_container(a.out, result.data);
    if (!a.ground_truth.empty()) csi::write_container(a.ground_truth, result.ground_truth);
    std::cout << "wrote " << result.data.images.size() << " samples ("
              << profile.num_classes << " classes, " << profile.carriers << "x"
              << profile.time_slots << ") to " << a.out << "\n";
    return 0;
}

int cmd_preprocess(const Args& a) {
    if (a.normalize) {
        csi::Dataset d = csi::read_container(a.data);
        require<ConfigError>(!d.manifest.normalization.has_value(),
                             "preprocess: container is already normalized");
        csi::NormStats stats;
        if (!a.stats_from.empty()) {
            const auto mj = harness::read_json_file(csi::manifest_path_for(a.stats_from));
            const csi::ContainerManifest m = csi::manifest_from_json(mj);
            require<ConfigError>(m.normalization.has_value(),
                                 "preprocess: --stats-from container has no statistics");
            stats = *m.normalization;
        } else {
            stats = csi::compute_norm_stats(d.images);
        }
        for (auto& image : d.images) image = csi::normalize(image, stats);
        d.manifest.normalization = stats;
        csi::write_container(a.out, d);
        std::cout << "normalized " << d.images.size() << " samples to " << a.out << "\n";
        return 0;
    }

    require<ConfigError>(!a.csv.empty(), "preprocess: provide --csv files or --normalize");
    require<ConfigError>(a.csv.size() == a.labels.size(),
                         "preprocess: need one --label per --csv file");
    const csi::CarrierMask mask = a.carriers == 256 ? csi::CarrierMask::default_80mhz()
                                                    : csi::CarrierMask::all_usable(a.carriers);
    csi::Dataset d;
    d.manifest.carrier_mask = mask;
    d.manifest.provenance = csi::Provenance::Real;
    int max_label = 0;
    for (std::size_t i = 0; i < a.csv.size(); ++i) {
        csi::CsvFrameSource source(a.csv[i]);
        const int stride = a.stride > 0 ? a.stride : a.frames;
        auto images = csi::windowed_images(source, a.frames, stride, {a.antenna_a, a.antenna_b},
                                           mask, a.labels[i]);
        max_label = std::max(max_label, a.labels[i]);
        std::cout << a.csv[i] << ": " << images.size() << " images\n";
        for (auto& image : images) d.images.push_back(std::move(image));
    }
    d.num_classes = std::max(a.num_classes, max_label + 1);
    require<InvalidInputError>(!d.images.empty(), "preprocess: no full windows in the input");
    csi::write_container(a.out, d);
    std::cout << "wrote " << d.images.size() << " samples to " << a.out << "\n";
    return 0;
}

int cmd_train_diffusion(const Args& a) {
    diffusion::DiffusionConfig cfg =
        diffusion::diffusion_config_from_json(load_config_json(a.config));
    if (a.seed != 0) cfg.seed = a.seed;
    if (a.steps > 0) cfg.max_steps = a.steps;
    if (a.batch > 0) cfg.batch_size = a.batch;

    const csi::Dataset d = csi::read_container(a.data);
    require<ConfigError>(d.manifest.normalization.has_value(),
                         "train-diffusion: container must be normalized (csiaug preprocess "
                         "--normalize)");
    cfg.num_classes = d.num_classes;
    auto [images, labels] = harness::stack_images(d.images);
    cfg.channels = images.dim(1);
    cfg.height = images.dim(2);
    cfg.width = images.dim(3);

    fs::create_directories(a.out);
    diffusion::DiffusionTrainOptions opts;
    opts.progress = progress_stream(a);
    opts.checkpoint_path = fs::path(a.out) / "diffusion.ckpt.csit";
    opts.checkpoint_every = a.checkpoint_every;
    if (!a.resume.empty()) opts.resume_from = a.resume;

    const auto result = diffusion::train_diffusion(cfg, images, labels, opts);
    harness::write_losses_csv(fs::path(a.out) / "diffusion_losses.csv", result.loss_curve);
    harness::write_json_file(fs::path(a.out) / "diffusion_config.json",
                             diffusion::diffusion_config_to_json(cfg));
    std::cout << "trained " << result.final_step << " steps; checkpoint at "
              << opts.checkpoint_path.string() << "\n";
    return 0;
}

int cmd_sample(const Args& a) {
    const nn::Checkpoint ck = nn::read_checkpoint(a.checkpoint);
    require<IoError>(ck.meta.value("kind", "") == "diffusion",
                     "sample: not a diffusion checkpoint: " + a.checkpoint);
    const diffusion::DiffusionConfig cfg =
        diffusion::diffusion_config_from_json(ck.meta.at("config"));

    Rng init_rng(0);
    diffusion::UNet<float> model(cfg.unet(), init_rng);
    nn::AdamW<float> opt;
    Rng ck_rng(0);
    diffusion::load_diffusion_checkpoint(a.checkpoint, cfg, model, opt, ck_rng);

    std::vector<int> classes = a.classes_to_sample;
    if (classes.empty())
        for (int cls = 0; cls < cfg.num_classes; ++cls) classes.push_back(cls);

    diffusion::GenerateOptions gopts;
    gopts.snapshot_steps = parse_step_list(a.snapshots);

    const diffusion::NoiseSchedule sched = cfg.schedule();
    Rng rng(a.seed);
    csi::Dataset out;
    out.num_classes = cfg.num_classes;
    out.manifest.carrier_mask = csi::CarrierMask::all_usable(cfg.height);
    out.manifest.provenance = csi::Provenance::Generated;

    // Snapshot batches accumulate across classes at matching steps.
    std::map<int, std::vector<TensorF>> snapshots_by_step;
    for (const int cls : classes) {
        require<ConfigError>(cls >= 0 && cls < cfg.num_classes, "sample: class out of range");
        auto gen = diffusion::generate<float>(model, cls, a.count, sched, rng, cfg.channels,
                                              cfg.height, cfg.width, gopts);
        const std::size_t per = static_cast<std::size_t>(cfg.channels) * cfg.height * cfg.width;
        for (int j = 0; j < a.count; ++j) {
            csi::CsiImage image;
            image.label = cls;
            image.provenance = csi::Provenance::Generated;
            image.carrier_mask = out.manifest.carrier_mask;
            image.channels = TensorF({cfg.channels, cfg.height, cfg.width});
            std::copy_n(gen.samples.data() + static_cast<std::size_t>(j) * per, per,
                        image.channels.data());
            out.images.push_back(std::move(image));
        }
        for (auto& [step, state] : gen.snapshots)
            snapshots_by_step[step].push_back(std::move(state));
        if (!a.quiet) std::cerr << "[sample] class " << cls << ": " << a.count << " images\n";
    }

    fs::create_directories(a.out);
    csi::write_container(fs::path(a.out) / "samples.csit", out);

    nlohmann::json manifest{{"kind", "sample_run"},
                            {"checkpoint", a.checkpoint},
                            {"seed", a.seed},
                            {"count_per_class", a.count},
                            {"snapshots", nlohmann::json::array()}};
    for (const auto& [step, states] : snapshots_by_step) {
        csi::Dataset snap;
        snap.num_classes = cfg.num_classes;
        snap.manifest.carrier_mask = out.manifest.carrier_mask;
        snap.manifest.provenance = csi::Provenance::Generated;
        int cls_i = 0;
        for (const auto& state : states) {
            const std::size_t per = static_cast<std::size_t>(cfg.channels) * cfg.height * cfg.width;
            for (int j = 0; j < state.dim(0); ++j) {
                csi::CsiImage image;
                image.label = classes[static_cast<std::size_t>(cls_i) % classes.size()];
                image.provenance = csi::Provenance::Generated;
                image.carrier_mask = snap.manifest.carrier_mask;
                image.channels = TensorF({cfg.channels, cfg.height, cfg.width});
                std::copy_n(state.data() + static_cast<std::size_t>(j) * per, per,
                            image.channels.data());
                // Raw reverse-process states are unbounded; clamp for storage.
                for (std::size_t v = 0; v < image.channels.numel(); ++v)
                    image.channels[v] = std::clamp(image.channels[v], -4.0f, 4.0f);
                snap.images.push_back(std::move(image));
            }
            ++cls_i;
        }
        const std::string name = "snapshot_" + std::to_string(step) + ".csit";
        csi::write_container(fs::path(a.out) / name, snap);
        manifest["snapshots"].push_back({{"step", step}, {"path", name}});
    }
    harness::write_json_file(fs::path(a.out) / "sample_manifest.json", manifest);
    std::cout << "wrote " << out.images.size() << " samples to " << a.out << "\n";
    return 0;
}

int cmd_train_classifier(const Args& a) {
    vit::ViTConfig cfg = vit::vit_config_from_json(load_config_json(a.config));
    if (a.seed != 0) cfg.seed = a.seed;
    if (a.epochs > 0) cfg.epochs = a.epochs;
    if (a.batch > 0) cfg.batch_size = a.batch;

    const csi::Dataset d = csi::read_container(a.data);
    require<ConfigError>(d.manifest.normalization.has_value(),
                         "train-classifier: container must be normalized (csiaug preprocess "
                         "--normalize)");
    cfg.num_classes = d.num_classes;
    auto [images, labels] = harness::stack_images(d.images);
    cfg.channels = images.dim(1);
    cfg.carriers = images.dim(2);
    cfg.time_slots = images.dim(3);

    fs::create_directories(a.out);
    vit::ClassifierTrainOptions opts;
    opts.progress = progress_stream(a);
    opts.checkpoint_path = fs::path(a.out) / "classifier.ckpt.csit";
    opts.checkpoint_every = a.checkpoint_every;
    if (!a.resume.empty()) opts.resume_from = a.resume;

    auto result = vit::train_classifier(cfg, images, labels, opts);
    harness::write_losses_csv(fs::path(a.out) / "losses.csv", result.loss_curve);
    harness::write_json_file(fs::path(a.out) / "classifier_config.json",
                             vit::vit_config_to_json(cfg));

    const auto metrics = vit::evaluate(result.model, images, labels);
    std::cout << "trained " << result.final_epoch << " epochs; training accuracy "
              << metrics.overall_accuracy << "; checkpoint at "
              << opts.checkpoint_path.string() << "\n";
    return 0;
}

int cmd_evaluate(const Args& a) {
    const nn::Checkpoint ck = nn::read_checkpoint(a.checkpoint);
    require<IoError>(ck.meta.value("kind", "") == "classifier",
                     "evaluate: not a classifier checkpoint: " + a.checkpoint);
    const vit::ViTConfig cfg = vit::vit_config_from_json(ck.meta.at("config"));

    Rng init_rng(0);
    vit::SimpleViTFi<float> model(cfg, init_rng);
    nn::AdamW<float> opt;
    Rng ck_rng(0);
    int step = 0;
    vit::load_classifier_checkpoint(a.checkpoint, cfg, model, opt, ck_rng, step);

    const csi::Dataset d = csi::read_container(a.data);
    auto [images, labels] = harness::stack_images(d.images);
    const auto metrics = vit::evaluate(model, images, labels);

    std::cout << "overall accuracy " << metrics.overall_accuracy << " on " << metrics.total
              << " samples\n";
    for (std::size_t cls = 0; cls < metrics.per_class_accuracy.size(); ++cls)
        std::cout << "  class " << cls << ": " << metrics.per_class_accuracy[cls] << "\n";
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        harness::write_json_file(fs::path(a.out) / "metrics.json",
                                 vit::metrics_to_json(metrics));
        io::write_png(fs::path(a.out) / "confusion.png",
                      harness::render_confusion(metrics, "EVAL"));
        std::cout << "wrote metrics.json and confusion.png to " << a.out << "\n";
    }
    return 0;
}

int cmd_run(const Args& a) {
    harness::ExperimentPlan plan = harness::plan_from_json(harness::read_json_file(a.plan));
    if (!a.scenario.empty()) plan.scenario = harness::scenario_from_name(a.scenario);
    if (!a.data.empty()) plan.dataset_path = a.data;

    const auto result = harness::run_scenario(plan, a.out, progress_stream(a));
    std::cout << harness::scenario_name(plan.scenario) << ": overall accuracy "
              << result.metrics.overall_accuracy;
    if (!plan.minority_classes.empty())
        std::cout << ", minority mean "
                  << harness::minority_mean_accuracy(result.metrics, plan.minority_classes);
    std::cout << " (" << result.metrics.total << " test samples)\n"
              << "manifest: " << (fs::path(a.out) / "manifest.json").string() << "\n";
    return 0;
}

int cmd_report(const Args& a) {
    std::vector<fs::path> manifests(a.manifests.begin(), a.manifests.end());
    harness::report(manifests, a.out);
    std::cout << "report written to " << a.out << "\n";
    return 0;
}

int cmd_summary(const Args& a) {
    vit::ViTConfig cfg = vit::vit_config_from_json(load_config_json(a.config));
    if (a.config.empty()) cfg.num_classes = a.num_classes;
    Rng rng(0);
    vit::SimpleViTFi<float> model(cfg, rng);
    std::cout << model.summary();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSI dataset tooling: synthesis, preprocessing, generative augmentation, "
                 "classification, and scenario evaluation"};
    app.require_subcommand(1);
    Args a;

    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset container");
    synth->add_option("--out", a.out, "Output container path (.csit)")->required();
    synth->add_option("--classes", a.num_classes, "Number of classes");
    synth->add_option("--samples", a.samples, "Samples per class");
    synth->add_option("--seed", a.seed, "Generator seed");
    synth->add_option("--carriers", a.carriers, "Carrier rows K");
    synth->add_option("--time-slots", a.time_slots, "Time slots T");
    synth->add_option("--noise", a.noise, "Additive complex-noise std (per component)");
    synth->add_flag("--desk", a.desk, "32x32 two-antenna benchmark preset");
    synth->add_option("--ground-truth", a.ground_truth,
                      "Also write the clean-phase ground-truth container here");

    auto* pre = app.add_subcommand(
        "preprocess", "Build an image container from CSV frame dumps, or normalize a container");
    pre->add_option("--csv", a.csv, "CSV frame dump (timestamp_s,antenna,subcarrier_k,real,imag)");
    pre->add_option("--label", a.labels, "Class label for the corresponding --csv file");
    pre->add_option("--in", a.data, "Input container (with --normalize)");
    pre->add_option("--out", a.out, "Output container path")->required();
    pre->add_flag("--normalize", a.normalize, "Normalize an existing container to [-1, 1]");
    pre->add_option("--stats-from", a.stats_from,
                    "Take normalization statistics from this container's manifest");
    pre->add_option("--frames", a.frames, "Frames per image window");
    pre->add_option("--stride", a.stride, "Window stride (default: frames, non-overlapping)");
    pre->add_option("--carriers", a.carriers, "FFT bins per frame (256 uses the 80 MHz mask)");
    pre->add_option("--classes", a.num_classes, "Total class count of the output container");
    pre->add_option("--antenna-a", a.antenna_a, "First antenna of the stored pair");
    pre->add_option("--antenna-b", a.antenna_b, "Second antenna of the stored pair");

    auto* tdiff = app.add_subcommand("train-diffusion",
                                     "Train the class-conditional sampler on a container");
    tdiff->add_option("--data", a.data, "Normalized training container")->required();
    tdiff->add_option("--out", a.out, "Output directory")->required();
    tdiff->add_option("--config", a.config, "Sampler config JSON (defaults filled in)");
    tdiff->add_option("--seed", a.seed, "Training seed (overrides config)");
    tdiff->add_option("--steps", a.steps, "Optimizer steps (overrides config)");
    tdiff->add_option("--batch", a.batch, "Batch size (overrides config)");
    tdiff->add_option("--resume", a.resume, "Resume from this checkpoint");
    tdiff->add_option("--checkpoint-every", a.checkpoint_every, "Steps between checkpoints");
    tdiff->add_flag("--quiet", a.quiet, "No progress lines");

    auto* sample = app.add_subcommand("sample",
                                      "Draw class-conditional samples from a trained sampler");
    sample->add_option("--checkpoint", a.checkpoint, "Diffusion checkpoint")->required();
    sample->add_option("--out", a.out, "Output directory")->required();
    sample->add_option("--count", a.count, "Samples per class");
    sample->add_option("--class", a.classes_to_sample, "Class id (repeatable; default: all)");
    sample->add_option("--seed", a.seed, "Sampling seed");
    sample->add_option("--snapshots", a.snapshots,
                       "Comma-separated reverse-process steps to record (e.g. 200,100,50,0)");
    sample->add_flag("--quiet", a.quiet, "No progress lines");

    auto* tcls = app.add_subcommand("train-classifier", "Train the classifier on a container");
    tcls->add_option("--data", a.data, "Normalized training container")->required();
    tcls->add_option("--out", a.out, "Output directory")->required();
    tcls->add_option("--config", a.config, "Classifier config JSON (defaults filled in)");
    tcls->add_option("--seed", a.seed, "Training seed (overrides config)");
    tcls->add_option("--epochs", a.epochs, "Training epochs (overrides config)");
    tcls->add_option("--batch", a.batch, "Batch size (overrides config)");
    tcls->add_option("--resume", a.resume, "Resume from this checkpoint");
    tcls->add_option("--checkpoint-every", a.checkpoint_every, "Epochs between checkpoints");
    tcls->add_flag("--quiet", a.quiet, "No progress lines");

    auto* eval = app.add_subcommand("evaluate", "Evaluate a classifier checkpoint on a container");
    eval->add_option("--checkpoint", a.checkpoint, "Classifier checkpoint")->required();
    eval->add_option("--data", a.data, "Evaluation container")->required();
    eval->add_option("--out", a.out, "Optional output directory for metrics.json/confusion.png");

    auto* run = app.add_subcommand("run", "Execute one experiment scenario from a plan file");
    run->add_option("--plan", a.plan, "Experiment plan JSON")->required();
    run->add_option("--out", a.out, "Output directory")->required();
    run->add_option("--scenario", a.scenario, "Override: balanced | imbalanced | augmented");
    run->add_option("--data", a.data, "Override the plan's dataset path");
    run->add_flag("--quiet", a.quiet, "No progress lines");

    auto* rep = app.add_subcommand("report", "Aggregate run manifests into a comparison report");
    rep->add_option("--out", a.out, "Output directory")->required();
    rep->add_option("manifests", a.manifests, "manifest.json / sample_manifest.json paths")
        ->required();

    auto* summary = app.add_subcommand("summary", "Print the classifier architecture summary");
    summary->add_option("--config", a.config, "Classifier config JSON");
    summary->add_option("--classes", a.num_classes, "Class count for the default config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(a);
        if (pre->parsed()) return cmd_preprocess(a);
        if (tdiff->parsed()) return cmd_train_diffusion(a);
        if (sample->parsed()) return cmd_sample(a);
        if (tcls->parsed()) return cmd_train_classifier(a);
        if (eval->parsed()) return cmd_evaluate(a);
        if (run->parsed()) return cmd_run(a);
        if (rep->parsed()) return cmd_report(a);
        if (summary->parsed()) return cmd_summary(a);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
