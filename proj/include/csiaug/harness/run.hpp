// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "csiaug/csi/container.hpp"
#include "csiaug/csi/image.hpp"
#include "csiaug/harness/plan.hpp"
#include "csiaug/harness/render.hpp"
#include "csiaug/harness/split.hpp"
#include "csiaug/io/sha256.hpp"
#include "csiaug/vit/classifier.hpp"

namespace csiaug::harness {

inline constexpr const char* kLockFileName = ".csiaug.lock";

// Exclusive per-directory lock: concurrent runs must use distinct output
// directories. Created O_EXCL, removed on destruction; a leftover file from
// a crashed run must be deleted by hand (the error says so).
class DirectoryLock {
  public:
    explicit DirectoryLock(const std::filesystem::path& dir) : path_(dir / kLockFileName) {
        std::filesystem::create_directories(dir);
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        require<IoError>(fd >= 0, "output directory is locked by another run: " + path_.string() +
                                      " (delete the lock file if that run is dead)");
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
        ::close(fd);
        held_ = true;
    }

    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

    ~DirectoryLock() {
        if (held_) ::unlink(path_.c_str());
    }

  private:
    std::filesystem::path path_;
    bool held_ = false;
};

inline std::string device_string() {
    const char* device = std::getenv("CSIAUG_DEVICE");
    return device != nullptr && *device != '\0' ? device : "cpu";
}

// Re-throws any pipeline error with the failing stage in front, keeping the
// original exception type for the common ones.
template <typename Fn>
inline auto run_stage(const std::string& stage, Fn&& fn) {
    auto relabel = [&](const auto& error) {
        using E = std::decay_t<decltype(error)>;
        return E("[" + stage + "] " + error.what());
    };
    try {
        return fn();
    } catch (const InvalidInputError& e) {
        throw relabel(e);
    } catch (const ShapeError& e) {
        throw relabel(e);
    } catch (const OrderingError& e) {
        throw relabel(e);
    } catch (const ConfigError& e) {
        throw relabel(e);
    } catch (const IoError& e) {
        throw relabel(e);
    } catch (const GenerationError& e) {
        throw relabel(e);
    } catch (const Error& e) {
        throw Error("[" + stage + "] " + e.what());
    }
}

// Everything a finished scenario leaves behind, echoed into manifest.json.
// Written after all referenced artifacts exist; `timings` is the only part
// expected to differ between identical runs.
struct RunManifest {
    std::string scenario;
    nlohmann::json plan = nlohmann::json::object();
    std::string plan_sha256;
    std::string dataset_sha256;
    std::string device;
    std::string tool_version = kToolVersion;
    std::map<std::string, std::string> artifacts;  // name -> path relative to the manifest
    std::vector<int> test_indices;
    std::vector<int> train_source_indices;  // -1 marks generated samples
    std::map<std::string, int> provenance_counts;
    nlohmann::json timings = nlohmann::json::object();
};

inline nlohmann::json run_manifest_to_json(const RunManifest& m) {
    return nlohmann::json{{"kind", "scenario_run"},
                          {"scenario", m.scenario},
                          {"plan", m.plan},
                          {"plan_sha256", m.plan_sha256},
                          {"dataset_sha256", m.dataset_sha256},
                          {"device", m.device},
                          {"tool_version", m.tool_version},
                          {"artifacts", m.artifacts},
                          {"test_indices", m.test_indices},
                          {"train_source_indices", m.train_source_indices},
                          {"provenance_counts", m.provenance_counts},
                          {"timings", m.timings}};
}

inline RunManifest run_manifest_from_json(const nlohmann::json& j) {
    require<ConfigError>(j.value("kind", "") == "scenario_run",
                         "run manifest: wrong kind field");
    RunManifest m;
    m.scenario = j.at("scenario").get<std::string>();
    m.plan = j.at("plan");
    m.plan_sha256 = j.value("plan_sha256", "");
    m.dataset_sha256 = j.value("dataset_sha256", "");
    m.device = j.value("device", "");
    m.tool_version = j.value("tool_version", "");
    m.artifacts = j.value("artifacts", m.artifacts);
    m.test_indices = j.value("test_indices", m.test_indices);
    m.train_source_indices = j.value("train_source_indices", m.train_source_indices);
    m.provenance_counts = j.value("provenance_counts", m.provenance_counts);
    m.timings = j.value("timings", nlohmann::json::object());
    return m;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream os(path);
    require<IoError>(os.good(), "cannot open " + path.string());
    os << j.dump(2) << '\n';
    require<IoError>(os.good(), "write failed for " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    require<IoError>(is.good(), "cannot open " + path.string());
    nlohmann::json j;
    is >> j;
    return j;
}

inline void write_losses_csv(const std::filesystem::path& path,
                             const std::vector<std::pair<int, double>>& curve) {
    std::ofstream os(path);
    require<IoError>(os.good(), "cannot open " + path.string());
    os << "step,loss\n";
    for (const auto& [step, loss] : curve) os << step << ',' << loss << '\n';
    require<IoError>(os.good(), "write failed for " + path.string());
}

struct RunScenarioResult {
    RunManifest manifest;
    vit::ClassifierMetrics metrics;
};

// The full scenario pipeline: read, split, normalize with statistics from
// the balanced training split (so all scenarios share one byte-identical
// test set), starve minorities, optionally train the sampler and replenish,
// train the classifier, evaluate, and write every artifact plus the
// manifest. The manifest goes last so its path list is true at write time.
inline RunScenarioResult run_scenario(const ExperimentPlan& plan,
                                      const std::filesystem::path& out_dir,
                                      std::ostream* progress = nullptr) {
    namespace fs = std::filesystem;
    plan.validate();
    DirectoryLock lock(out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    auto seconds_since = [](std::chrono::steady_clock::time_point from) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
    };

    RunManifest manifest;
    manifest.scenario = scenario_name(plan.scenario);
    manifest.plan = plan_to_json(plan);
    manifest.plan_sha256 = io::sha256_hex(manifest.plan.dump());
    manifest.device = device_string();

    // -- load ---------------------------------------------------------------
    csi::Dataset dataset = run_stage("load", [&] {
        csi::Dataset d = csi::read_container(plan.dataset_path);
        require<InvalidInputError>(!d.images.empty(), "dataset container holds no samples");
        require<ConfigError>(!d.manifest.normalization.has_value(),
                             "dataset is already normalized; run on the raw sanitized container "
                             "so training-split statistics can be applied");
        require<ConfigError>(d.num_classes == plan.num_classes,
                             "dataset has " + std::to_string(d.num_classes) +
                                 " classes, plan expects " + std::to_string(plan.num_classes));
        const auto& shape = d.images.front().channels;
        require<ConfigError>(shape.dim(1) == plan.classifier.carriers &&
                                 shape.dim(2) == plan.classifier.time_slots,
                             "dataset image shape does not match the configured models");
        return d;
    });
    manifest.dataset_sha256 = io::sha256_file_hex(plan.dataset_path);

    // -- split + normalize ---------------------------------------------------
    const Split split = run_stage("split", [&] { return split_dataset(dataset, plan); });
    manifest.test_indices = split.test;

    const csi::NormStats stats = run_stage("normalize", [&] {
        TrainingSet balanced = materialize(dataset, split.train);
        return csi::compute_norm_stats(balanced.images);
    });
    TrainingSet test_set = materialize(dataset, split.test);
    for (auto& image : test_set.images) image = csi::normalize(image, stats);

    std::vector<int> train_indices = split.train;
    if (plan.scenario != Scenario::Balanced)
        train_indices = run_stage("imbalance",
                                  [&] { return apply_imbalance(split.train, dataset, plan); });
    TrainingSet train_set = materialize(dataset, train_indices);
    for (auto& image : train_set.images) image = csi::normalize(image, stats);

    run_stage("leak-check", [&] {
        assert_no_leak(train_set.source_indices, split.test);
        return 0;
    });

    // -- optional generative replenishment ------------------------------------
    if (plan.scenario == Scenario::Augmented) {
        const auto t_diff = std::chrono::steady_clock::now();
        diffusion::DiffusionConfig dcfg = plan.diffusion;
        dcfg.seed = mix_seed(plan.train_seed, 1);
        const auto budget = augmentation_budget(train_set, plan);

        run_stage("train-diffusion", [&] {
            auto [x0, labels] = stack_images(train_set.images);
            diffusion::DiffusionTrainOptions dopts;
            dopts.progress = progress;
            dopts.checkpoint_path = out_dir / "diffusion.ckpt.csit";
            auto dres = diffusion::train_diffusion(dcfg, x0, labels, dopts);
            write_losses_csv(out_dir / "diffusion_losses.csv", dres.loss_curve);

            const diffusion::NoiseSchedule sched = dcfg.schedule();
            Rng gen_rng(plan.gen_seed);
            augment(train_set, dres.model, sched, plan, gen_rng);
            return 0;
        });

        run_stage("augment-audit", [&] {
            // Counting identity: every starved class is back at its target.
            for (const auto& [cls, need] : budget) {
                int real = 0, generated = 0;
                for (const auto& image : train_set.images) {
                    if (image.label != cls) continue;
                    (image.provenance == csi::Provenance::Generated ? generated : real) += 1;
                }
                require<OrderingError>(generated == need,
                                       "class " + std::to_string(cls) + " generated " +
                                           std::to_string(generated) + ", budget was " +
                                           std::to_string(need));
            }
            return 0;
        });
        manifest.artifacts["diffusion_checkpoint"] = "diffusion.ckpt.csit";
        manifest.artifacts["diffusion_losses"] = "diffusion_losses.csv";
        manifest.timings["train_diffusion_s"] = seconds_since(t_diff);
    }

    // -- classifier -----------------------------------------------------------
    const auto t_cls = std::chrono::steady_clock::now();
    vit::ViTConfig ccfg = plan.classifier;
    ccfg.seed = mix_seed(plan.train_seed, 2);
    const vit::TrainClassifierResult<float> trained = run_stage("train-classifier", [&] {
        auto [images, labels] = stack_images(train_set.images);
        vit::ClassifierTrainOptions copts;
        copts.progress = progress;
        copts.checkpoint_path = out_dir / "classifier.ckpt.csit";
        return vit::train_classifier(ccfg, images, labels, copts);
    });
    write_losses_csv(out_dir / "losses.csv", trained.loss_curve);
    manifest.timings["train_classifier_s"] = seconds_since(t_cls);

    // -- evaluate ---------------------------------------------------------------
    RunScenarioResult result;
    result.metrics = run_stage("evaluate", [&] {
        auto [images, labels] = stack_images(test_set.images);
        auto model = trained.model;
        return vit::evaluate(model, images, labels);
    });
    write_json_file(out_dir / "metrics.json", vit::metrics_to_json(result.metrics));
    io::write_png(out_dir / "confusion.png",
                  render_confusion(result.metrics, scenario_name(plan.scenario)));

    // -- containers -------------------------------------------------------------
    run_stage("write-containers", [&] {
        csi::Dataset train_out;
        train_out.num_classes = plan.num_classes;
        train_out.images = train_set.images;
        train_out.manifest.carrier_mask = dataset.manifest.carrier_mask;
        train_out.manifest.normalization = stats;
        train_out.manifest.provenance = dataset.manifest.provenance;
        train_out.manifest.extra = {{"scenario", scenario_name(plan.scenario)},
                                    {"role", "train"}};
        csi::write_container(out_dir / "train.csit", train_out);

        csi::Dataset test_out = train_out;
        test_out.images = test_set.images;
        test_out.manifest.extra["role"] = "test";
        csi::write_container(out_dir / "test.csit", test_out);
        return 0;
    });

    manifest.artifacts["train_container"] = "train.csit";
    manifest.artifacts["test_container"] = "test.csit";
    manifest.artifacts["classifier_checkpoint"] = "classifier.ckpt.csit";
    manifest.artifacts["losses"] = "losses.csv";
    manifest.artifacts["metrics"] = "metrics.json";
    manifest.artifacts["confusion"] = "confusion.png";
    manifest.train_source_indices = train_set.source_indices;
    for (const auto& image : train_set.images)
        manifest.provenance_counts[csi::provenance_name(image.provenance)] += 1;
    manifest.timings["total_s"] = seconds_since(t0);

    for (const auto& [name, rel] : manifest.artifacts)
        require<IoError>(fs::exists(out_dir / rel),
                         "manifest artifact missing on disk: " + rel);
    write_json_file(out_dir / "manifest.json", run_manifest_to_json(manifest));
    result.manifest = manifest;
    return result;
}

// -- cross-run report ---------------------------------------------------------

struct ReportColumn {
    std::string scenario;
    vit::ClassifierMetrics metrics;
    std::vector<int> minority_classes;
};

inline double minority_mean_accuracy(const vit::ClassifierMetrics& metrics,
                                     const std::vector<int>& minority) {
    if (minority.empty()) return 0.0;
    double acc = 0.0;
    for (const int cls : minority)
        acc += metrics.per_class_accuracy[static_cast<std::size_t>(cls)];
    return acc / static_cast<double>(minority.size());
}

// Side-by-side per-class accuracy comparison across scenario runs: CSV plus
// a plain-text table (minority rows flagged, deltas vs the first column),
// and a denoising image grid when a sampling manifest is present.
inline void report(const std::vector<std::filesystem::path>& manifest_paths,
                   const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    require<ConfigError>(!manifest_paths.empty(), "report: need at least one manifest");
    fs::create_directories(out_dir);

    std::vector<ReportColumn> columns;
    std::vector<std::pair<int, TensorF>> snapshots;
    for (const auto& path : manifest_paths) {
        const nlohmann::json j = run_stage("report-load", [&] { return read_json_file(path); });
        const std::string kind = j.value("kind", "");
        if (kind == "sample_run") {
            for (const auto& snap : j.value("snapshots", nlohmann::json::array())) {
                const fs::path container =
                    path.parent_path() / snap.at("path").get<std::string>();
                const csi::Dataset d = run_stage("report-load", [&] {
                    return csi::read_container(container);
                });
                auto [images, labels] = stack_images(d.images);
                snapshots.emplace_back(snap.at("step").get<int>(), std::move(images));
            }
            continue;
        }
        const RunManifest m = run_manifest_from_json(j);
        const auto metrics_it = m.artifacts.find("metrics");
        require<IoError>(metrics_it != m.artifacts.end(),
                         "report: manifest lists no metrics file: " + path.string());
        const fs::path metrics_path = path.parent_path() / metrics_it->second;
        require<IoError>(fs::exists(metrics_path),
                         "report: metrics file missing: " + metrics_path.string());
        ReportColumn column;
        column.scenario = m.scenario;
        column.metrics = vit::metrics_from_json(read_json_file(metrics_path));
        column.minority_classes =
            m.plan.value("minority_classes", std::vector<int>{});
        columns.push_back(std::move(column));
    }

    if (!snapshots.empty())
        io::write_png(out_dir / "denoising_grid.png", render_denoising_grid(snapshots));
    if (columns.empty()) return;

    const int k = static_cast<int>(columns.front().metrics.confusion.size());
    std::vector<int> minority_union;
    for (const auto& column : columns)
        for (const int cls : column.minority_classes)
            if (!std::binary_search(minority_union.begin(), minority_union.end(), cls)) {
                minority_union.push_back(cls);
                std::sort(minority_union.begin(), minority_union.end());
            }

    // CSV: class, minority flag, one accuracy column per run, then deltas
    // against the first run for every later run.
    {
        std::ofstream os(out_dir / "report.csv");
        require<IoError>(os.good(), "report: cannot open report.csv");
        os << "class,minority";
        for (const auto& column : columns) os << ',' << column.scenario << "_accuracy";
        for (std::size_t i = 1; i < columns.size(); ++i)
            os << ',' << columns[i].scenario << "_delta";
        os << '\n';
        for (int cls = 0; cls < k; ++cls) {
            const bool minority =
                std::binary_search(minority_union.begin(), minority_union.end(), cls);
            os << cls << ',' << (minority ? 1 : 0);
            for (const auto& column : columns)
                os << ',' << column.metrics.per_class_accuracy[static_cast<std::size_t>(cls)];
            for (std::size_t i = 1; i < columns.size(); ++i)
                os << ','
                   << columns[i].metrics.per_class_accuracy[static_cast<std::size_t>(cls)] -
                          columns[0].metrics.per_class_accuracy[static_cast<std::size_t>(cls)];
            os << '\n';
        }
        os << "overall,";
        for (const auto& column : columns) os << ',' << column.metrics.overall_accuracy;
        for (std::size_t i = 1; i < columns.size(); ++i)
            os << ','
               << columns[i].metrics.overall_accuracy - columns[0].metrics.overall_accuracy;
        os << '\n';
        require<IoError>(os.good(), "report: write failed for report.csv");
    }

    // Plain-text twin of the CSV plus each run's confusion matrix.
    {
        std::ofstream os(out_dir / "report.txt");
        require<IoError>(os.good(), "report: cannot open report.txt");
        os << "per-class accuracy\n";
        for (int cls = 0; cls < k; ++cls) {
            const bool minority =
                std::binary_search(minority_union.begin(), minority_union.end(), cls);
            os << "  class " << cls << (minority ? " [minority]" : "           ");
            for (const auto& column : columns) {
                os << "  " << column.scenario << " "
                   << column.metrics.per_class_accuracy[static_cast<std::size_t>(cls)];
            }
            if (columns.size() > 1)
                os << "  delta "
                   << columns.back().metrics.per_class_accuracy[static_cast<std::size_t>(cls)] -
                          columns[0].metrics.per_class_accuracy[static_cast<std::size_t>(cls)];
            os << '\n';
        }
        os << "overall";
        for (const auto& column : columns)
            os << "  " << column.scenario << " " << column.metrics.overall_accuracy;
        os << '\n';
        if (!minority_union.empty()) {
            os << "minority mean";
            for (const auto& column : columns)
                os << "  " << column.scenario << " "
                   << minority_mean_accuracy(column.metrics, minority_union);
            os << '\n';
        }
        for (const auto& column : columns) {
            os << "\nconfusion (" << column.scenario << "), rows = true class\n";
            for (const auto& row : column.metrics.confusion) {
                os << " ";
                for (const int v : row) os << ' ' << v;
                os << '\n';
            }
        }
        require<IoError>(os.good(), "report: write failed for report.txt");
    }
}

}  // namespace csiaug::harness
