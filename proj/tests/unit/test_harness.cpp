// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0
//
// Split arithmetic is checked against hand-counted examples, membership
// invariance against the per-class substream design, augmentation
// bookkeeping against exact counting identities, and the full scenario
// pipeline end-to-end at a miniature scale.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <vector>

#include "catch_amalgamated.hpp"
#include "csiaug/harness/plan.hpp"
#include "csiaug/harness/render.hpp"
#include "csiaug/harness/run.hpp"
#include "csiaug/harness/split.hpp"
#include "csiaug/synth/synthgen.hpp"

using namespace csiaug;
using namespace csiaug::harness;
namespace fs = std::filesystem;

namespace {

// Labeled dataset with recognizable per-sample payloads, mask all-usable.
csi::Dataset toy_dataset(const std::vector<int>& per_class_counts, int k = 8, int t = 4) {
    csi::Dataset d;
    d.num_classes = static_cast<int>(per_class_counts.size());
    d.manifest.carrier_mask = csi::CarrierMask::all_usable(k);
    int serial = 0;
    for (int cls = 0; cls < d.num_classes; ++cls) {
        for (int i = 0; i < per_class_counts[static_cast<std::size_t>(cls)]; ++i) {
            csi::CsiImage image;
            image.label = cls;
            image.carrier_mask = d.manifest.carrier_mask;
            image.channels = TensorF({csi::kImageChannels, k, t});
            for (std::size_t v = 0; v < image.channels.numel(); ++v)
                image.channels[v] = static_cast<float>(serial % 17) * 0.1f - 0.8f;
            ++serial;
            d.images.push_back(std::move(image));
        }
    }
    return d;
}

ExperimentPlan toy_plan(int num_classes) {
    ExperimentPlan plan;
    plan.num_classes = num_classes;
    plan.diffusion = diffusion::DiffusionConfig::desk(num_classes, 0);
    plan.classifier = vit::ViTConfig::desk(num_classes, 0);
    plan.diffusion.height = 8;
    plan.diffusion.width = 4;
    plan.classifier.carriers = 8;
    plan.classifier.time_slots = 4;
    plan.classifier.num_patches = 2;
    plan.classifier.token_dim = 8;
    plan.classifier.heads = 2;
    plan.classifier.mlp_dim = 16;
    plan.classifier.depth = 1;
    return plan;
}

struct ZeroEpsModel {
    TensorF forward(const TensorF& x, const std::vector<int>&, const std::vector<int>&) {
        return TensorF(x.shape());
    }
};

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "csiaug_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("experiment plan validates and round-trips through json") {
    ExperimentPlan plan = ExperimentPlan::desk(6, 42);
    plan.dataset_path = "/data/synth.csit";
    REQUIRE_NOTHROW(plan.validate());
    CHECK(plan.is_minority(1));
    CHECK(plan.is_minority(4));
    CHECK_FALSE(plan.is_minority(0));

    auto j = plan_to_json(plan);
    ExperimentPlan back = plan_from_json(j);
    CHECK(back.dataset_path == plan.dataset_path);
    CHECK(back.minority_classes == plan.minority_classes);
    CHECK(back.split_seed == plan.split_seed);
    CHECK(back.train_seed == plan.train_seed);
    CHECK(back.gen_seed == plan.gen_seed);
    CHECK(back.scenario == plan.scenario);
    CHECK(back.diffusion.timesteps == plan.diffusion.timesteps);
    CHECK(back.classifier.token_dim == plan.classifier.token_dim);

    auto bad = plan;
    bad.train_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = plan;
    bad.minority_keep_fraction = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = plan;
    bad.minority_classes = {2, 9};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = plan;
    bad.minority_classes = {4, 1};  // must be sorted
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = plan;
    bad.classifier.num_classes = 5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    CHECK(scenario_from_name("augmented") == Scenario::Augmented);
    CHECK_THROWS_AS(scenario_from_name("warmup"), ConfigError);
}

TEST_CASE("split keeps the documented per-class ratios") {
    auto plan = toy_plan(3);
    plan.dataset_path = "unused";

    csi::Dataset d100 = toy_dataset({100, 100, 100});
    const Split s100 = split_dataset(d100, plan);
    CHECK(s100.train.size() == 3u * 73u);
    CHECK(s100.test.size() == 3u * 27u);

    csi::Dataset d2 = toy_dataset({2, 2, 2});
    const Split s2 = split_dataset(d2, plan);
    CHECK(s2.train.size() == 3u);
    CHECK(s2.test.size() == 3u);

    // Disjoint and complete.
    std::set<int> all(s100.train.begin(), s100.train.end());
    for (const int idx : s100.test) CHECK(all.insert(idx).second);
    CHECK(all.size() == d100.images.size());

    // Same seed, same membership; different seed, different membership.
    const Split again = split_dataset(d100, plan);
    CHECK(again.train == s100.train);
    CHECK(again.test == s100.test);
    auto other = plan;
    other.split_seed += 1;
    const Split moved = split_dataset(d100, other);
    CHECK(moved.train != s100.train);

    // The scenario field plays no role in membership.
    auto augmented = plan;
    augmented.scenario = Scenario::Augmented;
    augmented.minority_classes = {1};
    const Split same = split_dataset(d100, augmented);
    CHECK(same.test == s100.test);

    csi::Dataset starved = toy_dataset({5, 1, 5});
    CHECK_THROWS_AS(split_dataset(starved, plan), ConfigError);
    csi::Dataset wrong = toy_dataset({5, 5});
    CHECK_THROWS_AS(split_dataset(wrong, plan), ConfigError);
}

TEST_CASE("class membership does not depend on other classes") {
    // Each class shuffles in its own derived stream, so growing class 1
    // must not move class 0's train/test assignment.
    auto plan = toy_plan(2);
    csi::Dataset small = toy_dataset({10, 10});
    csi::Dataset grown = toy_dataset({10, 10});
    for (int extra = 0; extra < 7; ++extra) {
        csi::CsiImage image = grown.images[10];  // clone a class-1 sample
        grown.images.push_back(image);
    }

    const Split a = split_dataset(small, plan);
    const Split b = split_dataset(grown, plan);
    auto class0 = [](const std::vector<int>& ids) {
        std::vector<int> out;
        for (const int idx : ids)
            if (idx < 10) out.push_back(idx);
        return out;
    };
    CHECK(class0(a.train) == class0(b.train));
    CHECK(class0(a.test) == class0(b.test));
}

TEST_CASE("imbalance keeps the documented minority budget") {
    auto plan = toy_plan(2);
    plan.minority_classes = {1};
    csi::Dataset d = toy_dataset({100, 100});
    const Split split = split_dataset(d, plan);  // 73 train per class

    const std::vector<int> reduced = apply_imbalance(split.train, d, plan);
    int kept0 = 0, kept1 = 0;
    for (const int idx : reduced)
        (d.images[static_cast<std::size_t>(idx)].label == 0 ? kept0 : kept1) += 1;
    CHECK(kept0 == 73);
    CHECK(kept1 == 14);  // floor(0.2 * 73)

    // Kept minority samples are the first of the shuffled training list.
    std::vector<int> minority_train, minority_kept;
    for (const int idx : split.train)
        if (d.images[static_cast<std::size_t>(idx)].label == 1) minority_train.push_back(idx);
    for (const int idx : reduced)
        if (d.images[static_cast<std::size_t>(idx)].label == 1) minority_kept.push_back(idx);
    minority_train.resize(14);
    CHECK(minority_kept == minority_train);

    // No minorities or keep-everything leaves the list untouched.
    auto none = plan;
    none.minority_classes = {};
    CHECK(apply_imbalance(split.train, d, none) == split.train);
    auto keep_all = plan;
    keep_all.minority_keep_fraction = 1.0;
    CHECK(apply_imbalance(split.train, d, keep_all) == split.train);
}

TEST_CASE("augmentation budget restores parity by default") {
    auto plan = toy_plan(3);
    plan.minority_classes = {0, 2};
    csi::Dataset d = toy_dataset({4, 9, 6});
    TrainingSet train = materialize(
        d, [&] {
            std::vector<int> ids(d.images.size());
            std::iota(ids.begin(), ids.end(), 0);
            return ids;
        }());

    auto budget = augmentation_budget(train, plan);
    CHECK(budget.at(0) == 5);  // majority has 9
    CHECK(budget.at(2) == 3);

    plan.augmentation_target = 6;
    budget = augmentation_budget(train, plan);
    CHECK(budget.at(0) == 2);
    CHECK(budget.at(2) == 0);  // already at target
}

TEST_CASE("augment merges generated minority samples with exact counts") {
    auto plan = toy_plan(2);
    plan.minority_classes = {1};
    plan.augmentation_target = 7;
    plan.diffusion.timesteps = 5;

    // Mask with two dead rows: generated images must blank them.
    std::vector<bool> usable(8, true);
    usable[0] = usable[5] = false;
    csi::Dataset d = toy_dataset({6, 3});
    d.manifest.carrier_mask = csi::CarrierMask(std::move(usable));
    for (auto& image : d.images) {
        image.carrier_mask = d.manifest.carrier_mask;
        for (int c = 0; c < 4; ++c)
            for (int col = 0; col < 4; ++col) {
                image.channels.at(c, 0, col) = 0.0f;
                image.channels.at(c, 5, col) = 0.0f;
            }
    }

    std::vector<int> ids(d.images.size());
    std::iota(ids.begin(), ids.end(), 0);
    TrainingSet train = materialize(d, ids);

    ZeroEpsModel model;
    const auto sched = diffusion::NoiseSchedule::linear(5, 1e-4, 0.28);
    Rng gen(77);
    augment(train, model, sched, plan, gen);

    CHECK(train.count_for_class(0) == 6);
    CHECK(train.count_for_class(1) == 7);
    int generated = 0;
    for (std::size_t i = 0; i < train.images.size(); ++i) {
        const auto& image = train.images[i];
        if (image.provenance != csi::Provenance::Generated) continue;
        ++generated;
        CHECK(image.label == 1);
        CHECK(train.source_indices[i] == -1);
        CHECK_NOTHROW(image.validate());  // masked rows blanked, values finite
        bool in_range = true;
        for (std::size_t v = 0; v < image.channels.numel(); ++v)
            if (image.channels[v] < -1.0f || image.channels[v] > 1.0f) in_range = false;
        CHECK(in_range);
    }
    CHECK(generated == 4);  // 7 - 3 real

    // Real + generated hits the target exactly.
    int real1 = 0;
    for (const auto& image : train.images)
        if (image.label == 1 && image.provenance != csi::Provenance::Generated) ++real1;
    CHECK(real1 + generated == plan.augmentation_target);
}

TEST_CASE("leak assertion fires on shared ids") {
    CHECK_NOTHROW(assert_no_leak({0, 1, 2, -1}, {3, 4}));
    CHECK_THROWS_AS(assert_no_leak({0, 1, 4}, {3, 4}), OrderingError);
}

TEST_CASE("image stacking preserves order, labels, and payload") {
    csi::Dataset d = toy_dataset({2, 2});
    auto [stacked, labels] = stack_images(d.images);
    REQUIRE(stacked.shape() == std::vector<int>({4, 4, 8, 4}));
    CHECK(labels == std::vector<int>({0, 0, 1, 1}));
    for (int i = 0; i < 4; ++i)
        CHECK(stacked.at(i, 0, 0, 0) == d.images[static_cast<std::size_t>(i)].channels.at(0, 0, 0));

    CHECK_THROWS_AS(stack_images({}), InvalidInputError);
    auto mixed = d.images;
    mixed.push_back(d.images.front());
    mixed.back().channels = TensorF({4, 8, 8});
    CHECK_THROWS_AS(stack_images(mixed), ShapeError);
}

TEST_CASE("directory lock is exclusive and releases on destruction") {
    const fs::path dir = fresh_dir("lock");
    {
        DirectoryLock lock(dir);
        CHECK(fs::exists(dir / kLockFileName));
        CHECK_THROWS_AS(DirectoryLock(dir), IoError);
    }
    CHECK_FALSE(fs::exists(dir / kLockFileName));
    CHECK_NOTHROW(DirectoryLock(dir));
}

TEST_CASE("stage wrapper labels errors but keeps their type") {
    const auto boom = [] {
        throw ConfigError("bad knob");
        return 0;
    };
    try {
        run_stage("tune", boom);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "[tune] bad knob");
    }
    CHECK(run_stage("fine", [] { return 7; }) == 7);
}

TEST_CASE("loss curves serialize to csv") {
    const fs::path dir = fresh_dir("csv");
    write_losses_csv(dir / "losses.csv", {{1, 0.5}, {2, 0.25}});
    std::ifstream is(dir / "losses.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "step,loss");
    std::getline(is, line);
    CHECK(line == "1,0.5");
    std::getline(is, line);
    CHECK(line == "2,0.25");
}

TEST_CASE("run manifest round-trips through json") {
    RunManifest m;
    m.scenario = "augmented";
    m.plan = {{"num_classes", 6}};
    m.plan_sha256 = "abc";
    m.dataset_sha256 = "def";
    m.device = "cpu";
    m.artifacts = {{"metrics", "metrics.json"}};
    m.test_indices = {3, 5, 8};
    m.train_source_indices = {0, 1, -1};
    m.provenance_counts = {{"synthetic", 2}, {"generated", 1}};
    const auto j = run_manifest_to_json(m);
    const RunManifest back = run_manifest_from_json(j);
    CHECK(back.scenario == m.scenario);
    CHECK(back.artifacts == m.artifacts);
    CHECK(back.test_indices == m.test_indices);
    CHECK(back.train_source_indices == m.train_source_indices);
    CHECK(back.provenance_counts == m.provenance_counts);
    CHECK_THROWS_AS(run_manifest_from_json(nlohmann::json{{"kind", "other"}}), ConfigError);
}

TEST_CASE("confusion and denoising renderers produce sane rasters") {
    vit::ClassifierMetrics metrics;
    metrics.confusion = {{5, 1}, {0, 6}};
    metrics.per_class_accuracy = {5.0 / 6.0, 1.0};
    metrics.overall_accuracy = 11.0 / 12.0;
    metrics.total = 12;
    const io::RgbImage image = render_confusion(metrics, "TEST");
    CHECK(image.width > 80);
    CHECK(image.height > 80);

    TensorF noisy({2, 4, 8, 8});
    TensorF clean({2, 4, 8, 8});
    for (std::size_t i = 0; i < clean.numel(); ++i) clean[i] = 0.5f;
    const io::RgbImage grid = render_denoising_grid({{0, clean}, {10, noisy}});
    CHECK(grid.width > 16);
    // Leftmost column is the highest (noisiest) step: step 10 before step 0.
    // Mid-gray 0.5 maps to level 191 in the step-0 column.
    CHECK(grid.pixels.size() == static_cast<std::size_t>(grid.width) * grid.height * 3);

    TensorF bad({2, 4, 4, 4});
    CHECK_THROWS_AS(render_denoising_grid({{0, clean}, {1, bad}}), ShapeError);
    CHECK_THROWS_AS(render_denoising_grid({}), ConfigError);
}

namespace {

// Miniature but complete scenario run over a synthetic container.
ExperimentPlan micro_plan(const fs::path& dataset_path, Scenario scenario) {
    ExperimentPlan plan = toy_plan(2);
    plan.dataset_path = dataset_path.string();
    plan.scenario = scenario;
    plan.minority_classes = {1};
    plan.split_seed = 11;
    plan.train_seed = 12;
    plan.gen_seed = 13;
    plan.diffusion.timesteps = 5;
    plan.diffusion.base_width = 8;
    plan.diffusion.stage_multipliers = {1};
    plan.diffusion.embedding_dim = 8;
    plan.diffusion.batch_size = 4;
    plan.diffusion.max_steps = 3;
    plan.classifier.epochs = 2;
    plan.classifier.batch_size = 8;
    return plan;
}

fs::path write_micro_dataset(const fs::path& dir) {
    csi::Dataset d = toy_dataset({12, 12});
    Rng rng(3);
    for (auto& image : d.images)
        for (std::size_t v = 0; v < image.channels.numel(); ++v)
            image.channels[v] = static_cast<float>(rng.uniform(-2.0, 2.0));
    const fs::path path = dir / "micro.csit";
    csi::write_container(path, d);
    return path;
}

}  // namespace

TEST_CASE("balanced scenario writes every artifact and is deterministic") {
    const fs::path dir = fresh_dir("run_balanced");
    const fs::path dataset = write_micro_dataset(dir);
    const ExperimentPlan plan = micro_plan(dataset, Scenario::Balanced);

    const fs::path out1 = dir / "a";
    const RunScenarioResult r1 = run_scenario(plan, out1);
    for (const char* name : {"manifest.json", "metrics.json", "confusion.png", "losses.csv",
                             "train.csit", "test.csit", "classifier.ckpt.csit"})
        CHECK(fs::exists(out1 / name));
    CHECK_FALSE(fs::exists(out1 / kLockFileName));  // released

    // 12 per class, floor(0.73*12) = 8 train, 4 test.
    CHECK(r1.manifest.test_indices.size() == 8u);
    CHECK(r1.manifest.train_source_indices.size() == 16u);
    CHECK(r1.metrics.total == 8);
    CHECK(r1.manifest.provenance_counts.at("real") == 16);

    // Identical plan, identical manifest modulo timings.
    const RunScenarioResult r2 = run_scenario(plan, dir / "b");
    auto strip = [](const RunManifest& m) {
        nlohmann::json j = run_manifest_to_json(m);
        j.erase("timings");
        return j;
    };
    CHECK(strip(r1.manifest) == strip(r2.manifest));
    CHECK(vit::metrics_to_json(r1.metrics) == vit::metrics_to_json(r2.metrics));

    // The emitted training container echoes provenance per sample.
    const csi::Dataset train_back = csi::read_container(out1 / "train.csit");
    CHECK(train_back.images.size() == 16u);
    for (const auto& image : train_back.images)
        CHECK(image.provenance == csi::Provenance::Real);
    REQUIRE(train_back.manifest.normalization.has_value());
}

TEST_CASE("imbalanced scenario starves only the minority classes") {
    const fs::path dir = fresh_dir("run_imbalanced");
    const fs::path dataset = write_micro_dataset(dir);
    const ExperimentPlan plan = micro_plan(dataset, Scenario::Imbalanced);

    const RunScenarioResult r = run_scenario(plan, dir / "out");
    // Class 0 keeps 8, class 1 drops to floor(0.2*8) = 1.
    CHECK(r.manifest.train_source_indices.size() == 9u);
    CHECK(r.manifest.provenance_counts.at("real") == 9);
    CHECK(r.manifest.test_indices.size() == 8u);
}

TEST_CASE("augmented scenario replenishes minorities with generated samples") {
    const fs::path dir = fresh_dir("run_augmented");
    const fs::path dataset = write_micro_dataset(dir);
    const ExperimentPlan plan = micro_plan(dataset, Scenario::Augmented);

    const RunScenarioResult r = run_scenario(plan, dir / "out");
    // Imbalanced 8 + 1, replenished to 8 + 8 with 7 generated.
    CHECK(r.manifest.provenance_counts.at("real") == 9);
    CHECK(r.manifest.provenance_counts.at("generated") == 7);
    CHECK(fs::exists(dir / "out" / "diffusion.ckpt.csit"));
    CHECK(fs::exists(dir / "out" / "diffusion_losses.csv"));

    const csi::Dataset train_back = csi::read_container(dir / "out" / "train.csit");
    int generated = 0;
    for (const auto& image : train_back.images)
        if (image.provenance == csi::Provenance::Generated) {
            ++generated;
            CHECK(image.label == 1);
        }
    CHECK(generated == 7);

    // Shared split seed keeps the test set identical to the other scenarios.
    const ExperimentPlan balanced = micro_plan(dataset, Scenario::Balanced);
    const Split check = split_dataset(csi::read_container(dataset.string()), balanced);
    CHECK(check.test == r.manifest.test_indices);
}

TEST_CASE("run scenario rejects normalized input and reports the stage") {
    const fs::path dir = fresh_dir("run_rejects");
    csi::Dataset d = toy_dataset({6, 6});
    csi::NormStats stats;
    stats.min = {-1.0, -1.0, -1.0, -1.0};
    stats.max = {1.0, 1.0, 1.0, 1.0};
    d.manifest.normalization = stats;
    const fs::path path = dir / "normalized.csit";
    csi::write_container(path, d);

    ExperimentPlan plan = micro_plan(path, Scenario::Balanced);
    try {
        run_scenario(plan, dir / "out");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("[load]") == 0);
    }
    // The failed run released its lock.
    CHECK_FALSE(fs::exists(dir / "out" / kLockFileName));
}

TEST_CASE("report compares runs and flags minorities") {
    const fs::path dir = fresh_dir("report");
    const fs::path dataset = write_micro_dataset(dir);

    const auto balanced = run_scenario(micro_plan(dataset, Scenario::Balanced), dir / "bal");
    const auto augmented = run_scenario(micro_plan(dataset, Scenario::Augmented), dir / "aug");
    (void)balanced;
    (void)augmented;

    report({dir / "bal" / "manifest.json", dir / "aug" / "manifest.json"}, dir / "rep");
    REQUIRE(fs::exists(dir / "rep" / "report.csv"));
    REQUIRE(fs::exists(dir / "rep" / "report.txt"));

    std::ifstream is(dir / "rep" / "report.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "class,minority,balanced_accuracy,augmented_accuracy,augmented_delta");
    std::string row0, row1;
    std::getline(is, row0);
    std::getline(is, row1);
    CHECK(row0.substr(0, 4) == "0,0,");  // class 0 not minority
    CHECK(row1.substr(0, 4) == "1,1,");  // class 1 flagged
    // Delta column = 3 commas in header positions; every class row has 5 fields.
    CHECK(std::count(row0.begin(), row0.end(), ',') == 4);
    CHECK(std::count(row1.begin(), row1.end(), ',') == 4);

    CHECK_THROWS_AS(report({dir / "rep" / "nothere.json"}, dir / "rep2"), IoError);
    CHECK_THROWS_AS(report({}, dir / "rep3"), ConfigError);
}
