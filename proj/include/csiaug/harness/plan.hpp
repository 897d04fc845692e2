// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "json.hpp"

#include "csiaug/common.hpp"
#include "csiaug/diffusion/ddpm.hpp"
#include "csiaug/vit/vit.hpp"

namespace csiaug::harness {

enum class Scenario { Balanced, Imbalanced, Augmented };

inline const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Balanced: return "balanced";
        case Scenario::Imbalanced: return "imbalanced";
        case Scenario::Augmented: return "augmented";
    }
    return "unknown";
}

inline Scenario scenario_from_name(const std::string& s) {
    if (s == "balanced") return Scenario::Balanced;
    if (s == "imbalanced") return Scenario::Imbalanced;
    if (s == "augmented") return Scenario::Augmented;
    throw ConfigError("unknown scenario: " + s);
}

// One end-to-end experiment: split, optional minority starvation, optional
// generative replenishment, classifier training, evaluation.
//
// Seed discipline: split_seed fixes membership, train_seed drives both model
// trainings (sub-seeds are derived from it; the seed fields inside the
// embedded configs are overwritten), gen_seed drives sampling. Identical
// plans therefore produce identical runs.
struct ExperimentPlan {
    std::string dataset_path;
    int num_classes = 6;
    double train_fraction = 0.73;
    std::vector<int> minority_classes;
    double minority_keep_fraction = 0.20;
    int augmentation_target = 0;  // per-class training count; 0 = majority parity
    std::uint64_t split_seed = 1;
    std::uint64_t train_seed = 2;
    std::uint64_t gen_seed = 3;
    Scenario scenario = Scenario::Balanced;

    diffusion::DiffusionConfig diffusion;
    vit::ViTConfig classifier;

    void validate() const {
        require<ConfigError>(num_classes >= 2, "plan: need at least two classes");
        require<ConfigError>(train_fraction > 0.0 && train_fraction < 1.0,
                             "plan: train_fraction must be in (0, 1)");
        require<ConfigError>(minority_keep_fraction > 0.0 && minority_keep_fraction <= 1.0,
                             "plan: minority_keep_fraction must be in (0, 1]");
        require<ConfigError>(augmentation_target >= 0,
                             "plan: augmentation_target must be >= 0");
        for (const int c : minority_classes)
            require<ConfigError>(c >= 0 && c < num_classes,
                                 "plan: minority class id out of range");
        for (std::size_t i = 1; i < minority_classes.size(); ++i)
            require<ConfigError>(minority_classes[i - 1] < minority_classes[i],
                                 "plan: minority classes must be sorted and unique");
        require<ConfigError>(diffusion.num_classes == num_classes,
                             "plan: diffusion num_classes mismatch");
        require<ConfigError>(classifier.num_classes == num_classes,
                             "plan: classifier num_classes mismatch");
        require<ConfigError>(diffusion.channels == classifier.channels &&
                                 diffusion.height == classifier.carriers &&
                                 diffusion.width == classifier.time_slots,
                             "plan: diffusion and classifier image shapes differ");
        diffusion.validate();
        classifier.validate();
    }

    bool is_minority(int cls) const {
        return std::binary_search(minority_classes.begin(), minority_classes.end(), cls);
    }

    // 32x32 synthetic-benchmark preset with two minority classes.
    static ExperimentPlan desk(int num_classes_, std::uint64_t seed) {
        ExperimentPlan p;
        p.num_classes = num_classes_;
        p.minority_classes = {1, 4};
        p.split_seed = mix_seed(seed, 1);
        p.train_seed = mix_seed(seed, 2);
        p.gen_seed = mix_seed(seed, 3);
        p.diffusion = diffusion::DiffusionConfig::desk(num_classes_, 0);
        p.classifier = vit::ViTConfig::desk(num_classes_, 0);
        return p;
    }
};

inline nlohmann::json plan_to_json(const ExperimentPlan& p) {
    return nlohmann::json{{"dataset_path", p.dataset_path},
                          {"num_classes", p.num_classes},
                          {"train_fraction", p.train_fraction},
                          {"minority_classes", p.minority_classes},
                          {"minority_keep_fraction", p.minority_keep_fraction},
                          {"augmentation_target", p.augmentation_target},
                          {"split_seed", p.split_seed},
                          {"train_seed", p.train_seed},
                          {"gen_seed", p.gen_seed},
                          {"scenario", scenario_name(p.scenario)},
                          {"diffusion", diffusion::diffusion_config_to_json(p.diffusion)},
                          {"classifier", vit::vit_config_to_json(p.classifier)}};
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
    ExperimentPlan p;
    p.dataset_path = j.value("dataset_path", p.dataset_path);
    p.num_classes = j.value("num_classes", p.num_classes);
    p.train_fraction = j.value("train_fraction", p.train_fraction);
    p.minority_classes = j.value("minority_classes", p.minority_classes);
    p.minority_keep_fraction = j.value("minority_keep_fraction", p.minority_keep_fraction);
    p.augmentation_target = j.value("augmentation_target", p.augmentation_target);
    p.split_seed = j.value("split_seed", p.split_seed);
    p.train_seed = j.value("train_seed", p.train_seed);
    p.gen_seed = j.value("gen_seed", p.gen_seed);
    if (j.contains("scenario")) p.scenario = scenario_from_name(j.at("scenario").get<std::string>());
    if (j.contains("diffusion"))
        p.diffusion = diffusion::diffusion_config_from_json(j.at("diffusion"));
    if (j.contains("classifier")) p.classifier = vit::vit_config_from_json(j.at("classifier"));
    std::sort(p.minority_classes.begin(), p.minority_classes.end());
    return p;
}

}  // namespace csiaug::harness
