// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "csiaug/csi/container.hpp"
#include "csiaug/diffusion/ddpm.hpp"
#include "csiaug/harness/plan.hpp"
#include "csiaug/rng.hpp"

namespace csiaug::harness {

// Index lists into the source dataset. Training order is the per-class
// shuffled order, so "first k" selections downstream stay seed-determined.
struct Split {
    std::vector<int> train;
    std::vector<int> test;
};

// Per-class shuffle under split_seed (one derived stream per class, so a
// class's membership does not depend on the other classes' sizes), then the
// first floor(train_fraction * n_c) of each class train and the rest test.
inline Split split_dataset(const csi::Dataset& dataset, const ExperimentPlan& plan) {
    plan.validate();
    require<ConfigError>(dataset.num_classes == plan.num_classes,
                         "split: dataset class count differs from plan");

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(plan.num_classes));
    for (std::size_t i = 0; i < dataset.images.size(); ++i)
        by_class[static_cast<std::size_t>(dataset.images[i].label)].push_back(
            static_cast<int>(i));

    Split split;
    for (int cls = 0; cls < plan.num_classes; ++cls) {
        auto& members = by_class[static_cast<std::size_t>(cls)];
        require<ConfigError>(members.size() >= 2,
                             "split: class " + std::to_string(cls) +
                                 " has fewer than 2 samples");
        Rng rng(mix_seed(plan.split_seed, static_cast<std::uint64_t>(cls)));
        rng.shuffle(members);
        const auto train_count = static_cast<std::size_t>(
            plan.train_fraction * static_cast<double>(members.size()));
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < train_count ? split.train : split.test).push_back(members[i]);
    }
    return split;
}

// Starves each minority class to the first floor(keep_fraction * n) entries
// of its (already shuffled) training list; the test set is untouched.
inline std::vector<int> apply_imbalance(const std::vector<int>& train,
                                        const csi::Dataset& dataset,
                                        const ExperimentPlan& plan) {
    std::map<int, int> kept_budget;
    for (const int cls : plan.minority_classes) {
        int count = 0;
        for (const int idx : train)
            if (dataset.images[static_cast<std::size_t>(idx)].label == cls) ++count;
        kept_budget[cls] = static_cast<int>(plan.minority_keep_fraction * count);
    }

    std::vector<int> reduced;
    reduced.reserve(train.size());
    for (const int idx : train) {
        const int cls = dataset.images[static_cast<std::size_t>(idx)].label;
        auto budget = kept_budget.find(cls);
        if (budget == kept_budget.end()) {
            reduced.push_back(idx);
            continue;
        }
        if (budget->second > 0) {
            reduced.push_back(idx);
            --budget->second;
        }
    }
    return reduced;
}

// A scenario's working training set: materialized images plus the source
// index of each (-1 for generated samples), for leak checks by id.
struct TrainingSet {
    std::vector<csi::CsiImage> images;
    std::vector<int> source_indices;

    int count_for_class(int cls) const {
        int n = 0;
        for (const auto& image : images)
            if (image.label == cls) ++n;
        return n;
    }
};

inline TrainingSet materialize(const csi::Dataset& dataset, const std::vector<int>& indices) {
    TrainingSet set;
    set.images.reserve(indices.size());
    for (const int idx : indices) {
        set.images.push_back(dataset.images[static_cast<std::size_t>(idx)]);
        set.source_indices.push_back(idx);
    }
    return set;
}

// [N, 4, K, T] stack plus the label list, ready for the trainers.
inline std::pair<TensorF, std::vector<int>> stack_images(
    const std::vector<csi::CsiImage>& images) {
    require<InvalidInputError>(!images.empty(), "stack_images: empty image list");
    const auto& first = images.front().channels;
    TensorF stacked({static_cast<int>(images.size()), first.dim(0), first.dim(1), first.dim(2)});
    std::vector<int> labels;
    labels.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        require<ShapeError>(images[i].channels.same_shape(first),
                            "stack_images: images must share one shape");
        std::copy_n(images[i].channels.data(), first.numel(),
                    stacked.data() + i * first.numel());
        labels.push_back(images[i].label);
    }
    return {std::move(stacked), labels};
}

// Per-class generated-sample budget: target minus current count, zero when
// already at or above target. target == 0 means majority parity.
inline std::map<int, int> augmentation_budget(const TrainingSet& train,
                                              const ExperimentPlan& plan) {
    int target = plan.augmentation_target;
    if (target == 0)
        for (int cls = 0; cls < plan.num_classes; ++cls)
            target = std::max(target, train.count_for_class(cls));

    std::map<int, int> budget;
    for (const int cls : plan.minority_classes)
        budget[cls] = std::max(0, target - train.count_for_class(cls));
    return budget;
}

// Draws the missing minority samples from the conditional sampler and merges
// them, flagged Generated, into the training set. The model must have been
// trained on this training set only; the caller owns that guarantee.
template <typename Model>
inline void augment(TrainingSet& train, Model& model, const diffusion::NoiseSchedule& sched,
                    const ExperimentPlan& plan, Rng& gen_rng) {
    require<InvalidInputError>(!train.images.empty(), "augment: empty training set");
    const auto budget = augmentation_budget(train, plan);
    const csi::CsiImage& prototype = train.images.front();
    const int k = prototype.k(), t = prototype.t();

    for (const auto& [cls, need] : budget) {
        if (need == 0) continue;
        auto out = diffusion::generate<float>(model, cls, need, sched, gen_rng,
                                              csi::kImageChannels, k, t);
        for (int j = 0; j < need; ++j) {
            csi::CsiImage image;
            image.label = cls;
            image.provenance = csi::Provenance::Generated;
            image.carrier_mask = prototype.carrier_mask;
            image.channels = TensorF({csi::kImageChannels, k, t});
            std::copy_n(out.samples.data() + static_cast<std::size_t>(j) * image.channels.numel(),
                        image.channels.numel(), image.channels.data());
            // The sampler knows nothing about dead carriers; blank them so the
            // generated images live in the same space as preprocessed ones.
            for (int row = 0; row < k; ++row) {
                if (image.carrier_mask.is_usable(row)) continue;
                for (int c = 0; c < csi::kImageChannels; ++c)
                    for (int col = 0; col < t; ++col) image.channels.at(c, row, col) = 0.0f;
            }
            train.images.push_back(std::move(image));
            train.source_indices.push_back(-1);
        }
    }
}

// id-level disjointness; the pipeline constructs splits disjoint by design
// and this asserts it before anything trains.
inline void assert_no_leak(const std::vector<int>& train_sources,
                           const std::vector<int>& test_indices) {
    std::set<int> test_ids(test_indices.begin(), test_indices.end());
    for (const int idx : train_sources)
        require<OrderingError>(idx == -1 || test_ids.find(idx) == test_ids.end(),
                               "leak check: training sample " + std::to_string(idx) +
                                   " appears in the test set");
}

}  // namespace csiaug::harness
