// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "csiaug/csi/sanitize.hpp"
#include "csiaug/csi/types.hpp"

namespace csiaug::csi {

struct DegenerateStatsError : Error {
    using Error::Error;
};

inline constexpr int kFramesPerImage = 256;   // ~2.56 s at the 10 ms packet interval
inline constexpr double kAmplitudeFloorDb = -240.0;
inline constexpr double kAmplitudeFloorMag = 1e-12;

namespace detail {

// Size-generic image assembly shared by the public 256x256 builder and the
// synthetic generator (which also runs at reduced desk-scale sizes).
inline CsiImage build_csi_image_sized(std::span<const CsiFrame> frames,
                                      std::pair<int, int> antenna_pair, const CarrierMask& mask) {
    require<ShapeError>(!frames.empty(), "build_csi_image: no frames");
    const int k_bins = mask.size();
    const int t_slots = static_cast<int>(frames.size());

    for (const auto& f : frames) f.validate();
    for (std::size_t i = 1; i < frames.size(); ++i)
        require<OrderingError>(frames[i].timestamp > frames[i - 1].timestamp,
                               "build_csi_image: timestamps must be strictly increasing");

    const std::array<int, 2> antennas = {antenna_pair.first, antenna_pair.second};
    for (int a : antennas)
        require<ConfigError>(a >= 0 && a < frames[0].antenna_count,
                             "build_csi_image: antenna index out of range");

    CsiImage image;
    image.carrier_mask = mask;
    image.channels = TensorF({kImageChannels, k_bins, t_slots});

    std::vector<int> usable_k;      // carriers present in the frame and usable per mask
    std::vector<int> usable_rows;
    std::vector<double> phase;
    for (int t = 0; t < t_slots; ++t) {
        const CsiFrame& frame = frames[static_cast<std::size_t>(t)];
        usable_k.clear();
        usable_rows.clear();
        for (int j = 0; j < frame.carrier_count(); ++j) {
            const int k = frame.subcarrier_indices[static_cast<std::size_t>(j)];
            const int row = mask.row_of_index(k);
            if (row < 0 || row >= k_bins || !mask.is_usable(row)) continue;
            usable_k.push_back(j);
            usable_rows.push_back(row);
        }
        require<InvalidInputError>(usable_k.size() >= 2,
                                   "build_csi_image: frame covers fewer than 2 usable carriers");

        for (int pair_slot = 0; pair_slot < 2; ++pair_slot) {
            const int antenna = antennas[static_cast<std::size_t>(pair_slot)];
            const int amp_channel = 2 * pair_slot;
            const int phase_channel = amp_channel + 1;

            phase.resize(usable_k.size());
            std::vector<int> k_indices(usable_k.size());
            for (std::size_t u = 0; u < usable_k.size(); ++u) {
                const auto& v = frame.value(antenna, usable_k[u]);
                const double mag = std::abs(v);
                const double db =
                    mag < kAmplitudeFloorMag ? kAmplitudeFloorDb : 20.0 * std::log10(mag);
                image.channels.at(amp_channel, usable_rows[u], t) = static_cast<float>(db);
                phase[u] = std::arg(v);
                k_indices[u] = frame.subcarrier_indices[static_cast<std::size_t>(usable_k[u])];
            }
            const auto corrected = sanitize_phase(phase, k_indices);
            for (std::size_t u = 0; u < corrected.size(); ++u)
                image.channels.at(phase_channel, usable_rows[u], t) = static_cast<float>(corrected[u]);
        }
    }
    return image;
}

}  // namespace detail

// Builds one 4x256x256 CSI image from exactly 256 frames: channels 0/2 carry
// amplitude in dB (floored at -240 dB), channels 1/3 the sanitized phase, for
// the two selected antennas. Masked carriers stay zero.
inline CsiImage build_csi_image(std::span<const CsiFrame> frames, std::pair<int, int> antenna_pair,
                                const CarrierMask& mask) {
    require<ShapeError>(static_cast<int>(frames.size()) == kFramesPerImage,
                        "build_csi_image: expected exactly 256 frames, got " +
                            std::to_string(frames.size()));
    require<ShapeError>(mask.size() == 256, "build_csi_image: expected a 256-bin carrier mask");
    return detail::build_csi_image_sized(frames, antenna_pair, mask);
}

// Per-channel min/max collected from a training set; fixes the affine map used
// to bring images into [-1, 1] and back.
struct NormStats {
    std::array<double, kImageChannels> min{};
    std::array<double, kImageChannels> max{};

    void validate() const {
        for (int c = 0; c < kImageChannels; ++c) {
            require<InvalidInputError>(std::isfinite(min[static_cast<std::size_t>(c)]) &&
                                           std::isfinite(max[static_cast<std::size_t>(c)]),
                                       "NormStats: non-finite bounds");
            require<DegenerateStatsError>(max[static_cast<std::size_t>(c)] > min[static_cast<std::size_t>(c)],
                                          "NormStats: max must exceed min (channel " +
                                              std::to_string(c) + ")");
        }
    }
};

// Min/max over usable carrier rows of every image. Masked rows are excluded so
// the forced zeros never distort the range.
inline NormStats compute_norm_stats(std::span<const CsiImage> images) {
    require<InvalidInputError>(!images.empty(), "compute_norm_stats: empty image set");
    NormStats stats;
    stats.min.fill(std::numeric_limits<double>::infinity());
    stats.max.fill(-std::numeric_limits<double>::infinity());
    for (const auto& image : images) {
        for (int c = 0; c < kImageChannels; ++c) {
            for (int r = 0; r < image.k(); ++r) {
                if (!image.carrier_mask.is_usable(r)) continue;
                for (int t = 0; t < image.t(); ++t) {
                    const double v = image.channels.at(c, r, t);
                    auto& lo = stats.min[static_cast<std::size_t>(c)];
                    auto& hi = stats.max[static_cast<std::size_t>(c)];
                    if (v < lo) lo = v;
                    if (v > hi) hi = v;
                }
            }
        }
    }
    stats.validate();
    return stats;
}

// Affine map per channel onto [-1, 1]. Masked rows pass through untouched
// (exactly zero in, exactly zero out); the map inverts exactly via denormalize.
inline CsiImage normalize(const CsiImage& image, const NormStats& stats) {
    stats.validate();
    CsiImage out = image;
    for (int c = 0; c < kImageChannels; ++c) {
        const double lo = stats.min[static_cast<std::size_t>(c)];
        const double span = stats.max[static_cast<std::size_t>(c)] - lo;
        for (int r = 0; r < image.k(); ++r) {
            if (!image.carrier_mask.is_usable(r)) continue;
            for (int t = 0; t < image.t(); ++t) {
                const double v = image.channels.at(c, r, t);
                out.channels.at(c, r, t) = static_cast<float>(2.0 * (v - lo) / span - 1.0);
            }
        }
    }
    return out;
}

inline CsiImage denormalize(const CsiImage& image, const NormStats& stats) {
    stats.validate();
    CsiImage out = image;
    for (int c = 0; c < kImageChannels; ++c) {
        const double lo = stats.min[static_cast<std::size_t>(c)];
        const double span = stats.max[static_cast<std::size_t>(c)] - lo;
        for (int r = 0; r < image.k(); ++r) {
            if (!image.carrier_mask.is_usable(r)) continue;
            for (int t = 0; t < image.t(); ++t) {
                const double v = image.channels.at(c, r, t);
                out.channels.at(c, r, t) = static_cast<float>((v + 1.0) * 0.5 * span + lo);
            }
        }
    }
    return out;
}

}  // namespace csiaug::csi
