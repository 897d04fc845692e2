// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "csiaug/io/png.hpp"
#include "csiaug/tensor.hpp"
#include "csiaug/vit/classifier.hpp"

namespace csiaug::harness {

// Row-normalized confusion heat map with count overlays: rows are true
// classes, columns predictions, header strip carries the overall accuracy.
inline io::RgbImage render_confusion(const vit::ClassifierMetrics& metrics,
                                     const std::string& title) {
    const int k = static_cast<int>(metrics.confusion.size());
    require<ConfigError>(k >= 1, "render_confusion: empty matrix");
    const int cell = 44, margin = 34, header = 18;
    const int size_x = margin + k * cell + 8;
    const int size_y = header + margin + k * cell + 8;
    io::RgbImage image(size_x, size_y);

    io::draw_text(image, 6, 5, title, 30, 30, 30);
    const int acc = static_cast<int>(std::lround(metrics.overall_accuracy * 1000.0));
    io::draw_text(image, size_x - 90, 5,
                  "ACC " + std::to_string(acc / 10) + "." + std::to_string(acc % 10) + "%", 30, 30,
                  30);

    for (int row = 0; row < k; ++row) {
        const auto& counts = metrics.confusion[static_cast<std::size_t>(row)];
        int row_sum = 0;
        for (const int v : counts) row_sum += v;
        for (int col = 0; col < k; ++col) {
            const double share =
                row_sum > 0 ? static_cast<double>(counts[static_cast<std::size_t>(col)]) / row_sum
                            : 0.0;
            // White (0) to saturated blue (1), diagonal shifted toward green.
            const auto level = static_cast<std::uint8_t>(255 - std::lround(205.0 * share));
            const std::uint8_t r = level;
            const std::uint8_t g = col == row
                                       ? static_cast<std::uint8_t>(255 - std::lround(105.0 * share))
                                       : level;
            const int x0 = margin + col * cell, y0 = header + margin + row * cell;
            image.fill_rect(x0, y0, cell - 2, cell - 2, r, g, 255);
            const std::string label = std::to_string(counts[static_cast<std::size_t>(col)]);
            io::draw_text(image, x0 + cell / 2 - 3 * static_cast<int>(label.size()),
                          y0 + cell / 2 - 4, label, 25, 25, 25);
        }
    }

    for (int i = 0; i < k; ++i) {
        io::draw_text(image, margin + i * cell + cell / 2 - 6, header + margin - 12,
                      "P" + std::to_string(i), 60, 60, 60);
        io::draw_text(image, margin - 22, header + margin + i * cell + cell / 2 - 4,
                      "T" + std::to_string(i), 60, 60, 60);
    }
    return image;
}

// Maps one channel of a [-1, 1] image to an 8-bit grayscale tile.
inline void blit_channel(io::RgbImage& canvas, const TensorF& batch, int sample, int channel,
                         int x0, int y0) {
    const int k = batch.dim(2), t = batch.dim(3);
    for (int row = 0; row < k; ++row)
        for (int col = 0; col < t; ++col) {
            const float v = std::clamp(batch.at(sample, channel, row, col), -1.0f, 1.0f);
            const auto level = static_cast<std::uint8_t>(std::lround((v + 1.0f) * 127.5f));
            canvas.set(x0 + col, y0 + row, level, level, level);
        }
}

// One row per sample, one column per recorded step (left = noisiest):
// the denoising trajectory of the amplitude channel.
inline io::RgbImage render_denoising_grid(
    const std::vector<std::pair<int, TensorF>>& snapshots, int max_rows = 4, int channel = 0) {
    require<ConfigError>(!snapshots.empty(), "render_denoising_grid: no snapshots");
    std::vector<std::pair<int, const TensorF*>> columns;
    for (const auto& [step, state] : snapshots) columns.emplace_back(step, &state);
    std::sort(columns.begin(), columns.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const TensorF& first = *columns.front().second;
    require<ShapeError>(first.rank() == 4, "render_denoising_grid: snapshots must be [N,C,K,T]");
    const int rows = std::min(max_rows, first.dim(0));
    const int k = first.dim(2), t = first.dim(3);
    const int pad = 4, header = 14;
    io::RgbImage canvas(pad + static_cast<int>(columns.size()) * (t + pad),
                        header + pad + rows * (k + pad), 24, 24, 24);

    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto& [step, state] = columns[c];
        require<ShapeError>(state->rank() == 4 && state->dim(2) == k && state->dim(3) == t,
                            "render_denoising_grid: snapshot shapes differ");
        io::draw_text(canvas, pad + static_cast<int>(c) * (t + pad), 3,
                      "T" + std::to_string(step), 220, 220, 220);
        for (int r = 0; r < std::min(rows, state->dim(0)); ++r)
            blit_channel(canvas, *state, r, channel, pad + static_cast<int>(c) * (t + pad),
                         header + pad + r * (k + pad));
    }
    return canvas;
}

}  // namespace csiaug::harness
