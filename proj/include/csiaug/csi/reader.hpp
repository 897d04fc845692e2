// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "csiaug/csi/image.hpp"
#include "csiaug/csi/types.hpp"

namespace csiaug::csi {

// Pluggable source of raw frames. Hardware-specific dump formats (nexmon and
// friends) plug in behind this interface; the shipped reference reader
// consumes the CSV intermediate documented below.
class FrameSource {
public:
    virtual ~FrameSource() = default;

    // Next frame in timestamp order, or nullopt at end of stream.
    virtual std::optional<CsiFrame> next() = 0;
};

// Reference reader for the documented CSV intermediate:
//
//   # comment lines start with '#', blank lines are skipped
//   timestamp_s,antenna,subcarrier_k,real,imag
//
// Rows sharing one timestamp form one frame. Within a frame every antenna must
// report the same carrier set; antennas are numbered 0..A-1. Timestamps must
// strictly increase from frame to frame.
class CsvFrameSource : public FrameSource {
public:
    explicit CsvFrameSource(const std::filesystem::path& path) : is_(path) {
        require<IoError>(is_.good(), "CsvFrameSource: cannot open " + path.string());
    }

    std::optional<CsiFrame> next() override {
        while (true) {
            if (!pending_ && !read_row()) break;
            if (!pending_) break;
            if (rows_.empty() || pending_->timestamp == rows_.front().timestamp) {
                rows_.push_back(*pending_);
                pending_.reset();
                continue;
            }
            break;  // pending row opens the next frame
        }
        if (rows_.empty()) return std::nullopt;
        CsiFrame frame = assemble();
        rows_.clear();
        require<OrderingError>(!last_timestamp_ || frame.timestamp > *last_timestamp_,
                               "CsvFrameSource: timestamps must strictly increase");
        last_timestamp_ = frame.timestamp;
        return frame;
    }

private:
    struct Row {
        double timestamp;
        int antenna;
        int carrier;
        double re;
        double im;
    };

    bool read_row() {
        std::string line;
        while (std::getline(is_, line)) {
            ++line_no_;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            Row row{};
            char sep = ',';
            ls >> row.timestamp >> sep >> row.antenna >> sep >> row.carrier >> sep >> row.re >>
                sep >> row.im;
            require<IoError>(!ls.fail(),
                             "CsvFrameSource: malformed row at line " + std::to_string(line_no_));
            pending_ = row;
            return true;
        }
        return false;
    }

    CsiFrame assemble() const {
        std::vector<int> carriers;
        int max_antenna = 0;
        for (const auto& row : rows_) {
            carriers.push_back(row.carrier);
            max_antenna = std::max(max_antenna, row.antenna);
        }
        std::sort(carriers.begin(), carriers.end());
        carriers.erase(std::unique(carriers.begin(), carriers.end()), carriers.end());

        CsiFrame frame;
        frame.timestamp = rows_.front().timestamp;
        frame.antenna_count = max_antenna + 1;
        frame.subcarrier_indices = carriers;
        frame.values.assign(static_cast<std::size_t>(frame.antenna_count) * carriers.size(),
                            {0.0, 0.0});

        std::vector<bool> seen(frame.values.size(), false);
        for (const auto& row : rows_) {
            const auto it = std::lower_bound(carriers.begin(), carriers.end(), row.carrier);
            const auto j = static_cast<std::size_t>(it - carriers.begin());
            const auto slot = static_cast<std::size_t>(row.antenna) * carriers.size() + j;
            require<InvalidInputError>(!seen[slot], "CsvFrameSource: duplicate (antenna, carrier) row");
            seen[slot] = true;
            frame.values[slot] = {row.re, row.im};
        }
        require<InvalidInputError>(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }),
                                   "CsvFrameSource: antennas disagree on the carrier set");
        frame.validate();
        return frame;
    }

    std::ifstream is_;
    std::size_t line_no_ = 0;
    std::vector<Row> rows_;
    std::optional<Row> pending_;
    std::optional<double> last_timestamp_;
};

// Drains a source into consecutive windows of `frames_per_image` frames
// (non-overlapping when stride == frames_per_image) and builds one image per
// full window. Trailing partial windows are dropped.
inline std::vector<CsiImage> windowed_images(FrameSource& source, int frames_per_image, int stride,
                                             std::pair<int, int> antenna_pair,
                                             const CarrierMask& mask, int label) {
    require<ConfigError>(frames_per_image >= 1, "windowed_images: frames_per_image must be >= 1");
    require<ConfigError>(stride >= 1, "windowed_images: stride must be >= 1");
    std::vector<CsiFrame> window;
    std::vector<CsiImage> images;
    while (auto frame = source.next()) {
        window.push_back(std::move(*frame));
        if (static_cast<int>(window.size()) == frames_per_image) {
            CsiImage image = detail::build_csi_image_sized(window, antenna_pair, mask);
            image.label = label;
            images.push_back(std::move(image));
            window.erase(window.begin(), window.begin() + std::min<std::size_t>(
                                                              static_cast<std::size_t>(stride),
                                                              window.size()));
        }
    }
    return images;
}

}  // namespace csiaug::csi
