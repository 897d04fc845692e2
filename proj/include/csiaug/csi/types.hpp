// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "csiaug/common.hpp"
#include "csiaug/tensor.hpp"

namespace csiaug::csi {

// One captured packet: the complex channel response per antenna per subcarrier.
// `subcarrier_indices` holds signed FFT bin indices k (strictly increasing);
// `values(a, j)` is the response of antenna a on carrier k_j.
struct CsiFrame {
    double timestamp = 0.0;  // seconds
    int antenna_count = 0;
    std::vector<int> subcarrier_indices;
    std::vector<std::complex<double>> values;  // row-major [antenna_count x n]

    int carrier_count() const { return static_cast<int>(subcarrier_indices.size()); }

    std::complex<double>& value(int antenna, int carrier) {
        return values[static_cast<std::size_t>(antenna) * subcarrier_indices.size() +
                      static_cast<std::size_t>(carrier)];
    }
    const std::complex<double>& value(int antenna, int carrier) const {
        return values[static_cast<std::size_t>(antenna) * subcarrier_indices.size() +
                      static_cast<std::size_t>(carrier)];
    }

    void validate() const {
        require<ShapeError>(antenna_count > 0, "CsiFrame: antenna_count must be positive");
        require<ShapeError>(
            values.size() == static_cast<std::size_t>(antenna_count) * subcarrier_indices.size(),
            "CsiFrame: values size does not match antennas x carriers");
        for (std::size_t j = 1; j < subcarrier_indices.size(); ++j)
            require<OrderingError>(subcarrier_indices[j] > subcarrier_indices[j - 1],
                                   "CsiFrame: subcarrier indices must be strictly increasing");
        for (const auto& v : values)
            require<InvalidInputError>(std::isfinite(v.real()) && std::isfinite(v.imag()),
                                       "CsiFrame: non-finite value");
    }
};

// Which of the K FFT bins carry usable data. Row r of a CsiImage corresponds
// to bin index k = r - K/2.
class CarrierMask {
public:
    CarrierMask() = default;

    explicit CarrierMask(std::vector<bool> usable) : usable_(std::move(usable)) {}

    static CarrierMask all_usable(int k) { return CarrierMask(std::vector<bool>(static_cast<std::size_t>(k), true)); }

    // 802.11ac 80 MHz: 256-point FFT, data tones at k in +-(2..122) minus the
    // pilots at +-{11, 39, 75, 103}. Exactly 234 usable carriers.
    static CarrierMask default_80mhz() {
        std::vector<bool> usable(256, false);
        auto is_pilot = [](int a) { return a == 11 || a == 39 || a == 75 || a == 103; };
        for (int k = -122; k <= 122; ++k) {
            const int a = std::abs(k);
            if (a < 2 || is_pilot(a)) continue;
            usable[static_cast<std::size_t>(k + 128)] = true;
        }
        return CarrierMask(std::move(usable));
    }

    int size() const { return static_cast<int>(usable_.size()); }

    bool is_usable(int row) const { return usable_[static_cast<std::size_t>(row)]; }

    bool is_usable_index(int k) const {
        const int row = k + size() / 2;
        return row >= 0 && row < size() && usable_[static_cast<std::size_t>(row)];
    }

    int usable_count() const {
        int n = 0;
        for (bool b : usable_) n += b ? 1 : 0;
        return n;
    }

    // Usable bin indices k in increasing order.
    std::vector<int> usable_indices() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(usable_count()));
        for (int r = 0; r < size(); ++r)
            if (usable_[static_cast<std::size_t>(r)]) out.push_back(r - size() / 2);
        return out;
    }

    int row_of_index(int k) const { return k + size() / 2; }

    const std::vector<bool>& raw() const { return usable_; }

    bool operator==(const CarrierMask& o) const { return usable_ == o.usable_; }

private:
    std::vector<bool> usable_;
};

// Linear phase-error model fitted per frame: slope in radians per subcarrier
// index, intercept in radians. Hardware timing and initial-phase terms are
// unobservable individually and live absorbed inside (slope, intercept).
struct PhaseFit {
    double slope = 0.0;
    double intercept = 0.0;

    void validate() const {
        require<InvalidInputError>(std::isfinite(slope) && std::isfinite(intercept),
                                   "PhaseFit: non-finite coefficients");
    }
};

enum class ChannelRole : std::uint8_t {
    AmplitudeAntennaA = 0,  // 20*log10|H|, dB
    PhaseAntennaA = 1,      // sanitized phase, radians
    AmplitudeAntennaB = 2,
    PhaseAntennaB = 3,
};

inline const char* channel_role_name(ChannelRole r) {
    switch (r) {
        case ChannelRole::AmplitudeAntennaA: return "amp_antenna_A_dB";
        case ChannelRole::PhaseAntennaA: return "phase_antenna_A";
        case ChannelRole::AmplitudeAntennaB: return "amp_antenna_B_dB";
        case ChannelRole::PhaseAntennaB: return "phase_antenna_B";
    }
    return "unknown";
}

inline constexpr int kImageChannels = 4;

// Where a stored sample came from.
enum class Provenance : std::uint8_t { Real = 0, Synthetic = 1, Generated = 2 };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Real: return "real";
        case Provenance::Synthetic: return "synthetic";
        case Provenance::Generated: return "generated";
    }
    return "unknown";
}

inline Provenance provenance_from_name(const std::string& s) {
    if (s == "real") return Provenance::Real;
    if (s == "synthetic") return Provenance::Synthetic;
    if (s == "generated") return Provenance::Generated;
    throw ConfigError("unknown provenance: " + s);
}

// 4-channel CSI image: [C x K x T], rows ordered by increasing subcarrier
// index, columns by timestamp. Rows of masked-out carriers are exactly zero.
struct CsiImage {
    TensorF channels;  // [4, K, T]
    int label = 0;
    CarrierMask carrier_mask;
    Provenance provenance = Provenance::Real;

    int k() const { return channels.rank() == 3 ? channels.dim(1) : 0; }
    int t() const { return channels.rank() == 3 ? channels.dim(2) : 0; }

    void validate() const {
        require<ShapeError>(channels.rank() == 3, "CsiImage: tensor must be [C,K,T]");
        require<ShapeError>(channels.dim(0) == kImageChannels, "CsiImage: expected 4 channels");
        require<ShapeError>(carrier_mask.size() == k(), "CsiImage: mask length != K");
        require<InvalidInputError>(channels.all_finite(), "CsiImage: non-finite values");
        for (int r = 0; r < k(); ++r) {
            if (carrier_mask.is_usable(r)) continue;
            for (int c = 0; c < kImageChannels; ++c)
                for (int col = 0; col < t(); ++col)
                    require<InvalidInputError>(channels.at(c, r, col) == 0.0f,
                                               "CsiImage: masked carrier row must be zero");
        }
    }
};

}  // namespace csiaug::csi
