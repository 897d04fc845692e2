// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "csiaug/csi/types.hpp"

namespace csiaug::csi {

struct DegenerateFitError : Error {
    using Error::Error;
};

// Cumulative phase unwrapping along the subcarrier axis: each element is
// shifted by an integer multiple of 2*pi so its difference from the already
// unwrapped predecessor lands in (-pi, pi].
inline std::vector<double> unwrap_phase(const std::vector<double>& raw) {
    require<InvalidInputError>(raw.size() >= 2, "unwrap_phase: need at least 2 samples");
    for (double v : raw)
        require<InvalidInputError>(std::isfinite(v), "unwrap_phase: non-finite input");

    std::vector<double> out(raw.size());
    out[0] = raw[0];
    for (std::size_t m = 1; m < raw.size(); ++m) {
        const double d = raw[m] - out[m - 1];
        const double n = std::floor((M_PI - d) / (2.0 * M_PI));
        out[m] = raw[m] + 2.0 * M_PI * n;
    }
    return out;
}

// Endpoint slope plus mean intercept over the unwrapped phase:
//   slope     = (phi_n - phi_1) / (k_n - k_1)
//   intercept = mean(phi) - slope * mean(k)
// The hardware timing terms are not identifiable per frame; they are absorbed
// into the fitted pair.
inline PhaseFit fit_linear_phase(const std::vector<double>& unwrapped,
                                 const std::vector<int>& indices) {
    require<ShapeError>(unwrapped.size() == indices.size(),
                        "fit_linear_phase: phase/index length mismatch");
    require<InvalidInputError>(unwrapped.size() >= 2, "fit_linear_phase: need at least 2 points");
    for (double v : unwrapped)
        require<InvalidInputError>(std::isfinite(v), "fit_linear_phase: non-finite phase");

    const std::size_t n = indices.size();
    require<DegenerateFitError>(indices.front() != indices.back(),
                                "fit_linear_phase: duplicate endpoint indices");

    PhaseFit fit;
    fit.slope = (unwrapped.back() - unwrapped.front()) /
                static_cast<double>(indices.back() - indices.front());

    double phase_mean = 0.0;
    double index_mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        phase_mean += unwrapped[j];
        index_mean += static_cast<double>(indices[j]);
    }
    phase_mean /= static_cast<double>(n);
    index_mean /= static_cast<double>(n);
    fit.intercept = phase_mean - fit.slope * index_mean;
    fit.validate();
    return fit;
}

// Removes the fitted linear term: out_j = phi_j - (slope * k_j + intercept).
inline std::vector<double> correct_phase(const std::vector<double>& unwrapped,
                                         const std::vector<int>& indices, const PhaseFit& fit) {
    require<ShapeError>(unwrapped.size() == indices.size(),
                        "correct_phase: phase/index length mismatch");
    fit.validate();
    std::vector<double> out(unwrapped.size());
    for (std::size_t j = 0; j < unwrapped.size(); ++j) {
        require<InvalidInputError>(std::isfinite(unwrapped[j]), "correct_phase: non-finite phase");
        out[j] = unwrapped[j] - (fit.slope * static_cast<double>(indices[j]) + fit.intercept);
    }
    return out;
}

// unwrap -> fit -> correct in one call; returns the corrected phase and the fit.
inline std::vector<double> sanitize_phase(const std::vector<double>& raw,
                                          const std::vector<int>& indices, PhaseFit* fit_out = nullptr) {
    const auto unwrapped = unwrap_phase(raw);
    const auto fit = fit_linear_phase(unwrapped, indices);
    if (fit_out) *fit_out = fit;
    return correct_phase(unwrapped, indices, fit);
}

}  // namespace csiaug::csi
