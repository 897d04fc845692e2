// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace csiaug {

inline constexpr const char* kToolVersion = "csiaug 0.1.0";

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite or otherwise malformed numeric input.
struct InvalidInputError : Error {
    using Error::Error;
};

// Tensor / frame-count / dimension mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// Timestamps or indices out of required order.
struct OrderingError : Error {
    using Error::Error;
};

// Bad configuration values (schedule bounds, split sizes, ...).
struct ConfigError : Error {
    using Error::Error;
};

// File-format and filesystem failures.
struct IoError : Error {
    using Error::Error;
};

// Diverging sampler, non-finite loss, and similar runtime failures.
struct GenerationError : Error {
    using Error::Error;
};

template <typename E = Error>
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw E(msg);
}

inline bool is_finite(double v) { return std::isfinite(v); }

}  // namespace csiaug
