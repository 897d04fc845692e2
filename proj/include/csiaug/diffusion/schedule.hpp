// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "csiaug/common.hpp"

namespace csiaug::diffusion {

// Variance schedule for the forward noising process.  All quantities are
// computed and stored in double: alpha_bar decays through ~34 orders of
// magnitude over 500 steps and float would flush the tail to subnormals.
//
// Indexing is 1-based to match the customary t = 1..T convention; the
// accessors take t in that range.  alpha_bar_t additionally accepts t = 0
// and returns 1 (empty product), which is what the posterior variance at
// t = 1 relies on to vanish.
class NoiseSchedule {
  public:
    // beta_t = beta_start + (t-1)/(T-1) * (beta_end - beta_start).
    // With T = 1 the single beta is beta_start.
    static NoiseSchedule linear(int timesteps = 500, double beta_start = 1e-4,
                                double beta_end = 0.28) {
        require<ConfigError>(timesteps >= 1, "schedule: timesteps must be >= 1");
        require<ConfigError>(beta_start > 0.0, "schedule: beta_start must be > 0");
        require<ConfigError>(beta_start <= beta_end, "schedule: beta_start must be <= beta_end");
        require<ConfigError>(beta_end < 1.0, "schedule: beta_end must be < 1");

        NoiseSchedule s;
        s.timesteps_ = timesteps;
        s.betas_.resize(static_cast<std::size_t>(timesteps));
        s.alphas_.resize(static_cast<std::size_t>(timesteps));
        s.alpha_bars_.resize(static_cast<std::size_t>(timesteps));
        double bar = 1.0;
        for (int t = 1; t <= timesteps; ++t) {
            const double frac =
                timesteps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(timesteps - 1);
            const double beta = beta_start + frac * (beta_end - beta_start);
            const double alpha = 1.0 - beta;
            bar *= alpha;
            s.betas_[static_cast<std::size_t>(t - 1)] = beta;
            s.alphas_[static_cast<std::size_t>(t - 1)] = alpha;
            s.alpha_bars_[static_cast<std::size_t>(t - 1)] = bar;
        }
        return s;
    }

    int timesteps() const { return timesteps_; }

    double beta(int t) const {
        check_step(t);
        return betas_[static_cast<std::size_t>(t - 1)];
    }
    double alpha(int t) const {
        check_step(t);
        return alphas_[static_cast<std::size_t>(t - 1)];
    }
    // Defined for t = 0..T with alpha_bar(0) == 1.
    double alpha_bar(int t) const {
        require<ConfigError>(t >= 0 && t <= timesteps_,
                             "schedule: alpha_bar index out of range");
        return t == 0 ? 1.0 : alpha_bars_[static_cast<std::size_t>(t - 1)];
    }

    // Posterior variance sigma_t^2 = (1 - abar_{t-1}) / (1 - abar_t) * beta_t.
    // Zero at t = 1 because abar_0 == 1.
    double posterior_variance(int t) const {
        check_step(t);
        return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t);
    }

  private:
    void check_step(int t) const {
        require<ConfigError>(t >= 1 && t <= timesteps_, "schedule: step out of range");
    }

    int timesteps_ = 0;
    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
};

}  // namespace csiaug::diffusion
