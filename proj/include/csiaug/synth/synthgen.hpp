// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "csiaug/csi/container.hpp"
#include "csiaug/csi/image.hpp"
#include "csiaug/csi/sanitize.hpp"
#include "csiaug/csi/types.hpp"
#include "csiaug/rng.hpp"

namespace csiaug::synth {

using csi::CarrierMask;
using csi::CsiFrame;
using csi::CsiImage;
using csi::Dataset;
using csi::PhaseFit;

// Synthetic CSI generator with retained ground truth. Each sample is a smooth
// class-conditioned frequency response, modulated over time by a class-rate
// sinusoid plus a bounded random walk, corrupted per frame by a planted linear
// phase error and optional complex Gaussian noise.
//
// The clean per-frame motion phase is projected so that its value at the first
// and last usable carrier coincide and its mean over usable carriers is zero.
// In that null space the endpoint-slope / mean-intercept fit recovers the
// planted (slope, offset) exactly and the corrected phase equals the retained
// residual. The planted offset is only identifiable modulo 2*pi, so defaults
// keep |slope * k_first| + |offset| + |residual| safely below pi; generation
// asserts that bound and fails loudly instead of emitting ambiguous samples.
struct SynthProfile {
    int num_classes = 6;
    double base_response_smoothness = 8.0;  // frequency-domain correlation length, carriers
    std::vector<double> doppler_rate_hz;         // per class; defaulted when empty
    std::vector<double> perturbation_amplitude;  // per class; defaulted when empty
    double noise_std = 0.0;                      // per-component std of the additive noise
    double phase_slope_range = 0.008;            // planted slope ~ U(-r, r), radians/carrier
    double phase_offset_range = 0.5;             // planted offset ~ U(-r, r), radians
    std::uint64_t seed = 0;

    // Plumbing knobs so the same generator also runs at desk scale.
    int carriers = 256;
    int time_slots = 256;
    int antennas = 4;
    double packet_interval_s = 0.01;
    int antenna_a = 0;
    int antenna_b = 3;

    CarrierMask mask() const {
        return carriers == 256 ? CarrierMask::default_80mhz() : CarrierMask::all_usable(carriers);
    }

    double doppler_for(int cls) const {
        if (!doppler_rate_hz.empty())
            return doppler_rate_hz[static_cast<std::size_t>(cls) % doppler_rate_hz.size()];
        return 4.0 + 5.0 * cls;
    }

    double perturbation_for(int cls) const {
        if (!perturbation_amplitude.empty())
            return perturbation_amplitude[static_cast<std::size_t>(cls) %
                                          perturbation_amplitude.size()];
        return 0.55 + 0.1 * cls;
    }

    void validate() const {
        require<ConfigError>(num_classes >= 2, "SynthProfile: num_classes must be >= 2");
        require<ConfigError>(noise_std >= 0.0 && std::isfinite(noise_std),
                             "SynthProfile: noise_std must be finite and >= 0");
        require<ConfigError>(std::isfinite(phase_slope_range) && phase_slope_range >= 0.0,
                             "SynthProfile: phase_slope_range must be finite and >= 0");
        require<ConfigError>(std::isfinite(phase_offset_range) && phase_offset_range >= 0.0,
                             "SynthProfile: phase_offset_range must be finite and >= 0");
        require<ConfigError>(base_response_smoothness > 0.0,
                             "SynthProfile: smoothness must be positive");
        require<ConfigError>(carriers >= 8 && time_slots >= 2, "SynthProfile: size too small");
        require<ConfigError>(antennas >= 1 && antenna_a >= 0 && antenna_b >= 0 &&
                                 antenna_a < antennas && antenna_b < antennas,
                             "SynthProfile: antenna pair out of range");
        require<ConfigError>(packet_interval_s > 0.0, "SynthProfile: packet interval must be > 0");
        for (double d : doppler_rate_hz)
            require<ConfigError>(std::isfinite(d), "SynthProfile: non-finite doppler rate");
        for (double p : perturbation_amplitude)
            require<ConfigError>(std::isfinite(p) && p >= 0.0,
                                 "SynthProfile: perturbation must be finite and >= 0");
    }

    // 6-class 32x32 profile used by the desk-scale benchmark.
    static SynthProfile desk_profile(std::uint64_t seed, int num_classes = 6) {
        SynthProfile p;
        p.num_classes = num_classes;
        p.seed = seed;
        p.carriers = 32;
        p.time_slots = 32;
        p.antennas = 2;
        p.antenna_a = 0;
        p.antenna_b = 1;
        p.base_response_smoothness = 4.0;
        p.noise_std = 0.05;
        return p;
    }
};

// One generated sample: frames (fed through csi_core to make the image), the
// directly constructed ground truth, and the planted per-frame error.
struct SynthSample {
    std::vector<CsiFrame> frames;
    CsiImage image;         // built via the csi_core sanitization path
    CsiImage ground_truth;  // (clean_phase_A, clean_phase_B, planted_slope, planted_offset)
    std::vector<PhaseFit> planted;
};

struct SynthResult {
    Dataset data;          // provenance = synthetic
    Dataset ground_truth;  // clean residual + planted error per frame
    std::vector<std::vector<PhaseFit>> planted;  // [sample][frame]
};

namespace detail {

struct PathSet {
    std::vector<double> delays;              // "delay" in carrier-frequency cycles
    std::vector<std::complex<double>> gains; // per path
};

// Smooth weighting function over the usable carriers, max |w| normalized to 1.
inline std::vector<double> smooth_weights(Rng& rng, const std::vector<int>& usable_k, int k_bins,
                                          double smoothness) {
    const double tau_max = std::max(0.5, static_cast<double>(k_bins) / (2.0 * M_PI * smoothness));
    std::vector<double> w(usable_k.size(), 0.0);
    double peak = 0.0;
    const int terms = 3;
    for (int p = 0; p < terms; ++p) {
        const double amp = rng.uniform(0.4, 1.0);
        const double tau = rng.uniform(0.3, tau_max);
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (std::size_t j = 0; j < usable_k.size(); ++j) {
            w[j] += amp * std::cos(2.0 * M_PI * tau * usable_k[j] / k_bins + phase);
        }
    }
    for (double v : w) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : w) v /= peak;
    return w;
}

// Multipath frequency response: a line-of-sight term plus a few delayed paths.
inline std::vector<std::complex<double>> base_response(const PathSet& paths,
                                                       const std::vector<int>& usable_k,
                                                       int k_bins) {
    std::vector<std::complex<double>> h(usable_k.size());
    for (std::size_t j = 0; j < usable_k.size(); ++j) {
        std::complex<double> acc(1.2, 0.0);  // LOS keeps |h| away from zero
        for (std::size_t p = 0; p < paths.delays.size(); ++p) {
            const double arg = -2.0 * M_PI * paths.delays[p] * usable_k[j] / k_bins;
            acc += paths.gains[p] * std::exp(std::complex<double>(0.0, arg));
        }
        h[j] = acc;
    }
    return h;
}

}  // namespace detail

// Deterministic generation of one sample. `sample_index` is the global sample
// number; its stream is derived with the documented splitmix-style mix, so
// samples are independent and generation parallelizes per sample.
inline SynthSample synth_sample(const SynthProfile& profile, int class_id, int sample_index) {
    profile.validate();
    require<ConfigError>(class_id >= 0 && class_id < profile.num_classes,
                         "synth_sample: class out of range");

    const CarrierMask mask = profile.mask();
    const std::vector<int> usable_k = mask.usable_indices();
    const int k_bins = mask.size();
    const int t_slots = profile.time_slots;
    const std::size_t n_usable = usable_k.size();

    // Class anchors are drawn from a class-seeded stream so every sample of a
    // class shares them; per-sample variation comes from the sample stream.
    Rng class_rng(mix_seed(profile.seed ^ 0x5eedc1a5c0ffee11ULL,
                           static_cast<std::uint64_t>(class_id)));
    Rng rng(mix_seed(profile.seed, static_cast<std::uint64_t>(sample_index)));

    const double doppler = profile.doppler_for(class_id);
    const double perturb = profile.perturbation_for(class_id);
    const double amp_scale = 1.0 + 0.06 * class_id;

    // Per-antenna class anchor paths.
    const int n_paths = 4;
    std::vector<detail::PathSet> class_paths(static_cast<std::size_t>(profile.antennas));
    std::vector<std::vector<double>> w_sine(static_cast<std::size_t>(profile.antennas));
    std::vector<std::vector<double>> w_walk(static_cast<std::size_t>(profile.antennas));
    const double tau_max =
        std::max(0.5, static_cast<double>(k_bins) / (2.0 * M_PI * profile.base_response_smoothness));
    for (int a = 0; a < profile.antennas; ++a) {
        detail::PathSet& ps = class_paths[static_cast<std::size_t>(a)];
        ps.delays.resize(n_paths);
        ps.gains.resize(n_paths);
        for (int p = 0; p < n_paths; ++p) {
            ps.delays[static_cast<std::size_t>(p)] = class_rng.uniform(0.2, tau_max);
            const double mag = class_rng.uniform(0.15, 0.45);
            const double ph = class_rng.uniform(0.0, 2.0 * M_PI);
            ps.gains[static_cast<std::size_t>(p)] = std::polar(mag, ph);
        }
        w_sine[static_cast<std::size_t>(a)] =
            detail::smooth_weights(class_rng, usable_k, k_bins, profile.base_response_smoothness);
        w_walk[static_cast<std::size_t>(a)] =
            detail::smooth_weights(class_rng, usable_k, k_bins, profile.base_response_smoothness);
    }

    // Per-sample jitter: nudge path gains, draw modulation phases.
    std::vector<detail::PathSet> paths = class_paths;
    for (int a = 0; a < profile.antennas; ++a) {
        for (int p = 0; p < n_paths; ++p) {
            const double dmag = rng.normal(0.0, 0.03);
            const double dph = rng.normal(0.0, 0.25);
            auto& g = paths[static_cast<std::size_t>(a)].gains[static_cast<std::size_t>(p)];
            g = std::polar(std::max(0.02, std::abs(g) + dmag), std::arg(g) + dph);
        }
    }
    std::vector<double> amp_phase(static_cast<std::size_t>(profile.antennas));
    std::vector<double> motion_phase(static_cast<std::size_t>(profile.antennas));
    for (int a = 0; a < profile.antennas; ++a) {
        amp_phase[static_cast<std::size_t>(a)] = rng.uniform(0.0, 2.0 * M_PI);
        motion_phase[static_cast<std::size_t>(a)] = rng.uniform(0.0, 2.0 * M_PI);
    }

    std::vector<std::vector<std::complex<double>>> h0(static_cast<std::size_t>(profile.antennas));
    for (int a = 0; a < profile.antennas; ++a)
        h0[static_cast<std::size_t>(a)] =
            detail::base_response(paths[static_cast<std::size_t>(a)], usable_k, k_bins);

    SynthSample sample;
    sample.frames.resize(static_cast<std::size_t>(t_slots));
    sample.planted.resize(static_cast<std::size_t>(t_slots));
    sample.ground_truth.label = class_id;
    sample.ground_truth.carrier_mask = mask;
    sample.ground_truth.channels = TensorF({csi::kImageChannels, k_bins, t_slots});

    const std::array<int, 2> pair = {profile.antenna_a, profile.antenna_b};

    double walk = 0.0;
    std::vector<double> psi(n_usable);
    for (int t = 0; t < t_slots; ++t) {
        CsiFrame& frame = sample.frames[static_cast<std::size_t>(t)];
        frame.timestamp = t * profile.packet_interval_s;
        frame.antenna_count = profile.antennas;
        frame.subcarrier_indices = usable_k;
        frame.values.assign(static_cast<std::size_t>(profile.antennas) * n_usable, {0.0, 0.0});

        const double slope = rng.uniform(-profile.phase_slope_range, profile.phase_slope_range);
        const double offset = rng.uniform(-profile.phase_offset_range, profile.phase_offset_range);
        sample.planted[static_cast<std::size_t>(t)] = PhaseFit{slope, offset};

        walk += rng.normal(0.0, 0.08);
        walk = std::clamp(walk, -1.5, 1.5);
        const double time_s = t * profile.packet_interval_s;

        for (int a = 0; a < profile.antennas; ++a) {
            const double sine =
                std::sin(2.0 * M_PI * doppler * time_s + motion_phase[static_cast<std::size_t>(a)]);
            const double amp_mod =
                1.0 + 0.5 * std::min(perturb, 1.2) *
                          std::sin(2.0 * M_PI * doppler * time_s +
                                   amp_phase[static_cast<std::size_t>(a)]);

            // Raw motion phase, then projection into the fit-null space:
            // equal endpoints, zero mean over usable carriers.
            for (std::size_t j = 0; j < n_usable; ++j) {
                psi[j] = 0.5 * perturb *
                         (sine * w_sine[static_cast<std::size_t>(a)][j] +
                          0.5 * walk * w_walk[static_cast<std::size_t>(a)][j]);
            }
            const double line_slope =
                (psi.back() - psi.front()) / static_cast<double>(usable_k.back() - usable_k.front());
            double mean_r0 = 0.0;
            for (std::size_t j = 0; j < n_usable; ++j)
                mean_r0 += psi[j] - line_slope * (usable_k[j] - usable_k.front()) - psi.front();
            mean_r0 /= static_cast<double>(n_usable);

            const bool in_pair = (a == pair[0] || a == pair[1]);
            const int gt_channel = (a == pair[0]) ? 0 : 1;
            for (std::size_t j = 0; j < n_usable; ++j) {
                const double residual = psi[j] - line_slope * (usable_k[j] - usable_k.front()) -
                                        psi.front() - mean_r0;
                const double clean_phase = residual;
                const double corrupted = clean_phase + slope * usable_k[j] + offset;
                if (j == 0) {
                    require<GenerationError>(
                        std::abs(corrupted) < M_PI - 0.05,
                        "synth_sample: first-carrier phase too close to the wrap boundary; "
                        "reduce phase_slope_range/phase_offset_range or perturbation");
                }
                const double amp = amp_scale * std::abs(h0[static_cast<std::size_t>(a)][j]) * amp_mod;
                frame.value(a, static_cast<int>(j)) = std::polar(amp, corrupted);
                if (in_pair) {
                    const int row = mask.row_of_index(usable_k[j]);
                    sample.ground_truth.channels.at(gt_channel, row, t) =
                        static_cast<float>(clean_phase);
                    sample.ground_truth.channels.at(2, row, t) = static_cast<float>(slope);
                    sample.ground_truth.channels.at(3, row, t) = static_cast<float>(offset);
                }
            }
        }

        if (profile.noise_std > 0.0) {
            for (auto& v : frame.values) {
                v += std::complex<double>(rng.normal(0.0, profile.noise_std),
                                          rng.normal(0.0, profile.noise_std));
            }
        }
    }

    sample.image = csi::detail::build_csi_image_sized(sample.frames,
                                                      {profile.antenna_a, profile.antenna_b}, mask);
    sample.image.label = class_id;
    sample.image.provenance = csi::Provenance::Synthetic;
    sample.ground_truth.provenance = csi::Provenance::Synthetic;
    return sample;
}

// Full dataset: samples_per_class per class, labels 0..num_classes-1.
// Deterministic under (profile, seed); bit-identical across runs.
inline SynthResult synth_dataset(const SynthProfile& profile, int samples_per_class) {
    profile.validate();
    require<ConfigError>(samples_per_class >= 1, "synth_dataset: samples_per_class must be >= 1");

    SynthResult result;
    result.data.num_classes = profile.num_classes;
    result.data.manifest.carrier_mask = profile.mask();
    result.data.manifest.provenance = csi::Provenance::Synthetic;
    result.data.manifest.extra["synth"] = {
        {"seed", profile.seed},
        {"samples_per_class", samples_per_class},
        {"noise_std", profile.noise_std},
    };

    result.ground_truth.num_classes = profile.num_classes;
    result.ground_truth.manifest.carrier_mask = profile.mask();
    result.ground_truth.manifest.provenance = csi::Provenance::Synthetic;
    result.ground_truth.manifest.channel_roles = {"clean_phase_A", "clean_phase_B", "planted_slope",
                                                  "planted_offset"};

    for (int cls = 0; cls < profile.num_classes; ++cls) {
        for (int s = 0; s < samples_per_class; ++s) {
            const int index = cls * samples_per_class + s;
            SynthSample sample = synth_sample(profile, cls, index);
            result.data.images.push_back(std::move(sample.image));
            result.ground_truth.images.push_back(std::move(sample.ground_truth));
            result.planted.push_back(std::move(sample.planted));
        }
    }
    return result;
}

}  // namespace csiaug::synth
