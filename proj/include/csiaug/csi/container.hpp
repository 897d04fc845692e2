// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "csiaug/csi/image.hpp"
#include "csiaug/csi/types.hpp"
#include "csiaug/io/bytes.hpp"

namespace csiaug::csi {

// .csit dataset container, little-endian:
//   magic "CSIT" | u8 version=1 | u8 dtype (0 = float32) | u16 reserved=0
//   u32 n_samples | u32 C | u32 K | u32 T | u32 num_classes
//   n_samples records of [u16 label, C*K*T float32, C-major K-major T-minor]
// A sidecar <stem>.manifest.json carries channel roles, the carrier mask,
// normalization stats and sample provenance.

inline constexpr char kContainerMagic[4] = {'C', 'S', 'I', 'T'};
inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

struct ContainerManifest {
    std::array<std::string, kImageChannels> channel_roles = {
        channel_role_name(ChannelRole::AmplitudeAntennaA),
        channel_role_name(ChannelRole::PhaseAntennaA),
        channel_role_name(ChannelRole::AmplitudeAntennaB),
        channel_role_name(ChannelRole::PhaseAntennaB),
    };
    CarrierMask carrier_mask;
    std::optional<NormStats> normalization;
    Provenance provenance = Provenance::Real;
    std::string tool_version = kToolVersion;
    nlohmann::json extra = nlohmann::json::object();
};

struct Dataset {
    std::vector<CsiImage> images;
    int num_classes = 0;
    ContainerManifest manifest;

    void validate() const {
        require<ConfigError>(num_classes >= 1, "Dataset: num_classes must be >= 1");
        for (const auto& image : images) {
            require<ConfigError>(image.label >= 0 && image.label < num_classes,
                                 "Dataset: label out of range");
            require<ShapeError>(image.carrier_mask == manifest.carrier_mask,
                                "Dataset: image mask differs from manifest mask");
        }
    }
};

inline std::filesystem::path manifest_path_for(const std::filesystem::path& container_path) {
    std::filesystem::path p = container_path;
    p.replace_extension(".manifest.json");
    return p;
}

inline nlohmann::json norm_stats_to_json(const NormStats& stats) {
    nlohmann::json j;
    j["min"] = stats.min;
    j["max"] = stats.max;
    return j;
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
    NormStats stats;
    for (int c = 0; c < kImageChannels; ++c) {
        stats.min[static_cast<std::size_t>(c)] = j.at("min").at(c).get<double>();
        stats.max[static_cast<std::size_t>(c)] = j.at("max").at(c).get<double>();
    }
    return stats;
}

inline nlohmann::json carrier_mask_to_json(const CarrierMask& mask) {
    nlohmann::json j;
    j["length"] = mask.size();
    j["usable_indices"] = mask.usable_indices();
    return j;
}

inline CarrierMask carrier_mask_from_json(const nlohmann::json& j) {
    const int length = j.at("length").get<int>();
    std::vector<bool> usable(static_cast<std::size_t>(length), false);
    for (const int k : j.at("usable_indices")) {
        const int row = k + length / 2;
        require<ConfigError>(row >= 0 && row < length, "carrier mask: index out of range");
        usable[static_cast<std::size_t>(row)] = true;
    }
    return CarrierMask(std::move(usable));
}

inline nlohmann::json manifest_to_json(const ContainerManifest& m) {
    nlohmann::json j;
    j["channel_roles"] = m.channel_roles;
    j["carrier_mask"] = carrier_mask_to_json(m.carrier_mask);
    j["normalization"] = m.normalization ? norm_stats_to_json(*m.normalization) : nlohmann::json();
    j["provenance"] = provenance_name(m.provenance);
    j["tool_version"] = m.tool_version;
    j["extra"] = m.extra;
    return j;
}

inline ContainerManifest manifest_from_json(const nlohmann::json& j) {
    ContainerManifest m;
    for (int c = 0; c < kImageChannels; ++c)
        m.channel_roles[static_cast<std::size_t>(c)] = j.at("channel_roles").at(c).get<std::string>();
    m.carrier_mask = carrier_mask_from_json(j.at("carrier_mask"));
    if (!j.at("normalization").is_null()) m.normalization = norm_stats_from_json(j.at("normalization"));
    m.provenance = provenance_from_name(j.at("provenance").get<std::string>());
    m.tool_version = j.value("tool_version", std::string(kToolVersion));
    m.extra = j.value("extra", nlohmann::json::object());
    return m;
}

inline void write_container(const std::filesystem::path& path, const Dataset& dataset) {
    dataset.validate();
    require<InvalidInputError>(!dataset.images.empty(), "write_container: empty dataset");
    const auto& first = dataset.images.front().channels;
    for (const auto& image : dataset.images)
        require<ShapeError>(image.channels.same_shape(first),
                            "write_container: images must share one shape");

    std::ofstream os(path, std::ios::binary);
    require<IoError>(os.good(), "write_container: cannot open " + path.string());

    io::write_bytes(os, {kContainerMagic, 4});
    io::write_u8(os, kContainerVersion);
    io::write_u8(os, kDtypeFloat32);
    io::write_u16(os, 0);
    io::write_u32(os, static_cast<std::uint32_t>(dataset.images.size()));
    io::write_u32(os, static_cast<std::uint32_t>(first.dim(0)));
    io::write_u32(os, static_cast<std::uint32_t>(first.dim(1)));
    io::write_u32(os, static_cast<std::uint32_t>(first.dim(2)));
    io::write_u32(os, static_cast<std::uint32_t>(dataset.num_classes));

    for (const auto& image : dataset.images) {
        require<ConfigError>(image.label <= 0xffff, "write_container: label exceeds u16");
        io::write_u16(os, static_cast<std::uint16_t>(image.label));
        io::write_f32_array(os, image.channels.flat());
    }
    require<IoError>(os.good(), "write_container: write failed for " + path.string());
    os.close();

    nlohmann::json mj = manifest_to_json(dataset.manifest);
    nlohmann::json per_sample = nlohmann::json::array();
    for (const auto& image : dataset.images) per_sample.push_back(provenance_name(image.provenance));
    mj["sample_provenance"] = std::move(per_sample);

    std::ofstream ms(manifest_path_for(path));
    require<IoError>(ms.good(), "write_container: cannot open manifest for " + path.string());
    ms << mj.dump(2) << '\n';
    require<IoError>(ms.good(), "write_container: manifest write failed");
}

inline Dataset read_container(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require<IoError>(is.good(), "read_container: cannot open " + path.string());

    const std::string magic = io::read_string(is, 4);
    require<IoError>(magic == std::string(kContainerMagic, 4),
                     "read_container: bad magic in " + path.string());
    const auto version = io::read_u8(is);
    require<IoError>(version == kContainerVersion, "read_container: unsupported version");
    const auto dtype = io::read_u8(is);
    require<IoError>(dtype == kDtypeFloat32, "read_container: unsupported dtype");
    const auto reserved = io::read_u16(is);
    require<IoError>(reserved == 0, "read_container: nonzero reserved field");

    const auto n_samples = io::read_u32(is);
    const auto c = io::read_u32(is);
    const auto k = io::read_u32(is);
    const auto t = io::read_u32(is);
    const auto num_classes = io::read_u32(is);
    require<IoError>(c == kImageChannels, "read_container: expected 4 channels");

    Dataset dataset;
    dataset.num_classes = static_cast<int>(num_classes);

    const auto manifest_file = manifest_path_for(path);
    std::ifstream ms(manifest_file);
    require<IoError>(ms.good(), "read_container: missing manifest " + manifest_file.string());
    nlohmann::json mj;
    ms >> mj;
    dataset.manifest = manifest_from_json(mj);
    require<ShapeError>(dataset.manifest.carrier_mask.size() == static_cast<int>(k),
                        "read_container: manifest mask length != K");

    dataset.images.resize(n_samples);
    for (auto& image : dataset.images) {
        image.label = io::read_u16(is);
        image.carrier_mask = dataset.manifest.carrier_mask;
        image.channels = TensorF({static_cast<int>(c), static_cast<int>(k), static_cast<int>(t)});
        io::read_f32_array(is, image.channels.flat());
    }

    // Per-sample provenance rides in the sidecar; the dataset-level value is
    // the default for older manifests.
    if (mj.contains("sample_provenance")) {
        const auto& per_sample = mj.at("sample_provenance");
        require<IoError>(per_sample.size() == dataset.images.size(),
                         "read_container: sample_provenance length mismatch");
        for (std::size_t i = 0; i < dataset.images.size(); ++i)
            dataset.images[i].provenance =
                provenance_from_name(per_sample.at(i).get<std::string>());
    } else {
        for (auto& image : dataset.images) image.provenance = dataset.manifest.provenance;
    }
    return dataset;
}

}  // namespace csiaug::csi
