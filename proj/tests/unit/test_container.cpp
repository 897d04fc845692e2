// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "catch_amalgamated.hpp"
#include "csiaug/csi/container.hpp"
#include "csiaug/rng.hpp"

using namespace csiaug;
using namespace csiaug::csi;
namespace fs = std::filesystem;

namespace {

Dataset sample_dataset(int n, int k, int t, int num_classes, std::uint64_t seed) {
    Dataset d;
    d.num_classes = num_classes;
    d.manifest.carrier_mask = k == 256 ? CarrierMask::default_80mhz() : CarrierMask::all_usable(k);
    d.manifest.provenance = Provenance::Synthetic;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        CsiImage img;
        img.label = i % num_classes;
        img.carrier_mask = d.manifest.carrier_mask;
        img.channels = TensorF({kImageChannels, k, t});
        for (int c = 0; c < kImageChannels; ++c)
            for (int r = 0; r < k; ++r) {
                if (!img.carrier_mask.is_usable(r)) continue;
                for (int tt = 0; tt < t; ++tt)
                    img.channels.at(c, r, tt) = static_cast<float>(rng.uniform(-3.0, 3.0));
            }
        d.images.push_back(std::move(img));
    }
    return d;
}

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "csiaug_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("container round-trips bit-identically", "[container]") {
    Dataset d = sample_dataset(5, 32, 16, 3, 77);
    NormStats stats;
    stats.min = {-3.0, -3.0, -3.0, -3.0};
    stats.max = {3.0, 3.0, 3.0, 3.0};
    d.manifest.normalization = stats;
    d.manifest.extra["note"] = "round-trip";

    const auto path = temp_file("roundtrip.csit");
    write_container(path, d);
    const Dataset back = read_container(path);

    REQUIRE(back.images.size() == d.images.size());
    CHECK(back.num_classes == d.num_classes);
    CHECK(back.manifest.provenance == Provenance::Synthetic);
    CHECK(back.manifest.channel_roles == d.manifest.channel_roles);
    CHECK(back.manifest.carrier_mask == d.manifest.carrier_mask);
    REQUIRE(back.manifest.normalization.has_value());
    for (int c = 0; c < kImageChannels; ++c) {
        CHECK(back.manifest.normalization->min[static_cast<std::size_t>(c)] == -3.0);
        CHECK(back.manifest.normalization->max[static_cast<std::size_t>(c)] == 3.0);
    }
    CHECK(back.manifest.extra.at("note") == "round-trip");

    for (std::size_t i = 0; i < d.images.size(); ++i) {
        CHECK(back.images[i].label == d.images[i].label);
        REQUIRE(back.images[i].channels.same_shape(d.images[i].channels));
        // Bit-for-bit: float payload must survive unchanged.
        REQUIRE(std::memcmp(back.images[i].channels.data(), d.images[i].channels.data(),
                            d.images[i].channels.numel() * sizeof(float)) == 0);
        CHECK_NOTHROW(back.images[i].validate());
    }
}

TEST_CASE("container header layout is frozen", "[container]") {
    Dataset d = sample_dataset(2, 8, 4, 2, 5);
    const auto path = temp_file("layout.csit");
    write_container(path, d);

    std::ifstream is(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    // Header: magic, version, dtype, reserved, then five u32 fields.
    REQUIRE(bytes.size() == 28 + 2 * (2 + 4ull * 8 * 4 * 4));
    CHECK(bytes[0] == 'C');
    CHECK(bytes[1] == 'S');
    CHECK(bytes[2] == 'I');
    CHECK(bytes[3] == 'T');
    CHECK(bytes[4] == 1);  // version
    CHECK(bytes[5] == 0);  // dtype float32
    CHECK(bytes[6] == 0);  // reserved
    CHECK(bytes[7] == 0);

    auto u32_at = [&](std::size_t off) {
        return static_cast<std::uint32_t>(bytes[off]) |
               (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
               (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
               (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
    };
    CHECK(u32_at(8) == 2);    // n_samples
    CHECK(u32_at(12) == 4);   // channels
    CHECK(u32_at(16) == 8);   // carriers
    CHECK(u32_at(20) == 4);   // time slots
    CHECK(u32_at(24) == 2);   // classes

    // First record starts with the u16 label.
    CHECK(bytes[28] == 0);
    CHECK(bytes[29] == 0);
}

TEST_CASE("container rejects corrupted input", "[container]") {
    Dataset d = sample_dataset(1, 8, 4, 1, 9);
    const auto path = temp_file("corrupt.csit");
    write_container(path, d);

    // Flip the magic.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    CHECK_THROWS_AS(read_container(path), IoError);

    // Truncate mid-record.
    write_container(path, d);
    fs::resize_file(path, fs::file_size(path) - 7);
    CHECK_THROWS_AS(read_container(path), IoError);

    // Remove the manifest sidecar.
    write_container(path, d);
    fs::remove(manifest_path_for(path));
    CHECK_THROWS_AS(read_container(path), IoError);
}

TEST_CASE("labels outside num_classes fail validation", "[container]") {
    Dataset d = sample_dataset(3, 8, 4, 3, 1);
    d.images[1].label = 7;
    const auto path = temp_file("badlabel.csit");
    CHECK_THROWS_AS(write_container(path, d), ConfigError);
}

TEST_CASE("manifest sidecar sits next to the container", "[container]") {
    CHECK(manifest_path_for("/data/run1/train.csit") ==
          fs::path("/data/run1/train.manifest.json"));
}

TEST_CASE("per-sample provenance survives the round trip", "[container]") {
    Dataset d = sample_dataset(6, 8, 4, 3, 11);
    d.images[0].provenance = Provenance::Real;
    d.images[1].provenance = Provenance::Synthetic;
    d.images[2].provenance = Provenance::Generated;
    d.images[3].provenance = Provenance::Generated;
    d.images[4].provenance = Provenance::Synthetic;
    d.images[5].provenance = Provenance::Real;

    const auto path = temp_file("provenance.csit");
    write_container(path, d);
    const Dataset back = read_container(path);
    REQUIRE(back.images.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(back.images[i].provenance == d.images[i].provenance);

    // Manifests without the per-sample list fall back to the dataset value.
    nlohmann::json mj;
    {
        std::ifstream ms(manifest_path_for(path));
        ms >> mj;
    }
    mj.erase("sample_provenance");
    {
        std::ofstream ms(manifest_path_for(path));
        ms << mj.dump(2) << '\n';
    }
    const Dataset legacy = read_container(path);
    for (const auto& image : legacy.images)
        CHECK(image.provenance == legacy.manifest.provenance);
}
