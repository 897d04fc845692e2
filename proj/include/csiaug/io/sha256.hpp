// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include "csiaug/common.hpp"

namespace csiaug::io {

// FIPS 180-4 SHA-256, used to fingerprint configs and artifacts in run
// manifests. Streaming interface: update() any number of times, then hex().
class Sha256 {
  public:
    Sha256() { reset(); }

    void reset() {
        state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                  0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        buffered_ = 0;
        total_ = 0;
    }

    void update(std::span<const std::byte> data) {
        total_ += data.size();
        while (!data.empty()) {
            const std::size_t take = std::min(data.size(), block_.size() - buffered_);
            std::memcpy(block_.data() + buffered_, data.data(), take);
            buffered_ += take;
            data = data.subspan(take);
            if (buffered_ == block_.size()) {
                compress(block_.data());
                buffered_ = 0;
            }
        }
    }

    void update(std::string_view text) {
        update({reinterpret_cast<const std::byte*>(text.data()), text.size()});
    }

    std::array<std::uint8_t, 32> digest() {
        Sha256 copy = *this;
        const std::uint64_t bit_length = copy.total_ * 8;
        const std::byte pad{0x80};
        copy.update({&pad, 1});
        const std::byte zero{0};
        while (copy.buffered_ != 56) copy.update({&zero, 1});
        std::array<std::byte, 8> length_bytes;
        for (int i = 0; i < 8; ++i)
            length_bytes[static_cast<std::size_t>(i)] =
                static_cast<std::byte>((bit_length >> (56 - 8 * i)) & 0xff);
        copy.update(length_bytes);

        std::array<std::uint8_t, 32> out;
        for (int i = 0; i < 8; ++i) {
            const std::uint32_t w = copy.state_[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(4 * i)] = static_cast<std::uint8_t>(w >> 24);
            out[static_cast<std::size_t>(4 * i + 1)] = static_cast<std::uint8_t>(w >> 16);
            out[static_cast<std::size_t>(4 * i + 2)] = static_cast<std::uint8_t>(w >> 8);
            out[static_cast<std::size_t>(4 * i + 3)] = static_cast<std::uint8_t>(w);
        }
        return out;
    }

    std::string hex() {
        static constexpr char digits[] = "0123456789abcdef";
        std::string s;
        s.reserve(64);
        for (const std::uint8_t b : digest()) {
            s.push_back(digits[b >> 4]);
            s.push_back(digits[b & 0xf]);
        }
        return s;
    }

  private:
    void compress(const std::byte* chunk) {
        static constexpr std::array<std::uint32_t, 64> k = {
            0x428a2f98u, 0x71374491u, 0xb5c0fbcfu, 0xe9b5dba5u, 0x3956c25bu, 0x59f111f1u,
            0x923f82a4u, 0xab1c5ed5u, 0xd807aa98u, 0x12835b01u, 0x243185beu, 0x550c7dc3u,
            0x72be5d74u, 0x80deb1feu, 0x9bdc06a7u, 0xc19bf174u, 0xe49b69c1u, 0xefbe4786u,
            0x0fc19dc6u, 0x240ca1ccu, 0x2de92c6fu, 0x4a7484aau, 0x5cb0a9dcu, 0x76f988dau,
            0x983e5152u, 0xa831c66du, 0xb00327c8u, 0xbf597fc7u, 0xc6e00bf3u, 0xd5a79147u,
            0x06ca6351u, 0x14292967u, 0x27b70a85u, 0x2e1b2138u, 0x4d2c6dfcu, 0x53380d13u,
            0x650a7354u, 0x766a0abbu, 0x81c2c92eu, 0x92722c85u, 0xa2bfe8a1u, 0xa81a664bu,
            0xc24b8b70u, 0xc76c51a3u, 0xd192e819u, 0xd6990624u, 0xf40e3585u, 0x106aa070u,
            0x19a4c116u, 0x1e376c08u, 0x2748774cu, 0x34b0bcb5u, 0x391c0cb3u, 0x4ed8aa4au,
            0x5b9cca4fu, 0x682e6ff3u, 0x748f82eeu, 0x78a5636fu, 0x84c87814u, 0x8cc70208u,
            0x90befffau, 0xa4506cebu, 0xbef9a3f7u, 0xc67178f2u};

        std::array<std::uint32_t, 64> w;
        for (int i = 0; i < 16; ++i)
            w[static_cast<std::size_t>(i)] =
                (std::to_integer<std::uint32_t>(chunk[4 * i]) << 24) |
                (std::to_integer<std::uint32_t>(chunk[4 * i + 1]) << 16) |
                (std::to_integer<std::uint32_t>(chunk[4 * i + 2]) << 8) |
                std::to_integer<std::uint32_t>(chunk[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t w15 = w[static_cast<std::size_t>(i - 15)];
            const std::uint32_t w2 = w[static_cast<std::size_t>(i - 2)];
            const std::uint32_t s0 =
                std::rotr(w15, 7) ^ std::rotr(w15, 18) ^ (w15 >> 3);
            const std::uint32_t s1 =
                std::rotr(w2, 17) ^ std::rotr(w2, 19) ^ (w2 >> 10);
            w[static_cast<std::size_t>(i)] =
                w[static_cast<std::size_t>(i - 16)] + s0 + w[static_cast<std::size_t>(i - 7)] + s1;
        }

        auto [a, b, c, d, e, f, g, h] =
            std::tuple{state_[0], state_[1], state_[2], state_[3],
                       state_[4], state_[5], state_[6], state_[7]};
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = std::rotr(e, 6) ^ std::rotr(e, 11) ^ std::rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t temp1 =
                h + s1 + ch + k[static_cast<std::size_t>(i)] + w[static_cast<std::size_t>(i)];
            const std::uint32_t s0 = std::rotr(a, 2) ^ std::rotr(a, 13) ^ std::rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t temp2 = s0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + temp1;
            d = c;
            c = b;
            b = a;
            a = temp1 + temp2;
        }
        state_[0] += a;
        state_[1] += b;
        state_[2] += c;
        state_[3] += d;
        state_[4] += e;
        state_[5] += f;
        state_[6] += g;
        state_[7] += h;
    }

    std::array<std::uint32_t, 8> state_;
    std::array<std::byte, 64> block_;
    std::size_t buffered_ = 0;
    std::uint64_t total_ = 0;
};

inline std::string sha256_hex(std::string_view text) {
    Sha256 h;
    h.update(text);
    return h.hex();
}

inline std::string sha256_file_hex(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require<IoError>(is.good(), "sha256: cannot open " + path.string());
    Sha256 h;
    std::array<char, 65536> buf;
    while (is) {
        is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(is.gcount());
        h.update({reinterpret_cast<const std::byte*>(buf.data()), got});
    }
    return h.hex();
}

}  // namespace csiaug::io
