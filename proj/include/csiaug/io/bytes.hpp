// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "csiaug/common.hpp"

namespace csiaug::io {

// Explicit little-endian scalar I/O so on-disk formats are host-independent.

inline void write_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

inline void write_u16(std::ostream& os, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    os.write(b, 2);
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

inline void write_f32_array(std::ostream& os, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * 4));
    } else {
        for (float v : values) write_f32(os, v);
    }
}

inline void write_bytes(std::ostream& os, std::span<const char> bytes) {
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::uint8_t read_u8(std::istream& is) {
    const int c = is.get();
    require<IoError>(c != std::istream::traits_type::eof(), "unexpected end of file");
    return static_cast<std::uint8_t>(c);
}

inline std::uint16_t read_u16(std::istream& is) {
    char b[2];
    is.read(b, 2);
    require<IoError>(is.gcount() == 2, "unexpected end of file");
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[0])) |
           (static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[1])) << 8);
}

inline std::uint32_t read_u32(std::istream& is) {
    char b[4];
    is.read(b, 4);
    require<IoError>(is.gcount() == 4, "unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    char b[8];
    is.read(b, 8);
    require<IoError>(is.gcount() == 8, "unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    return v;
}

inline float read_f32(std::istream& is) {
    const std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void read_f32_array(std::istream& is, std::span<float> out) {
    // Bulk read then fix endianness in place (no-op on little-endian hosts).
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * 4));
    require<IoError>(is.gcount() == static_cast<std::streamsize>(out.size() * 4),
                     "unexpected end of file");
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : out) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            bits = __builtin_bswap32(bits);
            std::memcpy(&v, &bits, 4);
        }
    }
}

inline std::string read_string(std::istream& is, std::size_t len) {
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    require<IoError>(is.gcount() == static_cast<std::streamsize>(len), "unexpected end of file");
    return s;
}

}  // namespace csiaug::io
