// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <zlib.h>

#include "csiaug/common.hpp"

namespace csiaug::io {

// Row-major RGB8 raster.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t r = 255, std::uint8_t g = 255, std::uint8_t b = 255)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
        require<ConfigError>(w >= 1 && h >= 1, "RgbImage: empty raster");
        for (std::size_t i = 0; i + 2 < pixels.size() + 1; i += 3) {
            pixels[i] = r;
            pixels[i + 1] = g;
            pixels[i + 2] = b;
        }
    }

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        pixels[i] = r;
        pixels[i + 1] = g;
        pixels[i + 2] = b;
    }

    void fill_rect(int x0, int y0, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x) set(x, y, r, g, b);
    }
};

namespace detail {

inline void append_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::vector<std::uint8_t>& payload) {
    append_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = static_cast<std::uint32_t>(
        crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    append_u32_be(out, crc);
}

}  // namespace detail

// Encodes a PNG (8-bit RGB, no interlace): IHDR, one zlib IDAT of
// filter-0-prefixed scanlines, IEND.
inline std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    require<ConfigError>(image.width >= 1 && image.height >= 1, "encode_png: empty image");
    require<ShapeError>(image.pixels.size() ==
                            static_cast<std::size_t>(image.width) * image.height * 3,
                        "encode_png: pixel buffer size mismatch");

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

    std::vector<std::uint8_t> ihdr;
    detail::append_u32_be(ihdr, static_cast<std::uint32_t>(image.width));
    detail::append_u32_be(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace
    detail::append_chunk(out, "IHDR", ihdr);

    const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * static_cast<std::size_t>(image.height));
    for (int y = 0; y < image.height; ++y) {
        raw[static_cast<std::size_t>(y) * (stride + 1)] = 0;  // filter type 0
        std::memcpy(raw.data() + static_cast<std::size_t>(y) * (stride + 1) + 1,
                    image.pixels.data() + static_cast<std::size_t>(y) * stride, stride);
    }

    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(compressed_size);
    const int rc = compress2(compressed.data(), &compressed_size, raw.data(),
                             static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION);
    require<IoError>(rc == Z_OK, "encode_png: zlib compression failed");
    compressed.resize(compressed_size);
    detail::append_chunk(out, "IDAT", compressed);

    detail::append_chunk(out, "IEND", {});
    return out;
}

inline void write_png(const std::filesystem::path& path, const RgbImage& image) {
    const std::vector<std::uint8_t> bytes = encode_png(image);
    std::ofstream os(path, std::ios::binary);
    require<IoError>(os.good(), "write_png: cannot open " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    require<IoError>(os.good(), "write_png: write failed for " + path.string());
}

// 5x7 bitmap glyphs for digits, uppercase letters, and a few separators —
// enough to label axes and cells on emitted plots.
inline void draw_text(RgbImage& image, int x, int y, const std::string& text, std::uint8_t r,
                      std::uint8_t g, std::uint8_t b) {
    static const char* glyphs[] = {
        // 0-9
        "01110100011001110101110011000101110", "00100011000010000100001000010001110",
        "01110100010000100110010001000111111", "01110100010000100110000011000101110",
        "00011001010100110001111110000100001", "11111100001111000001000011000101110",
        "01110100011000011110100011000101110", "11111000010001000100010001000010000",
        "01110100011000101110100011000101110", "01110100011000101111000011000101110",
        // A-Z
        "01110100011000111111100011000110001", "11110100011000111110100011000111110",
        "01110100011000010000100001000101110", "11110100011000110001100011000111110",
        "11111100001000011110100001000011111", "11111100001000011110100001000010000",
        "01110100011000010111100011000101111", "10001100011000111111100011000110001",
        "01110001000010000100001000010001110", "00111000100001000010000101001001100",
        "10001100101010011000101001001010001", "10000100001000010000100001000011111",
        "10001110111010110101100011000110001", "10001110011010110011100011000110001",
        "01110100011000110001100011000101110", "11110100011000111110100001000010000",
        "01110100011000110001101011001001101", "11110100011000111110101001001010001",
        "01111100000100000111000001000011110", "11111001000010000100001000010000100",
        "10001100011000110001100011000101110", "10001100011000110001010100101000100",
        "10001100011000110101101011101110001", "10001100010101000100010101000110001",
        "10001100010101000100001000010000100", "11111000010001000100010001000011111",
    };
    int cx = x;
    for (char ch : text) {
        const char* glyph = nullptr;
        if (ch >= '0' && ch <= '9') glyph = glyphs[ch - '0'];
        else if (ch >= 'A' && ch <= 'Z') glyph = glyphs[10 + ch - 'A'];
        else if (ch >= 'a' && ch <= 'z') glyph = glyphs[10 + ch - 'a'];
        if (glyph != nullptr) {
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (glyph[row * 5 + col] == '1') image.set(cx + col, y + row, r, g, b);
        } else if (ch == '.') {
            image.set(cx + 1, y + 6, r, g, b);
        } else if (ch == '-') {
            for (int col = 0; col < 3; ++col) image.set(cx + col + 1, y + 3, r, g, b);
        } else if (ch == '%') {
            image.set(cx, y + 1, r, g, b);
            image.set(cx + 4, y + 5, r, g, b);
            for (int d = 0; d < 5; ++d) image.set(cx + 4 - d, y + 1 + d, r, g, b);
        }
        cx += 6;  // 5-wide glyph + 1 gap (space falls through)
    }
}

}  // namespace csiaug::io
