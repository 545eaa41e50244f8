// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "glyphflow/image.hpp"

namespace glyphflow::png {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

/// Round-half-up quantization of [0, 1] to 8 bits.
inline png_byte quantize(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<png_byte>(std::floor(c * 255.0f + 0.5f));
}

inline void write_rows(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
                       std::vector<std::vector<png_byte>>& rows) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    GLYPHFLOW_CHECK(fp, ErrorKind::data_error, "png::write", "cannot open ", path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    GLYPHFLOW_CHECK(png && info, ErrorKind::data_error, "png::write", "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        GLYPHFLOW_THROW(ErrorKind::data_error, "png::write", "libpng error writing ", path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Fixed settings keep output bytes reproducible.
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    std::vector<png_bytep> ptrs;
    for (auto& r : rows) ptrs.push_back(r.data());
    png_write_image(png, ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Writes a 1- or 3-channel image as 8-bit gray/RGB.
inline void write_image(const std::filesystem::path& path, const ImageBuffer& image) {
    GLYPHFLOW_CHECK(image.channels() == 1 || image.channels() == 3, ErrorKind::invalid_argument, "png::write_image",
                    "only gray or RGB images can be saved, got ", image.channels(), " channels");
    const int c = image.channels();
    std::vector<std::vector<png_byte>> rows(image.height(), std::vector<png_byte>(image.width() * c));
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int k = 0; k < c; ++k) rows[y][x * c + k] = detail::quantize(image.at(y, x, k));
    detail::write_rows(path, image.width(), image.height(), c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, 8,
                       rows);
}

/// Writes a mask as a 1-bit grayscale PNG.
inline void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    const int w = mask.width();
    std::vector<std::vector<png_byte>> rows(mask.height(), std::vector<png_byte>((w + 7) / 8, 0));
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(y, x)) rows[y][x / 8] |= static_cast<png_byte>(0x80 >> (x % 8));
    detail::write_rows(path, w, mask.height(), PNG_COLOR_TYPE_GRAY, 1, rows);
}

/// Reads any PNG, normalized to 8-bit gray or RGB (alpha dropped, palettes expanded).
inline ImageBuffer read_image(const std::filesystem::path& path) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    GLYPHFLOW_CHECK(fp, ErrorKind::data_error, "png::read", "cannot open ", path.string());
    png_byte sig[8];
    GLYPHFLOW_CHECK(std::fread(sig, 1, 8, fp.get()) == 8 && !png_sig_cmp(sig, 0, 8), ErrorKind::data_error,
                    "png::read", "not a PNG: ", path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    GLYPHFLOW_CHECK(png && info, ErrorKind::data_error, "png::read", "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        GLYPHFLOW_THROW(ErrorKind::data_error, "png::read", "corrupt PNG: ", path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int c = png_get_channels(png, info);
    std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(png_get_rowbytes(png, info)));
    std::vector<png_bytep> ptrs;
    for (auto& r : rows) ptrs.push_back(r.data());
    png_read_image(png, ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    ImageBuffer out(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < c; ++k) out.at(y, x, k) = rows[y][x * c + k] / 255.0f;
    return out;
}

/// Reads a mask PNG; any nonzero gray level counts as inside.
inline BinaryMask read_mask(const std::filesystem::path& path) {
    const ImageBuffer img = to_gray(read_image(path));
    BinaryMask m(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) m.set(y, x, img.at(y, x) > 0.5f);
    return m;
}

}  // namespace glyphflow::png
