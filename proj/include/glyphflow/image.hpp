// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "glyphflow/error.hpp"
#include "glyphflow/tensor.hpp"

namespace glyphflow {

/// Axis-aligned pixel rectangle; x0/y0 inclusive, x1/y1 exclusive.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    bool operator==(const Rect&) const = default;
};

/// H x W x C float image, row-major HWC, values in [0, 1].
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int height, int width, int channels, float fill = 0.0f)
        : height_(height), width_(width), channels_(channels) {
        GLYPHFLOW_CHECK(height > 0 && width > 0 && channels > 0, ErrorKind::invalid_argument, "ImageBuffer",
                        "bad dimensions ", height, "x", width, "x", channels);
        data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
    }
    ImageBuffer(int height, int width, int channels, std::vector<float> data)
        : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
        GLYPHFLOW_CHECK(data_.size() == static_cast<std::size_t>(height) * width * channels,
                        ErrorKind::shape_mismatch, "ImageBuffer", "data length mismatch");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    float at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
    float& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    bool same_size(const ImageBuffer& o) const { return height_ == o.height_ && width_ == o.width_; }

    Rect bounds() const { return {0, 0, width_, height_}; }

    bool operator==(const ImageBuffer&) const = default;

    Tensor<float> to_tensor() const {
        return Tensor<float>(Shape{static_cast<std::size_t>(height_), static_cast<std::size_t>(width_),
                                   static_cast<std::size_t>(channels_)},
                             data_);
    }

    static ImageBuffer from_tensor(const Tensor<float>& t) {
        GLYPHFLOW_CHECK(t.rank() == 3, ErrorKind::shape_mismatch, "ImageBuffer::from_tensor",
                        "expected HxWxC, got ", shape_str(t.shape()));
        return ImageBuffer(static_cast<int>(t.dim(0)), static_cast<int>(t.dim(1)), static_cast<int>(t.dim(2)),
                           t.vec());
    }

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// H x W mask with values exactly 0 or 1.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width, std::uint8_t fill = 0) : height_(height), width_(width) {
        GLYPHFLOW_CHECK(height > 0 && width > 0, ErrorKind::invalid_argument, "BinaryMask", "bad dimensions");
        data_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::uint8_t at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int y, int x, bool on) { data_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0; }
    std::span<const std::uint8_t> data() const { return data_; }

    std::size_t count() const { return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1)); }

    BinaryMask inverted() const {
        BinaryMask out = *this;
        for (auto& v : out.data_) v = 1 - v;
        return out;
    }

    /// Square (Chebyshev) dilation by `radius` pixels.
    BinaryMask dilated(int radius) const {
        BinaryMask out(height_, width_);
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x) {
                if (!at(y, x)) continue;
                for (int yy = std::max(0, y - radius); yy <= std::min(height_ - 1, y + radius); ++yy)
                    for (int xx = std::max(0, x - radius); xx <= std::min(width_ - 1, x + radius); ++xx)
                        out.set(yy, xx, true);
            }
        return out;
    }

    static BinaryMask from_rect(int height, int width, const Rect& r) {
        BinaryMask m(height, width);
        for (int y = r.y0; y < r.y1; ++y)
            for (int x = r.x0; x < r.x1; ++x) m.set(y, x, true);
        return m;
    }

    /// Single-channel float plane (0.0 / 1.0).
    ImageBuffer to_image() const {
        ImageBuffer img(height_, width_, 1);
        for (std::size_t i = 0; i < data_.size(); ++i) img.data()[i] = data_[i];
        return img;
    }

    bool operator==(const BinaryMask&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> data_;
};

namespace detail {

inline void require_same_size(const char* op, int h0, int w0, int h1, int w1) {
    GLYPHFLOW_CHECK(h0 == h1 && w0 == w1, ErrorKind::shape_mismatch, op, "size ", h0, "x", w0, " vs ", h1, "x",
                    w1);
}

}  // namespace detail

/// Masked image: I * (1 - M) per channel.
inline ImageBuffer apply_mask(const ImageBuffer& image, const BinaryMask& mask) {
    detail::require_same_size("apply_mask", image.height(), image.width(), mask.height(), mask.width());
    ImageBuffer out = image;
    const int c = image.channels();
    auto d = out.data();
    auto m = mask.data();
    for (std::size_t p = 0; p < m.size(); ++p) {
        const float keep = 1.0f - static_cast<float>(m[p]);
        for (int k = 0; k < c; ++k) d[p * c + k] *= keep;
    }
    return out;
}

/// Tightest rectangle around the nonzero pixels of `mask`.
inline Rect mask_bbox(const BinaryMask& mask) {
    Rect r{mask.width(), mask.height(), -1, -1};
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(y, x)) continue;
            r.x0 = std::min(r.x0, x);
            r.y0 = std::min(r.y0, y);
            r.x1 = std::max(r.x1, x + 1);
            r.y1 = std::max(r.y1, y + 1);
        }
    GLYPHFLOW_CHECK(r.x1 > 0, ErrorKind::invalid_argument, "mask_bbox", "empty mask: an edit region is required");
    return r;
}

inline ImageBuffer crop(const ImageBuffer& image, const Rect& r) {
    GLYPHFLOW_CHECK(r.x0 >= 0 && r.y0 >= 0 && r.x0 < r.x1 && r.y0 < r.y1 && r.x1 <= image.width() &&
                        r.y1 <= image.height(),
                    ErrorKind::invalid_argument, "crop", "rect (", r.x0, ",", r.y0, ",", r.x1, ",", r.y1,
                    ") outside ", image.width(), "x", image.height());
    const int c = image.channels();
    ImageBuffer out(r.height(), r.width(), c);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            for (int k = 0; k < c; ++k) out.at(y, x, k) = image.at(r.y0 + y, r.x0 + x, k);
    return out;
}

/// Bilinear resize with corner-aligned sampling (output corners land on input corners).
inline ImageBuffer resize_bilinear(const ImageBuffer& image, int height, int width) {
    const int c = image.channels();
    ImageBuffer out(height, width, c);
    const double sy = height > 1 ? static_cast<double>(image.height() - 1) / (height - 1) : 0.0;
    const double sx = width > 1 ? static_cast<double>(image.width() - 1) / (width - 1) : 0.0;
    const double cy = height > 1 ? 0.0 : (image.height() - 1) / 2.0;
    const double cx = width > 1 ? 0.0 : (image.width() - 1) / 2.0;
    for (int y = 0; y < height; ++y) {
        const double fy = cy + y * sy;
        const int y0 = std::min(static_cast<int>(fy), image.height() - 1);
        const int y1 = std::min(y0 + 1, image.height() - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = cx + x * sx;
            const int x0 = std::min(static_cast<int>(fx), image.width() - 1);
            const int x1 = std::min(x0 + 1, image.width() - 1);
            const double wx = fx - x0;
            for (int k = 0; k < c; ++k) {
                const double v = (1 - wy) * ((1 - wx) * image.at(y0, x0, k) + wx * image.at(y0, x1, k)) +
                                 wy * ((1 - wx) * image.at(y1, x0, k) + wx * image.at(y1, x1, k));
                out.at(y, x, k) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

/// Aspect-preserving bilinear fit of `image` into `region` of an H x W zero
/// canvas, centered. Scale is measured in corner-aligned extent (n - 1 pixel
/// intervals per axis), so a 1 x 2 image fills a 1 x 4 target exactly.
inline ImageBuffer letterbox_into(const ImageBuffer& image, int height, int width, const Rect& region) {
    GLYPHFLOW_CHECK(height > 0 && width > 0, ErrorKind::invalid_argument, "letterbox", "target size must be positive");
    GLYPHFLOW_CHECK(region.x0 >= 0 && region.y0 >= 0 && region.x1 <= width && region.y1 <= height &&
                        region.width() > 0 && region.height() > 0,
                    ErrorKind::invalid_argument, "letterbox", "region outside canvas");
    const int rh = region.height(), rw = region.width();
    double s = std::numeric_limits<double>::infinity();
    if (image.height() > 1) s = std::min(s, static_cast<double>(rh - 1) / (image.height() - 1));
    if (image.width() > 1) s = std::min(s, static_cast<double>(rw - 1) / (image.width() - 1));
    if (!std::isfinite(s)) s = 1.0;
    const int nh = std::clamp(static_cast<int>(std::lround(1 + (image.height() - 1) * s)), 1, rh);
    const int nw = std::clamp(static_cast<int>(std::lround(1 + (image.width() - 1) * s)), 1, rw);
    const ImageBuffer fitted =
        (nh == image.height() && nw == image.width()) ? image : resize_bilinear(image, nh, nw);
    ImageBuffer out(height, width, image.channels());
    const int oy = region.y0 + (rh - nh) / 2;
    const int ox = region.x0 + (rw - nw) / 2;
    for (int y = 0; y < nh; ++y)
        for (int x = 0; x < nw; ++x)
            for (int k = 0; k < image.channels(); ++k) out.at(oy + y, ox + x, k) = fitted.at(y, x, k);
    return out;
}

inline ImageBuffer letterbox(const ImageBuffer& image, int height, int width) {
    return letterbox_into(image, height, width, Rect{0, 0, width, height});
}

/// Stacks channels of same-sized images in order.
inline ImageBuffer channel_concat(std::span<const ImageBuffer> parts) {
    GLYPHFLOW_CHECK(!parts.empty(), ErrorKind::invalid_argument, "channel_concat", "no parts");
    int total = 0;
    for (const auto& p : parts) {
        detail::require_same_size("channel_concat", parts[0].height(), parts[0].width(), p.height(), p.width());
        total += p.channels();
    }
    ImageBuffer out(parts[0].height(), parts[0].width(), total);
    int base = 0;
    for (const auto& p : parts) {
        for (int y = 0; y < p.height(); ++y)
            for (int x = 0; x < p.width(); ++x)
                for (int k = 0; k < p.channels(); ++k) out.at(y, x, base + k) = p.at(y, x, k);
        base += p.channels();
    }
    return out;
}

inline ImageBuffer channel_concat(std::initializer_list<ImageBuffer> parts) {
    return channel_concat(std::span<const ImageBuffer>(parts.begin(), parts.size()));
}

/// Channels [first, first + count) of `image`.
inline ImageBuffer channel_slice(const ImageBuffer& image, int first, int count) {
    GLYPHFLOW_CHECK(first >= 0 && count > 0 && first + count <= image.channels(), ErrorKind::invalid_argument,
                    "channel_slice", "channel range out of bounds");
    ImageBuffer out(image.height(), image.width(), count);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int k = 0; k < count; ++k) out.at(y, x, k) = image.at(y, x, first + k);
    return out;
}

/// decoded * M + I * (1 - M): keeps the source outside the edit region.
inline ImageBuffer composite_output(const ImageBuffer& decoded, const ImageBuffer& image, const BinaryMask& mask) {
    detail::require_same_size("composite_output", decoded.height(), decoded.width(), image.height(), image.width());
    detail::require_same_size("composite_output", image.height(), image.width(), mask.height(), mask.width());
    GLYPHFLOW_CHECK(decoded.channels() == image.channels(), ErrorKind::shape_mismatch, "composite_output",
                    "channel count ", decoded.channels(), " vs ", image.channels());
    ImageBuffer out = image;
    const int c = image.channels();
    auto m = mask.data();
    auto src = decoded.data();
    auto dst = out.data();
    for (std::size_t p = 0; p < m.size(); ++p) {
        if (!m[p]) continue;
        for (int k = 0; k < c; ++k) dst[p * c + k] = src[p * c + k];
    }
    return out;
}

/// ITU-R BT.601 luma; single-channel images pass through.
inline ImageBuffer to_gray(const ImageBuffer& image) {
    if (image.channels() == 1) return image;
    ImageBuffer out(image.height(), image.width(), 1);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            out.at(y, x) = 0.299f * image.at(y, x, 0) + 0.587f * image.at(y, x, 1) + 0.114f * image.at(y, x, 2);
    return out;
}

inline ImageBuffer gray_to_rgb(const ImageBuffer& gray) {
    ImageBuffer out(gray.height(), gray.width(), 3);
    for (int y = 0; y < gray.height(); ++y)
        for (int x = 0; x < gray.width(); ++x)
            for (int k = 0; k < 3; ++k) out.at(y, x, k) = gray.at(y, x);
    return out;
}

/// Otsu threshold over a histogram of `bins` levels on [0, 1].
inline float otsu_threshold(std::span<const float> values, int bins = 256) {
    std::vector<double> hist(bins, 0.0);
    for (float v : values) {
        const int b = std::clamp(static_cast<int>(v * bins), 0, bins - 1);
        hist[b] += 1.0;
    }
    const double total = static_cast<double>(values.size());
    double sum_all = 0.0;
    for (int b = 0; b < bins; ++b) sum_all += b * hist[b];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_b = 0;
    for (int b = 0; b < bins - 1; ++b) {
        w0 += hist[b];
        sum0 += b * hist[b];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_b = b;
        }
    }
    return static_cast<float>(best_b + 1) / bins;
}

/// Foreground of a text crop: the Otsu class that does not own the majority
/// of the crop's border pixels. Returns a 0/1 plane.
inline ImageBuffer text_foreground(const ImageBuffer& crop_rgb) {
    const ImageBuffer gray = to_gray(crop_rgb);
    const float thr = otsu_threshold(gray.data());
    int border_hi = 0, border_n = 0;
    const int h = gray.height(), w = gray.width();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (y != 0 && y != h - 1 && x != 0 && x != w - 1) continue;
            border_hi += gray.at(y, x) >= thr;
            ++border_n;
        }
    const bool fg_is_dark = 2 * border_hi > border_n;
    ImageBuffer out(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool hi = gray.at(y, x) >= thr;
            out.at(y, x) = (hi != fg_is_dark) ? 1.0f : 0.0f;
        }
    return out;
}

/// Mean color over pixels where `plane` is set; zero vector if none are.
inline std::array<double, 3> masked_mean_rgb(const ImageBuffer& image, const ImageBuffer& plane) {
    std::array<double, 3> acc{0, 0, 0};
    std::size_t n = 0;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            if (plane.at(y, x) < 0.5f) continue;
            for (int k = 0; k < 3; ++k) acc[k] += image.at(y, x, std::min(k, image.channels() - 1));
            ++n;
        }
    if (n) {
        for (auto& v : acc) v /= static_cast<double>(n);
    }
    return acc;
}

}  // namespace glyphflow
