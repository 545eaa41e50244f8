// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Frozen encoders: an orthogonal per-patch latent codec and deterministic
// character-level text embedders. None of these are ever trained.

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "glyphflow/image.hpp"
#include "glyphflow/random.hpp"
#include "glyphflow/tensor.hpp"
#include "glyphflow/utf8.hpp"

namespace glyphflow {

inline constexpr std::uint64_t kCodecSeed = 7;
inline constexpr std::uint64_t kTextEmbeddingSeed = 0x7E47'E3BDULL;
inline constexpr int kTextDim = 32;

/// FNV-1a over raw bytes; used to prove frozen tensors are untouched.
inline std::uint64_t checksum(std::span<const float> data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size() * sizeof(float); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Orthogonal matrix from modified Gram-Schmidt on the rows of a seeded
/// Gaussian matrix (computed in double, stored as float).
inline Tensor<float> seeded_orthogonal(std::size_t n, std::uint64_t seed) {
    const Tensor<double> g = seeded_randn<double>(Shape{n, n}, seed);
    std::vector<double> q(g.vec());
    for (std::size_t i = 0; i < n; ++i) {
        double* qi = q.data() + i * n;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j = 0; j < i; ++j) {
                const double* qj = q.data() + j * n;
                double d = 0;
                for (std::size_t k = 0; k < n; ++k) d += qi[k] * qj[k];
                for (std::size_t k = 0; k < n; ++k) qi[k] -= d * qj[k];
            }
        }
        double norm = 0;
        for (std::size_t k = 0; k < n; ++k) norm += qi[k] * qi[k];
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < n; ++k) qi[k] /= norm;
    }
    return Tensor<double>(Shape{n, n}, std::move(q)).cast<float>();
}

/// Patch codec z = W x, x = W^T z, applied to every p x p patch of every
/// group of `group_channels` consecutive channels. With one channel per group
/// each image plane keeps its own latent channels, so plane groups stay
/// separable in latent space.
class LatentCodec {
public:
    explicit LatentCodec(int patch = 2, int group_channels = 1, std::uint64_t seed = kCodecSeed)
        : patch_(patch), group_(group_channels),
          w_(seeded_orthogonal(static_cast<std::size_t>(patch * patch * group_channels), seed)) {}

    LatentCodec(int patch, int group_channels, Tensor<float> w) : patch_(patch), group_(group_channels), w_(std::move(w)) {
        const auto n = static_cast<std::size_t>(patch * patch * group_channels);
        GLYPHFLOW_CHECK(w_.shape() == Shape({n, n}), ErrorKind::shape_mismatch, "LatentCodec",
                        "codec matrix has shape ", shape_str(w_.shape()));
    }

    int patch() const { return patch_; }
    int group_channels() const { return group_; }
    int patch_dim() const { return patch_ * patch_ * group_; }
    const Tensor<float>& matrix() const { return w_; }
    std::uint64_t fingerprint() const { return checksum(w_.data()); }

    /// Latent channels produced for an image with `channels` channels.
    int latent_channels(int channels) const { return channels * patch_ * patch_; }

    Tensor<float> encode(const ImageBuffer& img) const {
        GLYPHFLOW_CHECK(img.height() % patch_ == 0 && img.width() % patch_ == 0, ErrorKind::shape_mismatch,
                        "encode_latent", "image ", img.height(), "x", img.width(), " not divisible by patch ", patch_);
        GLYPHFLOW_CHECK(img.channels() % group_ == 0, ErrorKind::shape_mismatch, "encode_latent", "channels ",
                        img.channels(), " not divisible by codec group ", group_);
        const int hl = img.height() / patch_, wl = img.width() / patch_;
        const int groups = img.channels() / group_;
        const int n = patch_dim();
        Tensor<float> z(Shape{static_cast<std::size_t>(hl), static_cast<std::size_t>(wl),
                              static_cast<std::size_t>(groups * n)});
        std::vector<float> x(n);
        auto W = w_.data();
        auto zd = z.data();
        for (int i = 0; i < hl; ++i)
            for (int j = 0; j < wl; ++j)
                for (int g = 0; g < groups; ++g) {
                    gather(img, i, j, g, x);
                    float* out = zd.data() + ((static_cast<std::size_t>(i) * wl + j) * groups + g) * n;
                    for (int r = 0; r < n; ++r) {
                        float s = 0;
                        for (int k = 0; k < n; ++k) s += W[r * n + k] * x[k];
                        out[r] = s;
                    }
                }
        return z;
    }

    /// Inverse transform without clamping; exact up to float rounding.
    ImageBuffer decode_raw(const Tensor<float>& z) const {
        const int n = patch_dim();
        GLYPHFLOW_CHECK(z.rank() == 3 && z.dim(2) % static_cast<std::size_t>(n) == 0, ErrorKind::shape_mismatch,
                        "decode_latent", "latent shape ", shape_str(z.shape()), " inconsistent with patch dim ", n);
        const int hl = static_cast<int>(z.dim(0)), wl = static_cast<int>(z.dim(1));
        const int groups = static_cast<int>(z.dim(2)) / n;
        ImageBuffer img(hl * patch_, wl * patch_, groups * group_);
        std::vector<float> x(n);
        auto W = w_.data();
        auto zd = z.data();
        for (int i = 0; i < hl; ++i)
            for (int j = 0; j < wl; ++j)
                for (int g = 0; g < groups; ++g) {
                    const float* in = zd.data() + ((static_cast<std::size_t>(i) * wl + j) * groups + g) * n;
                    for (int k = 0; k < n; ++k) {
                        float s = 0;
                        for (int r = 0; r < n; ++r) s += W[r * n + k] * in[r];
                        x[k] = s;
                    }
                    scatter(img, i, j, g, x);
                }
        return img;
    }

    ImageBuffer decode(const Tensor<float>& z) const {
        ImageBuffer img = decode_raw(z);
        for (auto& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
        return img;
    }

private:
    // Patch vector layout: (dy, dx, channel-in-group).
    void gather(const ImageBuffer& img, int i, int j, int g, std::vector<float>& x) const {
        int k = 0;
        for (int dy = 0; dy < patch_; ++dy)
            for (int dx = 0; dx < patch_; ++dx)
                for (int c = 0; c < group_; ++c) x[k++] = img.at(i * patch_ + dy, j * patch_ + dx, g * group_ + c);
    }

    void scatter(ImageBuffer& img, int i, int j, int g, const std::vector<float>& x) const {
        int k = 0;
        for (int dy = 0; dy < patch_; ++dy)
            for (int dx = 0; dx < patch_; ++dx)
                for (int c = 0; c < group_; ++c) img.at(i * patch_ + dy, j * patch_ + dx, g * group_ + c) = x[k++];
    }

    int patch_;
    int group_;
    Tensor<float> w_;
};

// ---------------------------------------------------------------------------
// Text embeddings

/// Unit vector for one codepoint, from a stream seeded by the codepoint.
inline std::vector<float> codepoint_vector(char32_t cp, int dim = kTextDim) {
    const Tensor<double> g =
        seeded_randn<double>(Shape{static_cast<std::size_t>(dim)}, derive_seed(kTextEmbeddingSeed, cp));
    double norm = 0;
    for (double v : g.data()) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(dim);
    for (int i = 0; i < dim; ++i) out[i] = static_cast<float>(g[i] / norm);
    return out;
}

/// Sequence embedding: one unit row per character. Shape [len, dim].
inline Tensor<float> embed_content_text(std::string_view text, int dim = kTextDim) {
    const std::u32string cps = utf8::decode(text);
    GLYPHFLOW_CHECK(!cps.empty(), ErrorKind::invalid_argument, "embed_content_text", "text must be nonempty");
    std::vector<float> data;
    data.reserve(cps.size() * dim);
    for (char32_t cp : cps) {
        auto v = codepoint_vector(cp, dim);
        data.insert(data.end(), v.begin(), v.end());
    }
    return Tensor<float>(Shape{cps.size(), static_cast<std::size_t>(dim)}, std::move(data));
}

/// Pooled embedding: L2-normalized sum of codepoint vectors; zero for empty text.
inline Tensor<float> embed_style_text(std::string_view text, int dim = kTextDim) {
    std::vector<double> acc(dim, 0.0);
    for (char32_t cp : utf8::decode(text)) {
        auto v = codepoint_vector(cp, dim);
        for (int i = 0; i < dim; ++i) acc[i] += v[i];
    }
    double norm = 0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(dim, 0.0f);
    if (norm > 0)
        for (int i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return Tensor<float>(Shape{1, static_cast<std::size_t>(dim)}, std::move(out));
}

}  // namespace glyphflow
