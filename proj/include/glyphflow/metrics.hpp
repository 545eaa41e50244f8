// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Sentence accuracy, normalized edit distance and the Frechet feature distance.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "glyphflow/dataset.hpp"
#include "glyphflow/glyphs.hpp"
#include "glyphflow/image.hpp"
#include "glyphflow/parallel.hpp"
#include "glyphflow/png_io.hpp"
#include "glyphflow/utf8.hpp"

namespace glyphflow {

/// Levenshtein distance over codepoints (unit costs).
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

enum class NedNorm { max_length, reference_length };

/// 1 - distance / normalizer, in [0, 1]; ned("", "") = 1. The default divides
/// by the longer string; reference_length divides by the ground truth and clamps at 0.
inline double ned(std::string_view pred, std::string_view gt, NedNorm norm = NedNorm::max_length) {
    const std::u32string a = utf8::decode(pred), b = utf8::decode(gt);
    const std::size_t denom = norm == NedNorm::max_length ? std::max(a.size(), b.size()) : b.size();
    if (denom == 0) return a.size() == b.size() ? 1.0 : 0.0;
    return std::max(0.0, 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(denom));
}

struct TextPair {
    std::string predicted;
    std::string truth;
};

inline double seq_acc(const std::vector<TextPair>& records) {
    GLYPHFLOW_CHECK(!records.empty(), ErrorKind::invalid_argument, "seq_acc", "no records");
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.predicted == r.truth;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

inline constexpr int kFeatureSide = 8;
inline constexpr int kFeatureDim = kFeatureSide * kFeatureSide;

/// Grayscale, bilinear resize to 8x8, flattened row-major.
inline std::vector<double> extract_features(const ImageBuffer& img) {
    const ImageBuffer small = resize_bilinear(to_gray(img), kFeatureSide, kFeatureSide);
    std::vector<double> f(small.data().begin(), small.data().end());
    return f;
}

/// n x d feature matrix.
struct FeatureSet {
    Eigen::MatrixXd features;
    std::string extractor = "gray8x8";

    static FeatureSet from_images(const std::vector<ImageBuffer>& imgs) {
        FeatureSet s;
        s.features.resize(static_cast<Eigen::Index>(imgs.size()), kFeatureDim);
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            const auto f = extract_features(imgs[i]);
            for (int k = 0; k < kFeatureDim; ++k) s.features(static_cast<Eigen::Index>(i), k) = f[k];
        }
        return s;
    }

    Tensor<float> to_tensor() const {
        Tensor<float> t(Shape{static_cast<std::size_t>(features.rows()), static_cast<std::size_t>(features.cols())});
        for (Eigen::Index i = 0; i < features.rows(); ++i)
            for (Eigen::Index j = 0; j < features.cols(); ++j)
                t[static_cast<std::size_t>(i * features.cols() + j)] = static_cast<float>(features(i, j));
        return t;
    }

    static FeatureSet from_tensor(const Tensor<float>& t) {
        GLYPHFLOW_CHECK(t.rank() == 2, ErrorKind::shape_mismatch, "FeatureSet", "expected a rank-2 tensor");
        FeatureSet s;
        s.features.resize(static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
        for (std::size_t i = 0; i < t.dim(0); ++i)
            for (std::size_t j = 0; j < t.dim(1); ++j)
                s.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i * t.dim(1) + j];
        return s;
    }
};

namespace detail {

/// Symmetric PSD square root via eigendecomposition, negative eigenvalues clamped to 0.
inline Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline void moments(const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov, double jitter) {
    mu = x.colwise().mean().transpose();
    const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
    cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
    cov.diagonal().array() += jitter;
}

}  // namespace detail

/// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), unbiased
/// covariances with `jitter` added to the diagonal.
inline double frechet(const FeatureSet& a, const FeatureSet& b, double jitter = 1e-6) {
    GLYPHFLOW_CHECK(a.features.rows() >= 2 && b.features.rows() >= 2, ErrorKind::invalid_argument, "frechet",
                    "each set needs at least 2 samples");
    GLYPHFLOW_CHECK(a.features.cols() == b.features.cols(), ErrorKind::shape_mismatch, "frechet",
                    "feature dims differ: ", a.features.cols(), " vs ", b.features.cols());
    GLYPHFLOW_CHECK(a.features.allFinite() && b.features.allFinite(), ErrorKind::numeric_error, "frechet",
                    "non-finite features");
    Eigen::VectorXd ma, mb;
    Eigen::MatrixXd sa, sb;
    detail::moments(a.features, ma, sa, jitter);
    detail::moments(b.features, mb, sb, jitter);
    const Eigen::MatrixXd ra = detail::sqrt_psd(sa);
    const Eigen::MatrixXd cross = detail::sqrt_psd(ra * sb * ra);
    const double d = (ma - mb).squaredNorm() + sa.trace() + sb.trace() - 2.0 * cross.trace();
    return std::max(0.0, d);
}

// ---------------------------------------------------------------------------
// Evaluation over a prediction directory

struct EvalReport {
    std::size_t records = 0;    // manifest records considered
    std::size_t evaluated = 0;  // records with a prediction
    double seq_acc = 0;
    double ned_mean = 0;
    double frechet = 0;
    std::vector<std::string> missing;

    void write(std::ostream& os) const {
        char buf[64];
        os << "records=" << records << "\n";
        os << "evaluated=" << evaluated << "\n";
        os << "missing=" << missing.size() << "\n";
        std::snprintf(buf, sizeof buf, "%.6f", seq_acc);
        os << "seq_acc=" << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.6f", ned_mean);
        os << "ned_mean=" << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.6f", frechet);
        os << "frechet=" << buf << "\n";
        for (const auto& id : missing) os << "missing_id=" << id << "\n";
    }

    /// Human-readable summary table.
    void print_table(std::ostream& os) const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s %-10s %-10s\n", "evaluated", "missing", "seq_acc", "ned",
                      "frechet");
        os << buf;
        std::snprintf(buf, sizeof buf, "%-10zu %-10zu %-10.4f %-10.4f %-10.4f\n", evaluated, missing.size(), seq_acc,
                      ned_mean, frechet);
        os << buf;
    }
};

/// Prediction for record `id` is `pred_dir/{id}.png`. The text is read from the
/// crop at the mask's bounding rectangle with the record's alphabet; Frechet
/// compares prediction crops with reference edited crops.
inline EvalReport evaluate(const std::filesystem::path& pred_dir, const Manifest& manifest) {
    EvalReport rep;
    rep.records = manifest.records.size();
    const std::size_t n = manifest.records.size();
    std::vector<std::optional<std::pair<ImageBuffer, ImageBuffer>>> crops(n);
    std::vector<TextPair> texts(n);
    std::vector<char> present(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const ManifestRecord& r = manifest.records[i];
        const auto path = pred_dir / (r.id + ".png");
        if (!std::filesystem::exists(path)) return;
        const ImageBuffer pred = png::read_image(path);
        const ImageBuffer ref = png::read_image(manifest.resolve(r.edit));
        const BinaryMask mask = png::read_mask(manifest.resolve(r.mask));
        GLYPHFLOW_CHECK(pred.same_size(ref), ErrorKind::data_error, "evaluate", r.id, ": prediction is ",
                        pred.height(), "x", pred.width(), ", reference is ", ref.height(), "x", ref.width());
        const Rect box = mask_bbox(mask);
        const ImageBuffer pc = crop(pred.channels() == 3 ? pred : gray_to_rgb(to_gray(pred)), box);
        texts[i] = {recognize_scene_text(pc, font_for(r.language)), r.target_text};
        crops[i] = std::make_pair(pc, crop(ref, box));
        present[i] = 1;
    });
    std::vector<TextPair> done;
    std::vector<ImageBuffer> pred_crops, ref_crops;
    for (std::size_t i = 0; i < n; ++i) {
        if (!present[i]) {
            rep.missing.push_back(manifest.records[i].id);
            continue;
        }
        done.push_back(texts[i]);
        pred_crops.push_back(crops[i]->first);
        ref_crops.push_back(crops[i]->second);
    }
    rep.evaluated = done.size();
    if (done.empty()) return rep;
    rep.seq_acc = seq_acc(done);
    double s = 0;
    for (const auto& t : done) s += ned(t.predicted, t.truth);
    rep.ned_mean = s / static_cast<double>(done.size());
    if (done.size() >= 2)
        rep.frechet = frechet(FeatureSet::from_images(pred_crops), FeatureSet::from_images(ref_crops));
    return rep;
}

}  // namespace glyphflow
