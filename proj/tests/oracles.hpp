// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations kept independent of the library code they check.

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "glyphflow/random.hpp"
#include "glyphflow/utf8.hpp"

namespace glyphflow::testing {

/// Full-table edit distance.
inline std::size_t dp_levenshtein(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    return d[a.size()][b.size()];
}

inline double dp_ned(const std::string& a, const std::string& b) {
    const std::u32string ua = utf8::decode(a), ub = utf8::decode(b);
    const std::size_t m = std::max(ua.size(), ub.size());
    return m == 0 ? 1.0 : 1.0 - static_cast<double>(dp_levenshtein(ua, ub)) / static_cast<double>(m);
}

inline std::string random_word(CounterRng& rng, const std::u32string& pool, int max_len) {
    std::u32string s;
    const int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len + 1)));
    for (int i = 0; i < n; ++i) s += pool[rng.below(pool.size())];
    return utf8::encode(s);
}

/// n points of a random linear mix of Gaussians, offset by `shift`.
inline Eigen::MatrixXd random_points(CounterRng& rng, int n, int d, double shift) {
    Eigen::MatrixXd m(n, d);
    Eigen::MatrixXd mix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) mix(i, j) = rng.uniform(-1.0, 1.0);
    for (int r = 0; r < n; ++r) {
        Eigen::VectorXd z(d);
        for (int k = 0; k < d; ++k) z(k) = rng.normal_pair().first;
        m.row(r) = (mix * z).transpose().array() + shift;
    }
    return m;
}

/// Sample mean and standard deviation (n - 1) of a single column.
inline std::pair<double, double> mean_sd(const Eigen::MatrixXd& x) {
    double m = 0, v = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) m += x(i, 0);
    m /= static_cast<double>(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) v += (x(i, 0) - m) * (x(i, 0) - m);
    return {m, std::sqrt(v / static_cast<double>(x.rows() - 1))};
}

/// Fréchet distance between 1-D Gaussian fits: (mu_a - mu_b)^2 + (sd_a - sd_b)^2.
inline double frechet_1d(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const auto [ma, da] = mean_sd(a);
    const auto [mb, db] = mean_sd(b);
    return (ma - mb) * (ma - mb) + (da - db) * (da - db);
}

/// Denman-Beavers iteration for the principal square root of a matrix with positive eigenvalues.
inline Eigen::MatrixXd db_sqrt(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd y = a, z = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    for (int i = 0; i < 100; ++i) {
        const Eigen::MatrixXd yn = 0.5 * (y + z.inverse());
        const Eigen::MatrixXd zn = 0.5 * (z + y.inverse());
        const double delta = (yn - y).norm();
        y = yn;
        z = zn;
        if (delta < 1e-14) break;
    }
    return y;
}

/// Fréchet distance with explicit loops for the moments and sqrtm(S_a S_b) without symmetrization.
inline double frechet_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    auto stats = [](const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
        mu = Eigen::VectorXd::Zero(x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) mu += x.row(r).transpose();
        mu /= static_cast<double>(x.rows());
        cov = Eigen::MatrixXd::Zero(x.cols(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const Eigen::VectorXd c = x.row(r).transpose() - mu;
            cov += c * c.transpose();
        }
        cov /= static_cast<double>(x.rows() - 1);
    };
    Eigen::VectorXd ma, mb;
    Eigen::MatrixXd sa, sb;
    stats(a, ma, sa);
    stats(b, mb, sb);
    return (ma - mb).squaredNorm() + (sa + sb - 2.0 * db_sqrt(sa * sb)).trace();
}

}  // namespace glyphflow::testing
