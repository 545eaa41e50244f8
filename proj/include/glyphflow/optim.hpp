// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "glyphflow/backbone.hpp"

namespace glyphflow {

struct AdamWConfig {
    double lr = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// First/second moments aligned with ModelParams::entries().
struct OptimizerState {
    std::vector<Tensor<float>> m;
    std::vector<Tensor<float>> v;
    std::uint64_t step = 0;
    std::uint64_t skipped = 0;

    static OptimizerState zeros_like(const ModelParams<float>& params) {
        OptimizerState s;
        for (const auto& [_, t] : params.entries()) {
            s.m.emplace_back(t.shape());
            s.v.emplace_back(t.shape());
        }
        return s;
    }

    bool operator==(const OptimizerState&) const = default;
};

/// One AdamW update with decoupled weight decay and bias-corrected moments.
/// Returns false (and counts a skip) without touching anything when any
/// gradient is non-finite.
inline bool adamw_step(ModelParams<float>& params, const std::vector<Tensor<float>>& grads, OptimizerState& state,
                       const AdamWConfig& cfg) {
    auto& entries = params.entries();
    GLYPHFLOW_CHECK(grads.size() == entries.size() && state.m.size() == entries.size() &&
                        state.v.size() == entries.size(),
                    ErrorKind::shape_mismatch, "adamw_step", "gradient/state count does not match parameters");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        GLYPHFLOW_CHECK(grads[i].shape() == entries[i].second.shape(), ErrorKind::shape_mismatch, "adamw_step",
                        "gradient for ", entries[i].first, " has shape ", shape_str(grads[i].shape()));
        if (!grads[i].all_finite()) {
            ++state.skipped;
            return false;
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    const float b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
    const float eps = static_cast<float>(cfg.eps);
    const float decay = static_cast<float>(1.0 - cfg.lr * cfg.weight_decay);
    const float step_scale = static_cast<float>(cfg.lr / bc1);
    const float inv_bc2 = static_cast<float>(1.0 / bc2);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto p = entries[i].second.data();
        auto g = grads[i].data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1.0f - b1) * g[k];
            v[k] = b2 * v[k] + (1.0f - b2) * g[k] * g[k];
            p[k] = p[k] * decay - step_scale * m[k] / (std::sqrt(v[k] * inv_bc2) + eps);
        }
    }
    return true;
}

}  // namespace glyphflow
