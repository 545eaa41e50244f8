// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Rectified-flow interpolation, the pretraining and cooldown objectives, and
// the Euler sampler.

#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "glyphflow/backbone.hpp"
#include "glyphflow/encoders.hpp"
#include "glyphflow/prompt.hpp"

namespace glyphflow {

/// Noise level as a function of time. The identity is the only schedule used.
using Schedule = std::function<float(float)>;

inline float identity_schedule(float t) { return t; }

struct FlowState {
    Tensor<float> z0;  // clean latent
    Tensor<float> z1;  // noise latent
    Tensor<float> zt;  // interpolant
    float t = 0;
    float sigma = 0;
};

struct CooldownPairLatents {
    Tensor<float> source;
    Tensor<float> target;
};

/// Where the sampler starts.
///   noise:  seeded Gaussian at t = 1, integrated down to t = 0
///   source: the source-image latent at sigma = 0, integrated up to sigma = 1
enum class SamplerInit { noise, source };

inline std::string_view to_string(SamplerInit i) { return i == SamplerInit::noise ? "noise" : "source"; }

inline SamplerInit sampler_init_from_string(std::string_view s) {
    if (s == "noise") return SamplerInit::noise;
    if (s == "source") return SamplerInit::source;
    GLYPHFLOW_THROW(ErrorKind::invalid_argument, "sampler_init", "unknown sampler init '", std::string(s), "'");
}

struct SamplerConfig {
    int steps = 30;
    float guidance = 30.0f;
    std::uint64_t seed = 42;
    SamplerInit init = SamplerInit::noise;
    Schedule schedule = identity_schedule;
    std::optional<std::filesystem::path> trace_dir;  // one GFT1 file per step when set

    void validate() const {
        GLYPHFLOW_CHECK(steps >= 1, ErrorKind::invalid_argument, "SamplerConfig", "steps must be >= 1, got ", steps);
        GLYPHFLOW_CHECK(std::isfinite(guidance), ErrorKind::invalid_argument, "SamplerConfig", "guidance not finite");
    }
};

template <typename T>
Tensor<T> interpolate(const Tensor<T>& a, const Tensor<T>& b, T sigma) {
    GLYPHFLOW_CHECK(a.shape() == b.shape(), ErrorKind::shape_mismatch, "interpolate", shape_str(a.shape()), " vs ",
                    shape_str(b.shape()));
    GLYPHFLOW_CHECK(sigma >= T(0) && sigma <= T(1), ErrorKind::invalid_argument, "interpolate",
                    "sigma must lie in [0, 1], got ", sigma);
    if (sigma == T(0)) return a;
    if (sigma == T(1)) return b;
    Tensor<T> out(a.shape());
    auto o = out.data();
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (T(1) - sigma) * x[i] + sigma * y[i];
    return out;
}

namespace detail {

template <typename T>
double mse_against_velocity(const Tensor<T>& pred, const Tensor<T>& from, const Tensor<T>& to, const char* where) {
    GLYPHFLOW_CHECK(pred.shape() == from.shape() && from.shape() == to.shape(), ErrorKind::shape_mismatch, where,
                    "pred ", shape_str(pred.shape()), ", endpoints ", shape_str(from.shape()), " and ",
                    shape_str(to.shape()));
    double acc = 0;
    auto p = pred.data();
    auto a = from.data();
    auto b = to.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        // target rounded to T exactly as the training targets are
        const double e = static_cast<double>(p[i]) - static_cast<double>(static_cast<T>(b[i] - a[i]));
        acc += e * e;
    }
    return acc / static_cast<double>(p.size());
}

}  // namespace detail

/// Mean squared error between `pred` and the noise velocity z1 - z0.
template <typename T>
double rf_loss(const Tensor<T>& pred, const Tensor<T>& z0, const Tensor<T>& z1) {
    return detail::mse_against_velocity(pred, z0, z1, "rf_loss");
}

/// Mean squared error between `pred` and the edit velocity target - source.
inline double cd_loss(const Tensor<float>& pred, const CooldownPairLatents& pair) {
    return detail::mse_against_velocity(pred, pair.source, pair.target, "cd_loss");
}

/// Latent of the conditioning planes, computed once per bundle.
inline Tensor<float> encode_conditioning(const PromptBundle& bundle, const LatentCodec& codec) {
    return codec.encode(bundle.conditioning);
}

/// [noised target planes | conditioning planes] along the channel axis.
inline Tensor<float> compose_latent(const Tensor<float>& noised, const Tensor<float>& cond_latent) {
    GLYPHFLOW_CHECK(noised.rank() == 3 && cond_latent.rank() == 3 && noised.dim(0) == cond_latent.dim(0) &&
                        noised.dim(1) == cond_latent.dim(1),
                    ErrorKind::shape_mismatch, "compose_latent", shape_str(noised.shape()), " vs ",
                    shape_str(cond_latent.shape()));
    const std::size_t h = noised.dim(0), w = noised.dim(1), a = noised.dim(2), b = cond_latent.dim(2);
    Tensor<float> out(Shape{h, w, a + b});
    auto o = out.data();
    auto x = noised.data();
    auto c = cond_latent.data();
    for (std::size_t i = 0; i < h * w; ++i) {
        std::copy_n(x.data() + i * a, a, o.data() + i * (a + b));
        std::copy_n(c.data() + i * b, b, o.data() + i * (a + b) + a);
    }
    return out;
}

/// First `channels` latent channels of a composite.
inline Tensor<float> noised_planes(const Tensor<float>& composite, std::size_t channels) {
    const std::size_t h = composite.dim(0), w = composite.dim(1), all = composite.dim(2);
    Tensor<float> out(Shape{h, w, channels});
    for (std::size_t i = 0; i < h * w; ++i)
        std::copy_n(composite.data().data() + i * all, channels, out.data().data() + i * channels);
    return out;
}

struct TrainingPoint {
    ModelInput<float> input;
    Tensor<float> velocity;  // target in latent layout [Hl, Wl, target channels]
    FlowState state;
};

/// Pretraining sample: noise the target latent to time t and pair it with the clean conditioning.
inline TrainingPoint build_training_point(const PromptBundle& bundle, const ImageBuffer& target, float t,
                                          std::uint64_t seed, const LatentCodec& codec, float guidance = 30.0f,
                                          const Schedule& schedule = identity_schedule) {
    GLYPHFLOW_CHECK(target.height() == bundle.height() && target.width() == bundle.width(), ErrorKind::shape_mismatch,
                    "build_training_point", "target ", target.height(), "x", target.width(), " vs bundle ",
                    bundle.height(), "x", bundle.width());
    GLYPHFLOW_CHECK(t >= 0.0f && t <= 1.0f, ErrorKind::invalid_argument, "build_training_point",
                    "t must lie in [0, 1], got ", t);
    TrainingPoint p;
    p.state.t = t;
    p.state.sigma = schedule(t);
    p.state.z0 = codec.encode(target);
    p.state.z1 = seeded_randn<float>(p.state.z0.shape(), seed);
    p.state.zt = interpolate(p.state.z0, p.state.z1, p.state.sigma);
    p.velocity = Tensor<float>(p.state.z0.shape());
    for (std::size_t i = 0; i < p.velocity.numel(); ++i) p.velocity[i] = p.state.z1[i] - p.state.z0[i];
    p.input = ModelInput<float>{compose_latent(p.state.zt, encode_conditioning(bundle, codec)), t, guidance,
                                bundle.content, bundle.style};
    return p;
}

/// Cooldown sample: interpolate from the source latent toward the edited latent.
inline TrainingPoint build_cooldown_point(const PromptBundle& bundle, const ImageBuffer& target, float t,
                                          const LatentCodec& codec, float guidance = 30.0f,
                                          const Schedule& schedule = identity_schedule) {
    GLYPHFLOW_CHECK(target.height() == bundle.height() && target.width() == bundle.width(), ErrorKind::shape_mismatch,
                    "build_cooldown_point", "target and bundle sizes differ");
    GLYPHFLOW_CHECK(t >= 0.0f && t <= 1.0f, ErrorKind::invalid_argument, "build_cooldown_point",
                    "t must lie in [0, 1], got ", t);
    TrainingPoint p;
    p.state.t = t;
    p.state.sigma = schedule(t);
    p.state.z0 = codec.encode(bundle.source);
    p.state.z1 = codec.encode(target);
    p.state.zt = interpolate(p.state.z0, p.state.z1, p.state.sigma);
    p.velocity = Tensor<float>(p.state.z0.shape());
    for (std::size_t i = 0; i < p.velocity.numel(); ++i) p.velocity[i] = p.state.z1[i] - p.state.z0[i];
    p.input = ModelInput<float>{compose_latent(p.state.zt, encode_conditioning(bundle, codec)), t, guidance,
                                bundle.content, bundle.style};
    return p;
}

/// Velocity field seen by the sampler: (noised planes, t) -> velocity.
using VelocityFn = std::function<Tensor<float>(const Tensor<float>&, float)>;

namespace detail {

inline void check_finite(const Tensor<float>& z, int step, const char* what) {
    if (z.all_finite()) return;
    float worst = 0;
    for (float v : z.data())
        if (std::isfinite(v)) worst = std::max(worst, std::abs(v));
    GLYPHFLOW_THROW(ErrorKind::numeric_error, "sample", what, " became non-finite at step ", step,
                    " (max finite |z| = ", worst, ")");
}

}  // namespace detail

/// Euler integration of `velocity` from `z_init`. Noise init walks t from 1 to 0
/// with z -= dsigma * v; source init walks t from 0 to 1 with z += dsigma * v.
inline Tensor<float> integrate(const VelocityFn& velocity, Tensor<float> z, const SamplerConfig& cfg) {
    cfg.validate();
    if (cfg.trace_dir) std::filesystem::create_directories(*cfg.trace_dir);
    const int n = cfg.steps;
    for (int i = 0; i < n; ++i) {
        // Step index counts down for noise init so it matches the time grid t_k = k / n.
        const int k = cfg.init == SamplerInit::noise ? n - i : i;
        const float t = static_cast<float>(k) / static_cast<float>(n);
        const float t_next = cfg.init == SamplerInit::noise ? static_cast<float>(k - 1) / static_cast<float>(n)
                                                            : static_cast<float>(k + 1) / static_cast<float>(n);
        const Tensor<float> v = velocity(z, t);
        GLYPHFLOW_CHECK(v.shape() == z.shape(), ErrorKind::shape_mismatch, "sample", "velocity ",
                        shape_str(v.shape()), " vs state ", shape_str(z.shape()));
        detail::check_finite(v, i, "velocity");
        const float ds = cfg.schedule(t_next) - cfg.schedule(t);
        for (std::size_t j = 0; j < z.numel(); ++j) z[j] += ds * v[j];
        detail::check_finite(z, i, "latent");
        if (cfg.trace_dir) {
            char name[32];
            std::snprintf(name, sizeof name, "step_%04d.gft1", i);
            gft1::save(*cfg.trace_dir / name, z);
        }
    }
    return z;
}

/// Initial noised planes for a bundle.
inline Tensor<float> initial_latent(const PromptBundle& bundle, const ModelConfig& mcfg, const LatentCodec& codec,
                                    const SamplerConfig& cfg) {
    if (cfg.init == SamplerInit::source) return codec.encode(bundle.source);
    const int p = codec.patch();
    return seeded_randn<float>(Shape{static_cast<std::size_t>(bundle.height() / p),
                                     static_cast<std::size_t>(bundle.width() / p),
                                     static_cast<std::size_t>(mcfg.latent_target_channels())},
                               cfg.seed);
}

/// Full edit: integrate the model's velocity, decode, and paste into the source over the mask.
inline ImageBuffer sample(const ModelParams<float>& params, const ModelConfig& mcfg, const LatentCodec& codec,
                          const PromptBundle& bundle, const SamplerConfig& cfg) {
    GLYPHFLOW_CHECK(bundle.height() == mcfg.resolution && bundle.width() == mcfg.resolution,
                    ErrorKind::shape_mismatch, "sample", "bundle is ", bundle.height(), "x", bundle.width(),
                    ", model expects ", mcfg.resolution);
    const Tensor<float> cond = encode_conditioning(bundle, codec);
    VelocityFn field = [&](const Tensor<float>& z, float t) {
        ModelInput<float> in{compose_latent(z, cond), t, cfg.guidance, bundle.content, bundle.style};
        return forward(params, mcfg, in);
    };
    const Tensor<float> z = integrate(field, initial_latent(bundle, mcfg, codec, cfg), cfg);
    return composite_output(codec.decode(z), bundle.source, bundle.mask);
}

}  // namespace glyphflow
