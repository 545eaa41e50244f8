// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Miniature multimodal diffusion transformer.
//
//   latent [Hl, Wl, C_in] --patchify--> visual tokens --vis_in--> [N_v, d]
//   content [L, d_txt]    --txt_in-->  text tokens          ]
//   style   [1, d_txt]    --style_in-> one extra text token  ] [L + 1, d]
//   (t, g) --sinusoids--> cond MLP --> cond [d], added before every norm
//
//   dual-stream blocks:   per-stream self-attention, bidirectional
//                         cross-attention, per-stream MLP
//   single-stream blocks: joint attention + MLP over concat(vis, txt)
//   head: layer norm + linear on the visual tokens --unpatchify--> velocity
//
// Every residual branch ends in an output projection that starts at zero, so
// a fresh model is the identity on both streams and predicts the head bias.

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "glyphflow/autograd.hpp"
#include "glyphflow/random.hpp"

namespace glyphflow {

struct ModelConfig {
    int d_model = 64;
    int heads = 4;
    int dual_blocks = 2;
    int single_blocks = 2;
    int d_txt = 32;
    int patch = 2;           // backbone patch over the latent grid
    int resolution = 64;     // working image resolution
    int cond_channels = 8;   // conditioning image planes
    int target_channels = 3; // generated image planes
    int codec_patch = 2;
    int mlp_ratio = 4;

    int latent_target_channels() const { return codec_patch * codec_patch * target_channels; }
    int latent_cond_channels() const { return codec_patch * codec_patch * cond_channels; }
    int latent_channels() const { return latent_target_channels() + latent_cond_channels(); }
    int token_in() const { return patch * patch * latent_channels(); }
    int token_out() const { return patch * patch * latent_target_channels(); }
    int head_dim() const { return d_model / heads; }

    void validate() const {
        GLYPHFLOW_CHECK(d_model > 0 && heads > 0 && d_model % heads == 0, ErrorKind::invalid_argument, "ModelConfig",
                        "d_model ", d_model, " must be divisible by heads ", heads);
        GLYPHFLOW_CHECK(d_model % 4 == 0, ErrorKind::invalid_argument, "ModelConfig",
                        "d_model must be a multiple of 4 for sinusoidal features");
        GLYPHFLOW_CHECK(dual_blocks >= 1 && single_blocks >= 1 && d_txt >= 1 && patch >= 1 && codec_patch >= 1 &&
                            mlp_ratio >= 1 && cond_channels >= 1 && target_channels >= 1,
                        ErrorKind::invalid_argument, "ModelConfig", "all counts must be >= 1");
        GLYPHFLOW_CHECK(resolution % (patch * codec_patch) == 0, ErrorKind::invalid_argument, "ModelConfig",
                        "resolution must be divisible by patch * codec_patch");
    }

    /// Closed-form parameter count.
    std::size_t parameter_count() const {
        const std::size_t d = d_model, h = static_cast<std::size_t>(mlp_ratio) * d_model;
        const std::size_t attn = (3 * d * d + 3 * d) + (d * d + d);
        const std::size_t cross = (d * d + d) + (2 * d * d + 2 * d) + (d * d + d);
        const std::size_t mlp = (d * h + h) + (h * d + d);
        return 2 * (d * d + d)                                        // cond MLP
               + (static_cast<std::size_t>(token_in()) * d + d)        // vis_in
               + 2 * (static_cast<std::size_t>(d_txt) * d + d)         // txt_in, style_in
               + static_cast<std::size_t>(dual_blocks) * 2 * (attn + cross + mlp) +
               static_cast<std::size_t>(single_blocks) * (attn + mlp) +
               (d * static_cast<std::size_t>(token_out()) + token_out());  // head
    }

    bool operator==(const ModelConfig&) const = default;
};

/// Named parameter tensors in a fixed, deterministic order.
template <typename T = float>
class ModelParams {
public:
    void add(std::string name, Tensor<T> t) {
        GLYPHFLOW_CHECK(!index_.count(name), ErrorKind::invalid_argument, "ModelParams", "duplicate name ", name);
        index_[name] = entries_.size();
        entries_.emplace_back(std::move(name), std::move(t));
    }

    const Tensor<T>& get(const std::string& name) const { return entries_[find(name)].second; }
    Tensor<T>& get(const std::string& name) { return entries_[find(name)].second; }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Tensor<T>>>& entries() { return entries_; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& [_, t] : entries_) n += t.numel();
        return n;
    }

    bool all_finite() const {
        for (const auto& [_, t] : entries_)
            if (!t.all_finite()) return false;
        return true;
    }

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        for (const auto& [n, t] : entries_) out.add(n, t.template cast<U>());
        return out;
    }

    bool operator==(const ModelParams& o) const { return entries_ == o.entries_; }

private:
    std::size_t find(const std::string& name) const {
        auto it = index_.find(name);
        GLYPHFLOW_CHECK(it != index_.end(), ErrorKind::invalid_argument, "ModelParams", "no parameter named ", name);
        return it->second;
    }

    std::vector<std::pair<std::string, Tensor<T>>> entries_;
    std::map<std::string, std::size_t> index_;
};

enum class InitMode {
    standard,  // zero residual-branch output projections and head
    random,    // every tensor random; used for gradient checks
    zero,      // all zeros
};

namespace detail {

inline bool is_zero_init(const std::string& name) {
    auto ends = [&](std::string_view s) { return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0; };
    if (name.rfind("head.", 0) == 0) return true;
    if (name.rfind("cond.", 0) == 0) return false;
    return ends(".out.w") || ends(".out.b") || ends(".fc2.w") || ends(".fc2.b");
}

}  // namespace detail

/// Parameter names and shapes for a config, in canonical order.
inline std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& c) {
    using S = std::size_t;
    const S d = c.d_model, h = static_cast<S>(c.mlp_ratio) * c.d_model, dt = c.d_txt;
    std::vector<std::pair<std::string, Shape>> out;
    auto lin = [&](const std::string& p, S in, S o) {
        out.emplace_back(p + ".w", Shape{in, o});
        out.emplace_back(p + ".b", Shape{o});
    };
    lin("cond.fc1", d, d);
    lin("cond.fc2", d, d);
    lin("vis_in", static_cast<S>(c.token_in()), d);
    lin("txt_in", dt, d);
    lin("style_in", dt, d);
    for (int i = 0; i < c.dual_blocks; ++i) {
        const std::string b = "dual" + std::to_string(i) + ".";
        for (const char* s : {"vis", "txt"}) {
            const std::string p = b + s;
            lin(p + ".attn.qkv", d, 3 * d);
            lin(p + ".attn.out", d, d);
            lin(p + ".cross.q", d, d);
            lin(p + ".cross.kv", d, 2 * d);
            lin(p + ".cross.out", d, d);
            lin(p + ".mlp.fc1", d, h);
            lin(p + ".mlp.fc2", h, d);
        }
    }
    for (int i = 0; i < c.single_blocks; ++i) {
        const std::string p = "single" + std::to_string(i);
        lin(p + ".attn.qkv", d, 3 * d);
        lin(p + ".attn.out", d, d);
        lin(p + ".mlp.fc1", d, h);
        lin(p + ".mlp.fc2", h, d);
    }
    lin("head", d, static_cast<S>(c.token_out()));
    return out;
}

template <typename T = float>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed, InitMode mode = InitMode::standard) {
    cfg.validate();
    ModelParams<T> p;
    std::uint64_t k = 0;
    for (auto& [name, shape] : parameter_layout(cfg)) {
        const std::uint64_t s = derive_seed(seed, k++);
        const bool is_bias = shape.size() == 1;
        const bool zero = mode == InitMode::zero || (mode == InitMode::standard && (is_bias || detail::is_zero_init(name)));
        if (zero) {
            p.add(name, Tensor<T>(shape));
            continue;
        }
        Tensor<T> t = seeded_randn<T>(shape, s);
        const T std_dev = is_bias ? T(0.1) : T(1) / std::sqrt(static_cast<T>(shape[0]));
        for (auto& v : t.data()) v *= std_dev;
        p.add(name, std::move(t));
    }
    return p;
}

// ---------------------------------------------------------------------------
// Token layout

/// [Hl, Wl, C] -> [(Hl/p)(Wl/p), p*p*C]; token vector layout (dy, dx, c).
template <typename T>
Tensor<T> patchify(const Tensor<T>& latent, int p) {
    GLYPHFLOW_CHECK(latent.rank() == 3 && latent.dim(0) % p == 0 && latent.dim(1) % p == 0, ErrorKind::shape_mismatch,
                    "patchify", "latent ", shape_str(latent.shape()), " not divisible by patch ", p);
    const std::size_t hl = latent.dim(0), wl = latent.dim(1), c = latent.dim(2), P = p;
    const std::size_t gh = hl / P, gw = wl / P;
    Tensor<T> out(Shape{gh * gw, P * P * c});
    auto src = latent.data();
    auto dst = out.data();
    std::size_t k = 0;
    for (std::size_t i = 0; i < gh; ++i)
        for (std::size_t j = 0; j < gw; ++j)
            for (std::size_t dy = 0; dy < P; ++dy)
                for (std::size_t dx = 0; dx < P; ++dx)
                    for (std::size_t ch = 0; ch < c; ++ch) dst[k++] = src[((i * P + dy) * wl + j * P + dx) * c + ch];
    return out;
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& tokens, int p, std::size_t hl, std::size_t wl) {
    const std::size_t P = p;
    GLYPHFLOW_CHECK(tokens.rank() == 2 && hl % P == 0 && wl % P == 0 && tokens.dim(0) == (hl / P) * (wl / P) &&
                        tokens.dim(1) % (P * P) == 0,
                    ErrorKind::shape_mismatch, "unpatchify", "tokens ", shape_str(tokens.shape()),
                    " inconsistent with grid ", hl, "x", wl);
    const std::size_t c = tokens.dim(1) / (P * P), gw = wl / P;
    Tensor<T> out(Shape{hl, wl, c});
    auto src = tokens.data();
    auto dst = out.data();
    std::size_t k = 0;
    for (std::size_t i = 0; i < hl / P; ++i)
        for (std::size_t j = 0; j < gw; ++j)
            for (std::size_t dy = 0; dy < P; ++dy)
                for (std::size_t dx = 0; dx < P; ++dx)
                    for (std::size_t ch = 0; ch < c; ++ch) dst[((i * P + dy) * wl + j * P + dx) * c + ch] = src[k++];
    return out;
}

/// Sin/cos features of `x` over `pairs` geometric frequencies, written to `out`.
template <typename T>
void sinusoid(T x, std::size_t pairs, T* out, double max_period = 10000.0) {
    for (std::size_t k = 0; k < pairs; ++k) {
        const double freq = std::pow(max_period, -static_cast<double>(k) / static_cast<double>(pairs));
        out[2 * k] = static_cast<T>(std::sin(x * freq));
        out[2 * k + 1] = static_cast<T>(std::cos(x * freq));
    }
}

/// Fixed 2-D sinusoidal embedding of a gh x gw token grid: row features then column features.
template <typename T>
Tensor<T> grid_position_embedding(std::size_t gh, std::size_t gw, std::size_t d) {
    Tensor<T> out(Shape{gh * gw, d});
    const std::size_t half = d / 2;
    for (std::size_t i = 0; i < gh; ++i)
        for (std::size_t j = 0; j < gw; ++j) {
            T* row = out.data().data() + (i * gw + j) * d;
            sinusoid<T>(static_cast<T>(i), half / 2, row, 100.0);
            sinusoid<T>(static_cast<T>(j), half / 2, row + half, 100.0);
        }
    return out;
}

template <typename T>
Tensor<T> sequence_position_embedding(std::size_t n, std::size_t d) {
    Tensor<T> out(Shape{n, d});
    for (std::size_t i = 0; i < n; ++i) sinusoid<T>(static_cast<T>(i), d / 2, out.data().data() + i * d, 100.0);
    return out;
}

// ---------------------------------------------------------------------------
// Blocks

template <typename T>
using ParamVars = std::map<std::string, Var<T>>;

template <typename T>
ParamVars<T> bind_params(Tape<T>& tape, const ModelParams<T>& params, bool requires_grad) {
    ParamVars<T> out;
    for (const auto& [name, t] : params.entries()) out.emplace(name, tape.leaf(t, requires_grad));
    return out;
}

namespace detail {

template <typename T>
const Var<T>& param(const ParamVars<T>& p, const std::string& name) {
    auto it = p.find(name);
    GLYPHFLOW_CHECK(it != p.end(), ErrorKind::invalid_argument, "backbone", "missing parameter ", name);
    return it->second;
}

template <typename T>
Var<T> linear(const ParamVars<T>& p, const std::string& prefix, const Var<T>& x) {
    return ops::add(ops::matmul(x, param(p, prefix + ".w")), param(p, prefix + ".b"));
}

template <typename T>
Var<T> norm(const Var<T>& x, const Var<T>& cond) {
    return ops::layer_norm(ops::add(x, cond), T(1e-6));
}

/// Multi-head scaled dot-product attention, no masking.
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, int heads) {
    const std::size_t d = q.shape()[1];
    const std::size_t dh = d / static_cast<std::size_t>(heads);
    GLYPHFLOW_CHECK(d % static_cast<std::size_t>(heads) == 0, ErrorKind::invalid_argument, "attention",
                    "width ", d, " not divisible by ", heads, " heads");
    const std::vector<std::size_t> sizes(static_cast<std::size_t>(heads), dh);
    auto qs = ops::split(q, 1, sizes);
    auto ks = ops::split(k, 1, sizes);
    auto vs = ops::split(v, 1, sizes);
    const T inv = T(1) / std::sqrt(static_cast<T>(dh));
    std::vector<Var<T>> outs;
    for (int h = 0; h < heads; ++h) {
        auto scores = ops::scale(ops::matmul(qs[h], ops::transpose(ks[h])), inv);
        outs.push_back(ops::matmul(ops::softmax(scores), vs[h]));
    }
    return heads == 1 ? outs[0] : ops::concat(outs, 1);
}

template <typename T>
Var<T> self_attention(const ParamVars<T>& p, const std::string& prefix, const Var<T>& x, int heads) {
    const std::size_t d = x.shape()[1];
    auto qkv = ops::split(linear(p, prefix + ".qkv", x), 1, {d, d, d});
    return linear(p, prefix + ".out", attention(qkv[0], qkv[1], qkv[2], heads));
}

template <typename T>
Var<T> cross_attention(const ParamVars<T>& p, const std::string& prefix, const Var<T>& x, const Var<T>& ctx,
                       int heads) {
    const std::size_t d = x.shape()[1];
    auto q = linear(p, prefix + ".q", x);
    auto kv = ops::split(linear(p, prefix + ".kv", ctx), 1, {d, d});
    return linear(p, prefix + ".out", attention(q, kv[0], kv[1], heads));
}

template <typename T>
Var<T> mlp(const ParamVars<T>& p, const std::string& prefix, const Var<T>& x) {
    return linear(p, prefix + ".fc2", ops::gelu(linear(p, prefix + ".fc1", x)));
}

}  // namespace detail

/// Conditioning vector [d] from time t in [0, 1] and guidance g.
template <typename T>
Var<T> cond_embed(Tape<T>& tape, const ParamVars<T>& p, const ModelConfig& cfg, T t, T guidance) {
    GLYPHFLOW_CHECK(t >= T(0) && t <= T(1), ErrorKind::invalid_argument, "cond_embed", "t must lie in [0, 1], got ", t);
    const std::size_t d = cfg.d_model;
    Tensor<T> feats(Shape{1, d});
    sinusoid<T>(t * T(1000), d / 4, feats.data().data());
    sinusoid<T>(guidance / T(30) * T(1000), d / 4, feats.data().data() + d / 2);
    auto x = tape.constant(std::move(feats));
    return ops::reshape(detail::mlp(p, "cond", x), Shape{d});
}

/// Dual-stream block: separate self-attention, cross-attention both ways, separate MLPs.
template <typename T>
std::pair<Var<T>, Var<T>> dual_stream_block(const ParamVars<T>& p, const std::string& prefix, const ModelConfig& cfg,
                                            Var<T> vis, Var<T> txt, const Var<T>& cond) {
    using namespace detail;
    const std::string v = prefix + ".vis", t = prefix + ".txt";
    vis = ops::add(vis, self_attention(p, v + ".attn", norm(vis, cond), cfg.heads));
    txt = ops::add(txt, self_attention(p, t + ".attn", norm(txt, cond), cfg.heads));
    auto vn = norm(vis, cond);
    auto tn = norm(txt, cond);
    auto cv = cross_attention(p, v + ".cross", vn, tn, cfg.heads);
    auto ct = cross_attention(p, t + ".cross", tn, vn, cfg.heads);
    vis = ops::add(vis, cv);
    txt = ops::add(txt, ct);
    vis = ops::add(vis, mlp(p, v + ".mlp", norm(vis, cond)));
    txt = ops::add(txt, mlp(p, t + ".mlp", norm(txt, cond)));
    return {vis, txt};
}

/// Single-stream block over the joint token sequence.
template <typename T>
Var<T> single_stream_block(const ParamVars<T>& p, const std::string& prefix, const ModelConfig& cfg, Var<T> x,
                           const Var<T>& cond) {
    using namespace detail;
    x = ops::add(x, self_attention(p, prefix + ".attn", norm(x, cond), cfg.heads));
    x = ops::add(x, mlp(p, prefix + ".mlp", norm(x, cond)));
    return x;
}

template <typename T = float>
struct ModelInput {
    Tensor<T> latent;   // [Hl, Wl, latent_channels]: noised target planes, then conditioning planes
    T t = T(1);
    T guidance = T(30);
    Tensor<T> content;  // [L, d_txt]
    Tensor<T> style;    // [1, d_txt]
};

/// Full forward pass on `tape`; returns the velocity in token layout [N_v, token_out].
template <typename T>
Var<T> forward_tokens(Tape<T>& tape, const ParamVars<T>& p, const ModelConfig& cfg, const ModelInput<T>& in) {
    GLYPHFLOW_CHECK(in.latent.rank() == 3 && in.latent.dim(2) == static_cast<std::size_t>(cfg.latent_channels()),
                    ErrorKind::shape_mismatch, "forward", "latent ", shape_str(in.latent.shape()), " expected ",
                    cfg.latent_channels(), " channels");
    GLYPHFLOW_CHECK(in.content.rank() == 2 && in.content.dim(1) == static_cast<std::size_t>(cfg.d_txt) &&
                        in.style.shape() == Shape({1, static_cast<std::size_t>(cfg.d_txt)}),
                    ErrorKind::shape_mismatch, "forward", "text embeddings must have width ", cfg.d_txt);
    const std::size_t d = cfg.d_model;
    const std::size_t gh = in.latent.dim(0) / cfg.patch, gw = in.latent.dim(1) / cfg.patch;
    auto tokens = tape.constant(patchify(in.latent, cfg.patch));
    auto vis = ops::add(detail::linear(p, "vis_in", tokens), tape.constant(grid_position_embedding<T>(gh, gw, d)));
    auto content = ops::add(detail::linear(p, "txt_in", tape.constant(in.content)),
                            tape.constant(sequence_position_embedding<T>(in.content.dim(0), d)));
    auto style = detail::linear(p, "style_in", tape.constant(in.style));
    auto txt = ops::concat<T>({content, style}, 0);
    auto cond = cond_embed(tape, p, cfg, in.t, in.guidance);

    for (int i = 0; i < cfg.dual_blocks; ++i)
        std::tie(vis, txt) = dual_stream_block(p, "dual" + std::to_string(i), cfg, vis, txt, cond);
    const std::size_t nv = vis.shape()[0], nt = txt.shape()[0];
    auto x = ops::concat<T>({vis, txt}, 0);
    for (int i = 0; i < cfg.single_blocks; ++i) x = single_stream_block(p, "single" + std::to_string(i), cfg, x, cond);
    auto parts = ops::split(x, 0, {nv, nt});
    return detail::linear(p, "head", ops::layer_norm(parts[0], T(1e-6)));
}

/// Inference forward: latent-shaped velocity for the target planes.
template <typename T>
Tensor<T> forward(const ModelParams<T>& params, const ModelConfig& cfg, const ModelInput<T>& in) {
    Tape<T> tape;
    auto p = bind_params(tape, params, false);
    auto tokens = forward_tokens(tape, p, cfg, in);
    return unpatchify(tokens.value(), cfg.patch, in.latent.dim(0), in.latent.dim(1));
}

}  // namespace glyphflow
