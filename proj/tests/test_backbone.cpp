// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "glyphflow/backbone.hpp"
#include "glyphflow/encoders.hpp"
#include "test_util.hpp"

using namespace glyphflow;
using glyphflow::testing::throws_kind;

namespace {

// 16 visual tokens: 16x16 image -> 8x8 latent grid -> 4x4 tokens.
ModelConfig tiny_config() {
    ModelConfig c;
    c.d_model = 8;
    c.heads = 2;
    c.dual_blocks = 1;
    c.single_blocks = 1;
    c.d_txt = 8;
    c.resolution = 16;
    return c;
}

template <typename T>
ModelInput<T> random_input(const ModelConfig& c, std::uint64_t seed, std::size_t text_len = 3) {
    const std::size_t hl = static_cast<std::size_t>(c.resolution / c.codec_patch);
    ModelInput<T> in;
    in.latent = seeded_randn<T>(Shape{hl, hl, static_cast<std::size_t>(c.latent_channels())}, derive_seed(seed, 1));
    in.content = seeded_randn<T>(Shape{text_len, static_cast<std::size_t>(c.d_txt)}, derive_seed(seed, 2));
    in.style = seeded_randn<T>(Shape{1, static_cast<std::size_t>(c.d_txt)}, derive_seed(seed, 3));
    CounterRng rng(seed);
    in.t = static_cast<T>(rng.uniform());
    in.guidance = static_cast<T>(rng.uniform(1, 40));
    return in;
}

// Flattens all parameters into one vector and back, for whole-model finite differences.
template <typename T>
Tensor<T> flatten(const ModelParams<T>& p) {
    std::vector<T> v;
    for (const auto& [_, t] : p.entries()) v.insert(v.end(), t.data().begin(), t.data().end());
    const std::size_t n = v.size();
    return Tensor<T>(Shape{n}, std::move(v));
}

template <typename T>
ModelParams<T> unflatten(const ModelParams<T>& like, const Tensor<T>& flat) {
    ModelParams<T> out;
    std::size_t k = 0;
    for (const auto& [name, t] : like.entries()) {
        Tensor<T> u(t.shape());
        for (auto& v : u.data()) v = flat[k++];
        out.add(name, std::move(u));
    }
    return out;
}

}  // namespace

TEST(Patchify, RoundTripAndCount) {
    const auto z = seeded_randn(Shape{8, 6, 5}, 1);
    const auto tok = patchify(z, 2);
    EXPECT_EQ(tok.shape(), (Shape{12, 20}));
    EXPECT_TRUE(bitwise_equal(unpatchify(tok, 2, 8, 6), z));
    EXPECT_TRUE(throws_kind([&] { patchify(z, 4); }, ErrorKind::shape_mismatch));
    EXPECT_TRUE(throws_kind([&] { unpatchify(tok, 2, 8, 8); }, ErrorKind::shape_mismatch));
}

TEST(Patchify, SingleTokenIsFlattenedPatch) {
    const auto z = seeded_randn(Shape{2, 2, 3}, 2);
    const auto tok = patchify(z, 2);
    ASSERT_EQ(tok.shape(), (Shape{1, 12}));
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(tok[i], z[i]);
}

TEST(ModelConfig, Validation) {
    ModelConfig c;
    EXPECT_NO_THROW(c.validate());
    c.heads = 3;
    EXPECT_TRUE(throws_kind([&] { c.validate(); }, ErrorKind::invalid_argument));
    c = ModelConfig{};
    c.single_blocks = 0;
    EXPECT_TRUE(throws_kind([&] { c.validate(); }, ErrorKind::invalid_argument));
}

TEST(ModelConfig, DefaultLatentGeometry) {
    const ModelConfig c;
    EXPECT_EQ(c.latent_target_channels(), 12);
    EXPECT_EQ(c.latent_cond_channels(), 32);
    EXPECT_EQ(c.token_in(), 176);
    EXPECT_EQ(c.token_out(), 48);
}

TEST(ModelParams, CountMatchesClosedForm) {
    for (const ModelConfig& c : {ModelConfig{}, tiny_config()}) {
        // each linear layer is (in + 1) * out
        auto lin = [](std::size_t in, std::size_t out) { return (in + 1) * out; };
        const std::size_t d = c.d_model, h = 4 * d;
        const std::size_t attn = lin(d, 3 * d) + lin(d, d);
        const std::size_t cross = lin(d, d) + lin(d, 2 * d) + lin(d, d);
        const std::size_t mlp = lin(d, h) + lin(h, d);
        const std::size_t expect = 2 * lin(d, d) + lin(c.token_in(), d) + 2 * lin(c.d_txt, d) +
                                   c.dual_blocks * 2 * (attn + cross + mlp) + c.single_blocks * (attn + mlp) +
                                   lin(d, c.token_out());
        EXPECT_EQ(c.parameter_count(), expect);
        EXPECT_EQ(init_params(c, 1).scalar_count(), expect);
    }
}

TEST(ModelParams, NamesUniqueAndInitFinite) {
    const auto p = init_params(ModelConfig{}, 3);
    std::set<std::string> names;
    for (const auto& [n, t] : p.entries()) EXPECT_TRUE(names.insert(n).second) << n;
    EXPECT_TRUE(p.all_finite());
    EXPECT_TRUE(p == init_params(ModelConfig{}, 3));
    EXPECT_FALSE(p == init_params(ModelConfig{}, 4));
    ModelParams<float> dup;
    dup.add("x", Tensor<float>(Shape{1}));
    EXPECT_TRUE(throws_kind([&] { dup.add("x", Tensor<float>(Shape{1})); }, ErrorKind::invalid_argument));
}

TEST(CondEmbed, DeterministicAndNonDegenerate) {
    const ModelConfig c;
    const auto params = init_params(c, 5, InitMode::random);
    auto embed = [&](float t, float g) {
        Tape<float> tape;
        auto p = bind_params(tape, params, false);
        return cond_embed(tape, p, c, t, g).value();
    };
    EXPECT_TRUE(bitwise_equal(embed(0.3f, 30.0f), embed(0.3f, 30.0f)));
    EXPECT_FALSE(bitwise_equal(embed(0.0f, 30.0f), embed(1.0f, 30.0f)));
    EXPECT_EQ(embed(0.5f, 30.0f).shape(), (Shape{static_cast<std::size_t>(c.d_model)}));
    EXPECT_TRUE(throws_kind([&] { embed(1.5f, 30.0f); }, ErrorKind::invalid_argument));
}

TEST(CondEmbed, GradientMatchesFiniteDifferences) {
    const ModelConfig c = tiny_config();
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto params = init_params<double>(c, s, InitMode::random);
        const auto w = seeded_randn<double>(Shape{static_cast<std::size_t>(c.d_model)}, derive_seed(s, 9));
        for (const std::string name : {"cond.fc1.w", "cond.fc2.w", "cond.fc1.b"}) {
            auto loss_of = [&](const ModelParams<double>& pp, Tape<double>& tape, ParamVars<double>& vars) {
                vars = bind_params(tape, pp, true);
                return ops::sum(ops::mul(cond_embed(tape, vars, c, 0.37, 30.0), tape.constant(w)));
            };
            Tape<double> tape;
            ParamVars<double> vars;
            auto loss = loss_of(params, tape, vars);
            const auto g = tape.backward(loss);
            auto f = [&](const Tensor<double>& x) {
                ModelParams<double> pp = params;
                pp.get(name) = x;
                Tape<double> t;
                ParamVars<double> v;
                return loss_of(pp, t, v).value().item();
            };
            const auto fd = finite_diff_grad(f, params.get(name), 1e-5);
            ASSERT_LT(relative_error(g[vars.at(name)], fd), 1e-3) << name << " seed " << s;
        }
    }
}

TEST(Blocks, ZeroOutputProjectionsAreIdentity) {
    const ModelConfig c = tiny_config();
    auto params = init_params(c, 2, InitMode::random);
    for (auto& [name, t] : params.entries())
        if (name.find(".out.") != std::string::npos || name.find(".fc2.") != std::string::npos) {
            if (name.rfind("cond.", 0) == 0) continue;
            for (auto& v : t.data()) v = 0;
        }
    Tape<float> tape;
    auto p = bind_params(tape, params, false);
    auto vis = tape.constant(seeded_randn(Shape{4, 8}, 1));
    auto txt = tape.constant(seeded_randn(Shape{3, 8}, 2));
    auto cond = cond_embed(tape, p, c, 0.5f, 30.0f);
    auto [v2, t2] = dual_stream_block(p, "dual0", c, vis, txt, cond);
    EXPECT_TRUE(bitwise_equal(v2.value(), vis.value()));
    EXPECT_TRUE(bitwise_equal(t2.value(), txt.value()));
    auto joint = ops::concat<float>({vis, txt}, 0);
    auto out = single_stream_block(p, "single0", c, joint, cond);
    EXPECT_TRUE(bitwise_equal(out.value(), joint.value()));
}

TEST(Blocks, ShapesPreserved) {
    const ModelConfig c = tiny_config();
    const auto params = init_params(c, 2, InitMode::random);
    Tape<float> tape;
    auto p = bind_params(tape, params, false);
    auto vis = tape.constant(seeded_randn(Shape{4, 8}, 1));
    auto txt = tape.constant(seeded_randn(Shape{5, 8}, 2));
    auto cond = cond_embed(tape, p, c, 0.5f, 30.0f);
    auto [v2, t2] = dual_stream_block(p, "dual0", c, vis, txt, cond);
    EXPECT_EQ(v2.shape(), vis.shape());
    EXPECT_EQ(t2.shape(), txt.shape());
    auto out = single_stream_block(p, "single0", c, ops::concat<float>({v2, t2}, 0), cond);
    EXPECT_EQ(out.shape(), (Shape{9, 8}));
}

namespace {

// Whole-parameter gradient of <block output, w> vs finite differences.
template <typename Build>
double block_gradient_error(const ModelConfig& c, std::uint64_t seed, Build build) {
    const auto params = init_params<double>(c, seed, InitMode::random);
    auto loss_of = [&](const ModelParams<double>& pp, Tape<double>& tape) {
        auto vars = bind_params(tape, pp, true);
        return std::make_pair(build(tape, vars), vars);
    };
    Tape<double> tape;
    auto [loss, vars] = loss_of(params, tape);
    const auto g = tape.backward(loss);
    std::vector<double> analytic;
    for (const auto& [name, t] : params.entries()) {
        const auto& gt = g[vars.at(name)];
        analytic.insert(analytic.end(), gt.data().begin(), gt.data().end());
    }
    const auto flat = flatten(params);
    auto f = [&](const Tensor<double>& x) {
        Tape<double> t;
        return loss_of(unflatten(params, x), t).first.value().item();
    };
    return relative_error(Tensor<double>(flat.shape(), analytic), finite_diff_grad(f, flat, 1e-5));
}

}  // namespace

TEST(Blocks, DualStreamGradientCheck) {
    const ModelConfig c = tiny_config();
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto vis0 = seeded_randn<double>(Shape{4, 8}, derive_seed(s, 1));
        const auto txt0 = seeded_randn<double>(Shape{4, 8}, derive_seed(s, 2));
        const auto w1 = seeded_randn<double>(Shape{4, 8}, derive_seed(s, 3));
        const auto w2 = seeded_randn<double>(Shape{4, 8}, derive_seed(s, 4));
        const double err = block_gradient_error(c, s, [&](Tape<double>& tape, const ParamVars<double>& p) {
            auto cond = cond_embed(tape, p, c, 0.25, 30.0);
            auto [v, t] = dual_stream_block(p, "dual0", c, tape.constant(vis0), tape.constant(txt0), cond);
            return ops::add(ops::sum(ops::mul(v, tape.constant(w1))), ops::sum(ops::mul(t, tape.constant(w2))));
        });
        EXPECT_LT(err, 1e-3) << "seed " << s;
    }
}

TEST(Blocks, SingleStreamGradientCheck) {
    const ModelConfig c = tiny_config();
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto x0 = seeded_randn<double>(Shape{6, 8}, derive_seed(s, 1));
        const auto w = seeded_randn<double>(Shape{6, 8}, derive_seed(s, 3));
        const double err = block_gradient_error(c, s, [&](Tape<double>& tape, const ParamVars<double>& p) {
            auto cond = cond_embed(tape, p, c, 0.75, 12.0);
            auto out = single_stream_block(p, "single0", c, tape.constant(x0), cond);
            return ops::sum(ops::mul(out, tape.constant(w)));
        });
        EXPECT_LT(err, 1e-3) << "seed " << s;
    }
}

TEST(Forward, HeadBiasOnlyGivesConstant) {
    const ModelConfig c = tiny_config();
    auto params = init_params(c, 1, InitMode::zero);
    auto& b = params.get("head.b");
    for (std::size_t i = 0; i < b.numel(); ++i) b[i] = 0.1f * static_cast<float>(i) - 1.0f;
    const auto in = random_input<float>(c, 4);
    const auto out = forward(params, c, in);
    ASSERT_EQ(out.shape(), (Shape{8, 8, static_cast<std::size_t>(c.latent_target_channels())}));
    const auto tok = patchify(out, c.patch);
    for (std::size_t r = 0; r < tok.dim(0); ++r)
        for (std::size_t k = 0; k < tok.dim(1); ++k) ASSERT_EQ(tok[r * tok.dim(1) + k], b[k]);
}

TEST(Forward, IdentityAtInitReducesToProjections) {
    // With zero residual branches the output is head(LN(vis_in(tokens) + pos)).
    const ModelConfig c = tiny_config();
    auto params = init_params<double>(c, 6, InitMode::standard);
    params.get("head.w") = seeded_randn<double>(params.get("head.w").shape(), 77);
    const auto in = random_input<double>(c, 8);
    const auto out = forward(params, c, in);

    Tape<double> tape;
    auto p = bind_params(tape, params, false);
    auto tokens = tape.constant(patchify(in.latent, c.patch));
    auto vis = ops::add(ops::add(ops::matmul(tokens, p.at("vis_in.w")), p.at("vis_in.b")),
                        tape.constant(grid_position_embedding<double>(4, 4, 8)));
    auto head = ops::add(ops::matmul(ops::layer_norm(vis, 1e-6), p.at("head.w")), p.at("head.b"));
    const auto expect = unpatchify(head.value(), c.patch, 8, 8);
    EXPECT_LT(relative_error(out, expect), 1e-12);
}

TEST(Forward, BitwiseRepeatable) {
    const ModelConfig c;
    const auto params = init_params(c, 9, InitMode::random);
    ModelInput<float> in = random_input<float>(c, 1, 4);
    EXPECT_TRUE(bitwise_equal(forward(params, c, in), forward(params, c, in)));
}

TEST(Forward, ShapeErrors) {
    const ModelConfig c = tiny_config();
    const auto params = init_params(c, 1);
    auto in = random_input<float>(c, 1);
    in.latent = Tensor<float>(Shape{8, 8, 10});
    EXPECT_TRUE(throws_kind([&] { forward(params, c, in); }, ErrorKind::shape_mismatch));
    in = random_input<float>(c, 1);
    in.style = Tensor<float>(Shape{2, 8});
    EXPECT_TRUE(throws_kind([&] { forward(params, c, in); }, ErrorKind::shape_mismatch));
}

TEST(Forward, FullModelGradientCheck) {
    const ModelConfig c = tiny_config();
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto in = random_input<double>(c, derive_seed(s, 100));
        const auto target = seeded_randn<double>(Shape{16, static_cast<std::size_t>(c.token_out())}, derive_seed(s, 5));
        const double err = block_gradient_error(c, s, [&](Tape<double>& tape, const ParamVars<double>& p) {
            return ops::squared_error(forward_tokens(tape, p, c, in), tape.constant(target));
        });
        EXPECT_LT(err, 1e-3) << "seed " << s;
    }
}
