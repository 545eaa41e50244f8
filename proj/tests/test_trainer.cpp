// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "glyphflow/trainer.hpp"
#include "test_util.hpp"

using namespace glyphflow;
using glyphflow::testing::throws_kind;

namespace {

ModelConfig small_model() {
    ModelConfig c;
    c.d_model = 8;
    c.heads = 2;
    c.dual_blocks = 1;
    c.single_blocks = 1;
    return c;
}

TrainConfig small_train(Stage stage, int steps) {
    TrainConfig c = TrainConfig::for_stage(stage);
    c.model = small_model();
    c.max_steps = steps;
    c.accum_steps = 2;
    c.optimizer.lr = 1e-3;
    return c;
}

std::vector<LoadedSample> samples(int n, Alphabet lang, bool paired, std::uint64_t base = 1) {
    std::vector<LoadedSample> out;
    for (int i = 0; i < n; ++i) {
        const PairedSample p = synth_record(derive_seed(base, static_cast<std::uint64_t>(i)), lang, paired, false, {});
        out.push_back({std::to_string(i), p.source.image, p.edited.image, p.source.mask, p.source.text, p.edited.text,
                       lang});
    }
    return out;
}

ModelParams<float> scalar_param(float w) {
    ModelParams<float> p;
    p.add("w", Tensor<float>(Shape{1}, {w}));
    return p;
}

}  // namespace

TEST(AdamW, ZeroGradientZeroDecayLeavesParams) {
    ModelParams<float> p = scalar_param(0.75f);
    OptimizerState s = OptimizerState::zeros_like(p);
    AdamWConfig cfg;
    cfg.weight_decay = 0;
    for (int i = 0; i < 5; ++i) ASSERT_TRUE(adamw_step(p, {Tensor<float>(Shape{1})}, s, cfg));
    EXPECT_EQ(p.get("w")[0], 0.75f);
    EXPECT_EQ(s.step, 5u);
}

TEST(AdamW, DecayAloneShrinksMagnitude) {
    ModelParams<float> p = scalar_param(-2.0f);
    OptimizerState s = OptimizerState::zeros_like(p);
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    float prev = 2.0f;
    for (int i = 0; i < 20; ++i) {
        adamw_step(p, {Tensor<float>(Shape{1})}, s, cfg);
        const float now = std::abs(p.get("w")[0]);
        ASSERT_LT(now, prev);
        prev = now;
    }
}

TEST(AdamW, QuadraticMatchesScalarSimulation) {
    AdamWConfig cfg;
    cfg.lr = 0.01;
    ModelParams<float> p = scalar_param(1.0f);
    OptimizerState s = OptimizerState::zeros_like(p);
    double w = 1.0, m = 0, v = 0;
    double prev = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const float g = 2.0f * p.get("w")[0];
        adamw_step(p, {Tensor<float>(Shape{1}, {g})}, s, cfg);
        const double gd = 2.0 * w;
        m = cfg.beta1 * m + (1 - cfg.beta1) * gd;
        v = cfg.beta2 * v + (1 - cfg.beta2) * gd * gd;
        const double mh = m / (1 - std::pow(cfg.beta1, k)), vh = v / (1 - std::pow(cfg.beta2, k));
        w = w * (1 - cfg.lr * cfg.weight_decay) - cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        ASSERT_NEAR(p.get("w")[0], w, 1e-4) << "step " << k;
        ASSERT_LT(std::abs(w), prev);
        prev = std::abs(w);
    }
}

TEST(AdamW, NonFiniteGradientSkipsStep) {
    ModelParams<float> p = scalar_param(1.0f);
    p.add("b", Tensor<float>(Shape{2}, {1.0f, 2.0f}));
    OptimizerState s = OptimizerState::zeros_like(p);
    const ModelParams<float> before = p;
    const OptimizerState s_before = s;
    EXPECT_FALSE(adamw_step(p, {Tensor<float>(Shape{1}, {1.0f}), Tensor<float>(Shape{2}, {NAN, 0.0f})}, s, {}));
    EXPECT_TRUE(p == before);
    EXPECT_EQ(s.m, s_before.m);
    EXPECT_EQ(s.step, 0u);
    EXPECT_EQ(s.skipped, 1u);
    EXPECT_TRUE(throws_kind([&] { adamw_step(p, {Tensor<float>(Shape{1})}, s, {}); }, ErrorKind::shape_mismatch));
}

TEST(Checkpoint, FileRoundTripIsExact) {
    const auto dir = glyphflow::testing::scratch_dir("ckpt");
    const auto r = train_stage(small_train(Stage::pretrain, 2), samples(4, Alphabet::english, false));
    save_checkpoint(dir / "a.mste", r.checkpoint);
    const Checkpoint back = load_checkpoint(dir / "a.mste");
    EXPECT_TRUE(back.params == r.checkpoint.params);
    EXPECT_EQ(back.config, r.checkpoint.config);
    EXPECT_EQ(back.step, 2u);
    EXPECT_EQ(back.stage, Stage::pretrain);
    ASSERT_TRUE(back.optimizer.has_value());
    EXPECT_EQ(*back.optimizer, *r.checkpoint.optimizer);
    EXPECT_EQ(back.codec.fingerprint(), r.checkpoint.codec.fingerprint());
    EXPECT_TRUE(throws_kind([&] { load_checkpoint(dir / "missing.mste"); }, ErrorKind::data_error));
}

TEST(TrainStage, CountersAndLog) {
    TrainConfig cfg = small_train(Stage::pretrain, 3);
    cfg.accum_steps = 4;
    cfg.batch_per_step = 2;
    cfg.checkpoint_every = 2;
    int checkpoints = 0;
    TrainHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& ck) {
        ++checkpoints;
        EXPECT_EQ(ck.step, 2u);
    };
    const auto r = train_stage(cfg, samples(3, Alphabet::french, false), std::nullopt, false, hooks);
    EXPECT_EQ(r.micro_batches, 12u);
    EXPECT_EQ(r.optimizer_steps, 3u);
    EXPECT_EQ(r.skipped_steps, 0u);
    EXPECT_EQ(checkpoints, 1);
    ASSERT_EQ(r.log.size(), 3u);
    for (std::size_t i = 0; i < r.log.size(); ++i) {
        EXPECT_EQ(r.log[i].step, i + 1);
        EXPECT_TRUE(std::isfinite(r.log[i].loss));
        EXPECT_DOUBLE_EQ(r.log[i].lr, 1e-3);
    }
    EXPECT_EQ(r.checkpoint.optimizer->step, 3u);
    EXPECT_EQ(r.frozen_before, r.frozen_after);
    EXPECT_EQ(r.frozen_before, frozen_checksum(LatentCodec(2, 1)));
    std::ostringstream os;
    write_loss_log(os, r.log);
    const std::string text = os.str();
    EXPECT_EQ(text.rfind("1 ", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(TrainStage, ResumeReplaysUninterruptedRun) {
    const auto dir = glyphflow::testing::scratch_dir("resume");
    const auto data = samples(5, Alphabet::english, false);
    const auto full = train_stage(small_train(Stage::pretrain, 4), data);
    const auto half = train_stage(small_train(Stage::pretrain, 2), data);
    save_checkpoint(dir / "half.mste", half.checkpoint);
    const auto rest = train_stage(small_train(Stage::pretrain, 4), data, load_checkpoint(dir / "half.mste"), true);
    EXPECT_TRUE(rest.checkpoint.params == full.checkpoint.params);
    EXPECT_EQ(*rest.checkpoint.optimizer, *full.checkpoint.optimizer);
    ASSERT_EQ(rest.log.size(), 2u);
    EXPECT_EQ(rest.log[0], full.log[2]);
    EXPECT_EQ(rest.log[1], full.log[3]);
    EXPECT_EQ(half.log[0], full.log[0]);
}

TEST(TrainStage, ResumeAndConfigErrors) {
    const auto data = samples(2, Alphabet::english, false);
    const auto r = train_stage(small_train(Stage::pretrain, 1), data);
    Checkpoint no_opt = r.checkpoint;
    no_opt.optimizer.reset();
    EXPECT_TRUE(throws_kind([&] { train_stage(small_train(Stage::pretrain, 2), data, no_opt, true); },
                            ErrorKind::invalid_argument));
    TrainConfig other = small_train(Stage::pretrain, 2);
    other.model.d_model = 16;
    EXPECT_TRUE(throws_kind([&] { train_stage(other, data, r.checkpoint); }, ErrorKind::invalid_argument));
    EXPECT_TRUE(throws_kind([&] { train_stage(small_train(Stage::pretrain, 1), {}); }, ErrorKind::data_error));
    EXPECT_TRUE(throws_kind([&] { train_stage(small_train(Stage::cooldown, 1), data); }, ErrorKind::data_error));
}

TEST(TrainStage, DegenerateCooldownHasZeroLossAtInit) {
    auto data = samples(3, Alphabet::english, true);
    for (auto& s : data) s.edited = s.source;
    const auto r = train_stage(small_train(Stage::cooldown, 1), data);
    ASSERT_EQ(r.log.size(), 1u);
    EXPECT_EQ(r.log[0].loss, 0.0);
    EXPECT_EQ(r.checkpoint.stage, Stage::cooldown);
    EXPECT_EQ(r.checkpoint.prompt, PromptConfig::text_glyph_style);
}

TEST(TrainStage, TrainingChangesOnlyTransformerParameters) {
    const auto data = samples(3, Alphabet::korean, false);
    const Checkpoint init = Checkpoint::fresh(small_model(), 3);
    const auto r = train_stage(small_train(Stage::pretrain, 3), data, init);
    EXPECT_FALSE(r.checkpoint.params == init.params);
    EXPECT_EQ(r.frozen_after, frozen_checksum(init.codec));
    EXPECT_TRUE(r.checkpoint.params.all_finite());
}

TEST(TrainConfigFile, ParseDefaultsAndErrors) {
    std::istringstream is("# cooldown\nstage = cooldown\nlr=1e-4\n\naccum_steps=4\nmax_steps=7\nd_model=16\n");
    const TrainConfig c = parse_train_config(is);
    EXPECT_EQ(c.stage, Stage::cooldown);
    EXPECT_EQ(c.prompt_config, PromptConfig::text_glyph_style);
    EXPECT_TRUE(c.paired);
    EXPECT_DOUBLE_EQ(c.optimizer.lr, 1e-4);
    EXPECT_EQ(c.accum_steps, 4);
    EXPECT_EQ(c.model.d_model, 16);

    std::istringstream dflt("");
    const TrainConfig d = parse_train_config(dflt);
    EXPECT_EQ(d.stage, Stage::pretrain);
    EXPECT_EQ(d.prompt_config, PromptConfig::text_glyph);
    EXPECT_DOUBLE_EQ(d.optimizer.lr, 2e-5);
    EXPECT_EQ(d.accum_steps, 8);
    EXPECT_EQ(d.seed, 42u);

    for (const char* bad : {"lr=0\n", "accum_steps=0\n", "bogus=1\n", "stage=cooldown\npaired=false\n", "lr=abc\n",
                            "just text\n", "heads=3\n"}) {
        std::istringstream b(bad);
        EXPECT_TRUE(throws_kind([&] { parse_train_config(b); }, ErrorKind::invalid_argument)) << bad;
    }
}

TEST(TrainConfigFile, WriteParseRoundTrip) {
    TrainConfig c = TrainConfig::for_stage(Stage::cooldown);
    c.optimizer.lr = 3e-4;
    c.max_steps = 11;
    c.prompt_config = PromptConfig::text_style;
    c.layout = PromptLayout::frame;
    std::stringstream ss;
    write_train_config(ss, c);
    const TrainConfig back = parse_train_config(ss);
    EXPECT_EQ(back.stage, c.stage);
    EXPECT_EQ(back.prompt_config, c.prompt_config);
    EXPECT_EQ(back.layout, c.layout);
    EXPECT_DOUBLE_EQ(back.optimizer.lr, c.optimizer.lr);
    EXPECT_EQ(back.max_steps, 11);
    EXPECT_EQ(back.model, c.model);
}

TEST(Inference, DefaultSamplerFollowsStage) {
    Checkpoint ck = Checkpoint::fresh(small_model(), 1);
    EXPECT_EQ(default_sampler(ck).init, SamplerInit::noise);
    EXPECT_EQ(default_sampler(ck).steps, 30);
    EXPECT_FLOAT_EQ(default_sampler(ck).guidance, 30.0f);
    ck.stage = Stage::cooldown;
    EXPECT_EQ(default_sampler(ck).init, SamplerInit::source);
}

TEST(Inference, EditRejectsWrongResolution) {
    const Checkpoint ck = Checkpoint::fresh(small_model(), 1);
    EXPECT_TRUE(throws_kind([&] { edit_image(ck, ImageBuffer(32, 32, 3), BinaryMask(32, 32), "A",
                                             font_for(Alphabet::english), default_sampler(ck)); },
                            ErrorKind::data_error));
}

TEST(Inference, EvaluateEditsIsDeterministic) {
    const Checkpoint ck = Checkpoint::fresh(small_model(), 1);
    const auto data = samples(3, Alphabet::english, true);
    SamplerConfig sc = default_sampler(ck);
    sc.steps = 2;
    std::vector<ImageBuffer> out1, out2;
    const auto a = evaluate_edits(ck, data, sc, &out1);
    const auto b = evaluate_edits(ck, data, sc, &out2);
    ASSERT_EQ(a.outcomes.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_TRUE(std::equal(out1[i].data().begin(), out1[i].data().end(), out2[i].data().begin()));
        EXPECT_EQ(a.outcomes[i].recognized, b.outcomes[i].recognized);
    }
    EXPECT_GE(a.seq_acc, 0.0);
    EXPECT_LE(a.seq_acc, 1.0);
}

TEST(Protocol, LowerTriangularReport) {
    const std::vector<Alphabet> order{Alphabet::arabic, Alphabet::english, Alphabet::french};
    std::map<Alphabet, std::vector<LoadedSample>> train, eval;
    for (Alphabet a : order) {
        train[a] = samples(3, a, false, 5);
        eval[a] = samples(2, a, true, 6);
    }
    TrainConfig cfg = small_train(Stage::pretrain, 1);
    cfg.accum_steps = 1;
    SamplerConfig sc;
    sc.steps = 2;
    const ProtocolReport rep = incremental_protocol(order, train, eval, cfg, sc);
    ASSERT_EQ(rep.accuracy.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_EQ(rep.accuracy[i][k].has_value(), k >= i) << i << "," << k;
            if (rep.accuracy[i][k]) {
                EXPECT_GE(*rep.accuracy[i][k], 0.0);
                EXPECT_LE(*rep.accuracy[i][k], 1.0);
            }
        }
    EXPECT_EQ(rep.row(0).size(), 3u);
    EXPECT_EQ(rep.row(2).size(), 1u);
    ASSERT_EQ(rep.log.size(), 3u);
    EXPECT_EQ(rep.log.back().step, 3u);
    std::ostringstream os;
    rep.write(os);
    EXPECT_NE(os.str().find("order=arabic,english,french\n"), std::string::npos);
    EXPECT_NE(os.str().find("trend.french="), std::string::npos);

    auto missing = eval;
    missing.erase(Alphabet::french);
    EXPECT_TRUE(throws_kind([&] { incremental_protocol(order, train, missing, cfg, sc); }, ErrorKind::data_error));
    EXPECT_TRUE(throws_kind([&] { incremental_protocol({Alphabet::arabic, Alphabet::arabic}, train, eval, cfg, sc); },
                            ErrorKind::invalid_argument));
}
