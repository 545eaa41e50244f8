// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Training stages, edit-time inference and the incremental multilingual protocol.
//
// Config files are flat `key=value` lines; blank lines and lines starting
// with '#' are ignored. Keys:
//
//   stage             pretrain | cooldown
//   prompt_config     TextOnly | TextGlyph | TextStyle | TextGlyphStyle
//                     (default TextGlyph for pretrain, TextGlyphStyle for cooldown)
//   paired            true | false (default false for pretrain, true for cooldown)
//   layout            region | frame
//   lr, beta1, beta2, eps, weight_decay
//   accum_steps, batch_per_step, max_steps, seed, checkpoint_every
//   guidance          conditioning guidance value fed to the model
//   sample_steps      sampler steps used by evaluation
//   d_model, heads, dual_blocks, single_blocks, patch, resolution, mlp_ratio

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "glyphflow/backbone.hpp"
#include "glyphflow/checkpoint.hpp"
#include "glyphflow/dataset.hpp"
#include "glyphflow/flow.hpp"
#include "glyphflow/metrics.hpp"
#include "glyphflow/optim.hpp"
#include "glyphflow/parallel.hpp"
#include "glyphflow/prompt.hpp"

namespace glyphflow {

struct TrainConfig {
    Stage stage = Stage::pretrain;
    PromptConfig prompt_config = PromptConfig::text_glyph;
    bool paired = false;
    PromptLayout layout = PromptLayout::region;
    AdamWConfig optimizer;
    int accum_steps = 8;
    int batch_per_step = 1;
    int max_steps = 100;
    std::uint64_t seed = 42;
    int checkpoint_every = 0;  // 0: only the final checkpoint
    float guidance = 30.0f;
    int sample_steps = 30;
    ModelConfig model;

    void validate() const {
        GLYPHFLOW_CHECK(optimizer.lr > 0, ErrorKind::invalid_argument, "TrainConfig", "lr must be > 0");
        GLYPHFLOW_CHECK(accum_steps >= 1 && batch_per_step >= 1, ErrorKind::invalid_argument, "TrainConfig",
                        "accum_steps and batch_per_step must be >= 1");
        GLYPHFLOW_CHECK(max_steps >= 0 && checkpoint_every >= 0 && sample_steps >= 1, ErrorKind::invalid_argument,
                        "TrainConfig", "step counts must be non-negative");
        GLYPHFLOW_CHECK(stage == Stage::pretrain || paired, ErrorKind::invalid_argument, "TrainConfig",
                        "cooldown requires paired=true");
        model.validate();
    }

    static TrainConfig for_stage(Stage s) {
        TrainConfig c;
        c.stage = s;
        if (s == Stage::cooldown) {
            c.prompt_config = PromptConfig::text_glyph_style;
            c.paired = true;
        }
        return c;
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& k, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    GLYPHFLOW_THROW(ErrorKind::invalid_argument, "config", k, ": expected true/false, got '", v, "'");
}

template <typename N>
N parse_number(const std::string& k, const std::string& v) {
    std::istringstream is(v);
    N out{};
    is >> out;
    GLYPHFLOW_CHECK(!is.fail() && is.eof(), ErrorKind::invalid_argument, "config", k, ": bad number '", v, "'");
    return out;
}

}  // namespace detail

inline TrainConfig parse_train_config(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        GLYPHFLOW_CHECK(eq != std::string::npos, ErrorKind::invalid_argument, "config", "line ", lineno,
                        ": expected key=value");
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    TrainConfig c = TrainConfig::for_stage(kv.count("stage") ? stage_from_string(kv["stage"]) : Stage::pretrain);
    for (const auto& [k, v] : kv) {
        using detail::parse_number;
        if (k == "stage") continue;
        else if (k == "prompt_config") c.prompt_config = prompt_config_from_string(v);
        else if (k == "paired") c.paired = detail::parse_bool(k, v);
        else if (k == "layout") c.layout = prompt_layout_from_string(v);
        else if (k == "lr") c.optimizer.lr = parse_number<double>(k, v);
        else if (k == "beta1") c.optimizer.beta1 = parse_number<double>(k, v);
        else if (k == "beta2") c.optimizer.beta2 = parse_number<double>(k, v);
        else if (k == "eps") c.optimizer.eps = parse_number<double>(k, v);
        else if (k == "weight_decay") c.optimizer.weight_decay = parse_number<double>(k, v);
        else if (k == "accum_steps") c.accum_steps = parse_number<int>(k, v);
        else if (k == "batch_per_step") c.batch_per_step = parse_number<int>(k, v);
        else if (k == "max_steps") c.max_steps = parse_number<int>(k, v);
        else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
        else if (k == "checkpoint_every") c.checkpoint_every = parse_number<int>(k, v);
        else if (k == "guidance") c.guidance = parse_number<float>(k, v);
        else if (k == "sample_steps") c.sample_steps = parse_number<int>(k, v);
        else if (k == "d_model") c.model.d_model = parse_number<int>(k, v);
        else if (k == "heads") c.model.heads = parse_number<int>(k, v);
        else if (k == "dual_blocks") c.model.dual_blocks = parse_number<int>(k, v);
        else if (k == "single_blocks") c.model.single_blocks = parse_number<int>(k, v);
        else if (k == "patch") c.model.patch = parse_number<int>(k, v);
        else if (k == "resolution") c.model.resolution = parse_number<int>(k, v);
        else if (k == "mlp_ratio") c.model.mlp_ratio = parse_number<int>(k, v);
        else GLYPHFLOW_THROW(ErrorKind::invalid_argument, "config", "unknown key '", k, "'");
    }
    c.validate();
    return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    GLYPHFLOW_CHECK(is.good(), ErrorKind::data_error, "config", "cannot read ", path.string());
    return parse_train_config(is);
}

inline void write_train_config(std::ostream& os, const TrainConfig& c) {
    os << "stage=" << to_string(c.stage) << "\nprompt_config=" << to_string(c.prompt_config)
       << "\npaired=" << (c.paired ? "true" : "false") << "\nlayout=" << to_string(c.layout) << "\nlr=" << c.optimizer.lr
       << "\nbeta1=" << c.optimizer.beta1 << "\nbeta2=" << c.optimizer.beta2 << "\neps=" << c.optimizer.eps
       << "\nweight_decay=" << c.optimizer.weight_decay << "\naccum_steps=" << c.accum_steps
       << "\nbatch_per_step=" << c.batch_per_step << "\nmax_steps=" << c.max_steps << "\nseed=" << c.seed
       << "\ncheckpoint_every=" << c.checkpoint_every << "\nguidance=" << c.guidance
       << "\nsample_steps=" << c.sample_steps << "\nd_model=" << c.model.d_model << "\nheads=" << c.model.heads
       << "\ndual_blocks=" << c.model.dual_blocks << "\nsingle_blocks=" << c.model.single_blocks
       << "\npatch=" << c.model.patch << "\nresolution=" << c.model.resolution << "\nmlp_ratio=" << c.model.mlp_ratio
       << "\n";
}

// ---------------------------------------------------------------------------
// Training

/// Fingerprint of everything that must never change during training: the
/// codec matrix and the text embedding tables over every built-in glyph.
inline std::uint64_t frozen_checksum(const LatentCodec& codec) {
    std::uint64_t h = codec.fingerprint();
    for (const auto& font : builtin_fonts())
        for (char32_t cp : font.codepoints()) {
            const auto v = codepoint_vector(cp);
            h = derive_seed(h, checksum(v));
        }
    return h;
}

struct LossRecord {
    std::uint64_t step = 0;
    double loss = 0;
    double lr = 0;
    bool operator==(const LossRecord&) const = default;
};

inline void write_loss_log(std::ostream& os, const std::vector<LossRecord>& log) {
    char buf[96];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%llu %.9g %.9g\n", static_cast<unsigned long long>(r.step), r.loss, r.lr);
        os << buf;
    }
}

struct TrainHooks {
    std::function<void(const Checkpoint&)> on_checkpoint;
    std::function<void(const LossRecord&)> on_step;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LossRecord> log;
    std::uint64_t micro_batches = 0;
    std::uint64_t optimizer_steps = 0;
    std::uint64_t skipped_steps = 0;
    std::uint64_t frozen_before = 0;
    std::uint64_t frozen_after = 0;
};

/// Prompt bundle for a sample under a stage: pretraining reconstructs the
/// source scene from its own text, cooldown edits toward the target text.
inline PromptBundle training_bundle(const LoadedSample& s, Stage stage, PromptConfig config, PromptLayout layout) {
    const std::string& text = stage == Stage::pretrain ? s.source_text : s.target_text;
    return build_prompt_bundle(s.source, s.mask, text, font_for(s.language), config, layout);
}

/// Loss and parameter gradients of one training point; the gradient is scaled by `weight`.
inline double accumulate_gradients(const ModelParams<float>& params, const ModelConfig& mcfg,
                                   const TrainingPoint& point, float weight, std::vector<Tensor<float>>& grads) {
    Tape<float> tape;
    std::vector<Var<float>> leaves;
    ParamVars<float> vars;
    for (const auto& [name, t] : params.entries()) {
        auto v = tape.leaf(t, true);
        leaves.push_back(v);
        vars.emplace(name, v);
    }
    auto pred = forward_tokens(tape, vars, mcfg, point.input);
    auto target = tape.constant(patchify(point.velocity, mcfg.patch));
    auto loss = ops::squared_error(pred, target);
    const double value = loss.value()[0];
    auto g = tape.backward(ops::scale(loss, weight));
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        auto dst = grads[i].data();
        auto src = g[leaves[i]].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    return value;
}

namespace detail {

/// Samples grouped by language in order of first appearance.
inline std::vector<std::vector<std::size_t>> group_by_language(const std::vector<LoadedSample>& data) {
    std::vector<Alphabet> langs;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto it = std::find(langs.begin(), langs.end(), data[i].language);
        if (it == langs.end()) {
            langs.push_back(data[i].language);
            groups.emplace_back();
            it = langs.end() - 1;
        }
        groups[static_cast<std::size_t>(it - langs.begin())].push_back(i);
    }
    return groups;
}

}  // namespace detail

/// Runs optimizer steps first+1 .. last on `ck` in place. Every micro-batch
/// item draws (language, sample, t, noise seed) from a stream keyed by
/// (seed, step, item), so a resumed run replays an uninterrupted one exactly.
inline void run_steps(Checkpoint& ck, const TrainConfig& cfg, const std::vector<LoadedSample>& data,
                      std::uint64_t first, std::uint64_t last, TrainResult& result, const TrainHooks& hooks = {}) {
    GLYPHFLOW_CHECK(!data.empty(), ErrorKind::data_error, "train", "no training samples");
    GLYPHFLOW_CHECK(ck.optimizer.has_value(), ErrorKind::invalid_argument, "train", "checkpoint has no optimizer state");
    const auto groups = detail::group_by_language(data);
    const int items = cfg.accum_steps * cfg.batch_per_step;
    const float weight = 1.0f / static_cast<float>(items);
    for (std::uint64_t step = first + 1; step <= last; ++step) {
        std::vector<Tensor<float>> grads;
        for (const auto& [_, t] : ck.params.entries()) grads.emplace_back(t.shape());
        double loss_sum = 0;
        for (int m = 0; m < cfg.accum_steps; ++m) {
            for (int b = 0; b < cfg.batch_per_step; ++b) {
                CounterRng rng(derive_seed(cfg.seed, step, static_cast<std::uint64_t>(m * cfg.batch_per_step + b)));
                const auto& group = groups[rng.below(groups.size())];
                const LoadedSample& s = data[group[rng.below(group.size())]];
                const float t = static_cast<float>(rng.uniform());
                const std::uint64_t noise_seed = rng.next_u64();
                const PromptBundle bundle = training_bundle(s, cfg.stage, cfg.prompt_config, cfg.layout);
                const TrainingPoint point =
                    cfg.stage == Stage::pretrain
                        ? build_training_point(bundle, s.source, t, noise_seed, ck.codec, cfg.guidance)
                        : build_cooldown_point(bundle, s.edited, t, ck.codec, cfg.guidance);
                loss_sum += accumulate_gradients(ck.params, ck.config, point, weight, grads);
            }
            ++result.micro_batches;
        }
        if (adamw_step(ck.params, grads, *ck.optimizer, cfg.optimizer)) {
            ++result.optimizer_steps;
        } else {
            ++result.skipped_steps;
            std::fprintf(stderr, "warning: step %llu skipped (non-finite gradient)\n",
                         static_cast<unsigned long long>(step));
        }
        ck.step = step;
        const LossRecord rec{step, loss_sum / items, cfg.optimizer.lr};
        result.log.push_back(rec);
        if (hooks.on_step) hooks.on_step(rec);
        if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && step % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0)
            hooks.on_checkpoint(ck);
    }
}

/// One training stage up to cfg.max_steps optimizer steps. With `resume`,
/// `init` must carry optimizer state from the same stage and training
/// continues after its step; otherwise `init` only supplies parameters.
inline TrainResult train_stage(const TrainConfig& cfg, const std::vector<LoadedSample>& data,
                               const std::optional<Checkpoint>& init = std::nullopt, bool resume = false,
                               const TrainHooks& hooks = {}) {
    cfg.validate();
    if (cfg.stage == Stage::cooldown) {
        const bool any_paired = std::any_of(data.begin(), data.end(),
                                            [](const LoadedSample& s) { return s.source_text != s.target_text; });
        GLYPHFLOW_CHECK(any_paired, ErrorKind::data_error, "train", "cooldown requires paired data");
    }
    Checkpoint ck = init ? *init : Checkpoint::fresh(cfg.model, derive_seed(cfg.seed, 0x1417));
    GLYPHFLOW_CHECK(ck.config == cfg.model, ErrorKind::invalid_argument, "train",
                    "checkpoint model config does not match the training config");
    std::uint64_t start = 0;
    if (resume) {
        GLYPHFLOW_CHECK(init && init->optimizer && init->stage == cfg.stage, ErrorKind::invalid_argument, "train",
                        "resume needs a checkpoint with optimizer state from the same stage");
        start = init->step;
        GLYPHFLOW_CHECK(start <= static_cast<std::uint64_t>(cfg.max_steps), ErrorKind::invalid_argument, "train",
                        "checkpoint step ", start, " is past max_steps ", cfg.max_steps);
    } else {
        ck.step = 0;
        ck.optimizer = OptimizerState::zeros_like(ck.params);
    }
    ck.stage = cfg.stage;
    ck.prompt = cfg.prompt_config;
    ck.layout = cfg.layout;
    TrainResult r;
    r.frozen_before = frozen_checksum(ck.codec);
    run_steps(ck, cfg, data, start, static_cast<std::uint64_t>(cfg.max_steps), r, hooks);
    r.frozen_after = frozen_checksum(ck.codec);
    r.checkpoint = std::move(ck);
    return r;
}

// ---------------------------------------------------------------------------
// Inference

/// Sampler defaults for a checkpoint: cooldown checkpoints start from the source latent.
inline SamplerConfig default_sampler(const Checkpoint& ck) {
    SamplerConfig s;
    s.init = ck.stage == Stage::cooldown ? SamplerInit::source : SamplerInit::noise;
    return s;
}

inline ImageBuffer edit_image(const Checkpoint& ck, const ImageBuffer& image, const BinaryMask& mask,
                              std::string_view text, const BitmapFont& font, const SamplerConfig& cfg) {
    GLYPHFLOW_CHECK(image.height() == ck.config.resolution && image.width() == ck.config.resolution,
                    ErrorKind::data_error, "edit", "image is ", image.height(), "x", image.width(),
                    ", checkpoint works at ", ck.config.resolution, "x", ck.config.resolution);
    const PromptBundle b = build_prompt_bundle(image, mask, text, font, ck.prompt, ck.layout);
    return sample(ck.params, ck.config, ck.codec, b, cfg);
}

struct EditOutcome {
    std::string recognized;
    std::string target;
    double style_distance = 0;  // foreground color of the edit vs. the source text
};

struct EditEvaluation {
    std::vector<EditOutcome> outcomes;
    double seq_acc = 0;
    double ned_mean = 0;
    double style_distance_mean = 0;
};

/// Edits every sample toward its target text and scores the results. Sample i
/// uses sampler seed derive_seed(cfg.seed, i).
inline EditEvaluation evaluate_edits(const Checkpoint& ck, const std::vector<LoadedSample>& data,
                                     const SamplerConfig& cfg, std::vector<ImageBuffer>* outputs = nullptr) {
    GLYPHFLOW_CHECK(!data.empty(), ErrorKind::invalid_argument, "evaluate_edits", "no samples");
    EditEvaluation ev;
    ev.outcomes.resize(data.size());
    if (outputs) outputs->assign(data.size(), ImageBuffer());
    parallel_for(data.size(), [&](std::size_t i) {
        const LoadedSample& s = data[i];
        SamplerConfig sc = cfg;
        sc.seed = derive_seed(cfg.seed, i);
        const BitmapFont& font = font_for(s.language);
        const ImageBuffer out = edit_image(ck, s.source, s.mask, s.target_text, font, sc);
        const Rect box = mask_bbox(s.mask);
        EditOutcome& o = ev.outcomes[i];
        o.recognized = recognize_scene_text(crop(out, box), font);
        o.target = s.target_text;
        const auto a = foreground_color(out, s.mask), b = foreground_color(s.source, s.mask);
        o.style_distance = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                                     (a[2] - b[2]) * (a[2] - b[2]));
        if (outputs) (*outputs)[i] = out;
    });
    std::vector<TextPair> texts;
    double ned_sum = 0, style_sum = 0;
    for (const auto& o : ev.outcomes) {
        texts.push_back({o.recognized, o.target});
        ned_sum += ned(o.recognized, o.target);
        style_sum += o.style_distance;
    }
    ev.seq_acc = seq_acc(texts);
    ev.ned_mean = ned_sum / static_cast<double>(data.size());
    ev.style_distance_mean = style_sum / static_cast<double>(data.size());
    return ev;
}

// ---------------------------------------------------------------------------
// Incremental multilingual protocol

struct ProtocolReport {
    std::vector<Alphabet> order;
    // accuracy[i][k] is Seq. ACC of order[i] after protocol step k + 1; empty for k < i.
    std::vector<std::vector<std::optional<double>>> accuracy;
    std::vector<LossRecord> log;

    /// Rows as in the reference table: each language's scores from its introduction onward.
    std::vector<double> row(std::size_t i) const {
        std::vector<double> out;
        for (const auto& v : accuracy[i])
            if (v) out.push_back(*v);
        return out;
    }

    void write(std::ostream& os) const {
        char buf[32];
        os << "order=";
        for (std::size_t i = 0; i < order.size(); ++i) os << (i ? "," : "") << alphabet_name(order[i]);
        os << "\nsteps=" << order.size() << "\n";
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto r = row(i);
            os << "row." << alphabet_name(order[i]) << "=";
            for (std::size_t k = 0; k < r.size(); ++k) {
                std::snprintf(buf, sizeof buf, "%.6f", r[k]);
                os << (k ? "," : "") << buf;
            }
            std::snprintf(buf, sizeof buf, "%+.6f", r.back() - r.front());
            os << "\ntrend." << alphabet_name(order[i]) << "=" << buf << "\n";
        }
    }
};

/// For k = 1..|order|: continue training for cfg.max_steps optimizer steps on
/// a uniform mixture of the first k languages, then score every language
/// introduced so far on its evaluation samples.
inline ProtocolReport incremental_protocol(const std::vector<Alphabet>& order,
                                           const std::map<Alphabet, std::vector<LoadedSample>>& train_data,
                                           const std::map<Alphabet, std::vector<LoadedSample>>& eval_data,
                                           const TrainConfig& cfg, const SamplerConfig& sampler,
                                           const TrainHooks& hooks = {}) {
    cfg.validate();
    GLYPHFLOW_CHECK(!order.empty(), ErrorKind::invalid_argument, "protocol", "empty language order");
    for (std::size_t i = 0; i < order.size(); ++i) {
        GLYPHFLOW_CHECK(std::find(order.begin(), order.begin() + static_cast<long>(i), order[i]) ==
                            order.begin() + static_cast<long>(i),
                        ErrorKind::invalid_argument, "protocol", "language ", alphabet_name(order[i]),
                        " listed twice");
        for (const auto* m : {&train_data, &eval_data}) {
            auto it = m->find(order[i]);
            GLYPHFLOW_CHECK(it != m->end() && !it->second.empty(), ErrorKind::data_error, "protocol",
                            "missing ", m == &train_data ? "training" : "evaluation", " data for ",
                            alphabet_name(order[i]));
        }
    }
    ProtocolReport rep;
    rep.order = order;
    rep.accuracy.assign(order.size(), std::vector<std::optional<double>>(order.size()));
    Checkpoint ck = Checkpoint::fresh(cfg.model, derive_seed(cfg.seed, 0x1417));
    ck.stage = cfg.stage;
    ck.prompt = cfg.prompt_config;
    ck.layout = cfg.layout;
    ck.optimizer = OptimizerState::zeros_like(ck.params);
    TrainResult tr;
    const auto per_stage = static_cast<std::uint64_t>(cfg.max_steps);
    for (std::size_t k = 1; k <= order.size(); ++k) {
        std::vector<LoadedSample> mix;
        for (Alphabet a : language_schedule(order, static_cast<int>(k))) {
            const auto& d = train_data.at(a);
            mix.insert(mix.end(), d.begin(), d.end());
        }
        run_steps(ck, cfg, mix, (k - 1) * per_stage, k * per_stage, tr, hooks);
        for (std::size_t i = 0; i < k; ++i)
            rep.accuracy[i][k - 1] = evaluate_edits(ck, eval_data.at(order[i]), sampler).seq_acc;
    }
    rep.log = std::move(tr.log);
    return rep;
}

}  // namespace glyphflow
