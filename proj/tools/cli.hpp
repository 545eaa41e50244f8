// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data
// error, 3 numeric failure. Diagnostics go to stderr; results go to files.

#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "glyphflow/glyphflow.hpp"

namespace glyphflow::cli {

enum ExitCode { ok = 0, usage = 1, data = 2, numeric = 3 };

inline int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return usage;
        case ErrorKind::numeric_error: return numeric;
        case ErrorKind::shape_mismatch:
        case ErrorKind::data_error: return data;
    }
    return data;
}

inline std::vector<Alphabet> parse_alphabets(const std::string& list) {
    std::vector<Alphabet> out;
    std::istringstream is(list);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        out.push_back(alphabet_from_name(item));
    }
    GLYPHFLOW_CHECK(!out.empty(), ErrorKind::invalid_argument, "alphabets", "empty language list");
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    GLYPHFLOW_CHECK(os.good(), ErrorKind::data_error, "write", "cannot write ", path.string());
    os << text;
}

struct Options {
    // render-glyph
    std::string text, font = "english", out;
    int scale = 1;
    // make-prompts
    std::string image, mask, config_name = "TextGlyph", out_dir, layout = "region";
    // synth-data
    std::string langs = "english";
    int count = 100;
    bool paired = false;
    std::uint64_t seed = 42;
    double test_fraction = 0.2;
    int oov_count = 0;
    // validate-pairs / eval
    std::string manifest, thresholds = "0.00784314,0.1,2", out_report, split;
    // train / protocol
    std::string config, data, resume, init;
    // edit
    std::string checkpoint, edit_out = "edited.png", sampler_init = "auto", trace_dir;
    int steps = 30;
    float guidance = 30.0f;
    // eval
    std::string pred_dir;
    // protocol
    std::string order = "arabic,english,french";
    int eval_count = 0;
    std::string loss_log;
};

inline int run_render_glyph(const Options& o, std::ostream&) {
    const GlyphMap g = render_line(o.text, font_by_name(o.font), o.scale);
    png::write_image(o.out, g.image);
    return ok;
}

inline int run_make_prompts(const Options& o, std::ostream&) {
    const ImageBuffer img = png::read_image(o.image);
    const BinaryMask mask = png::read_mask(o.mask);
    const PromptBundle b = build_prompt_bundle(img, mask, o.text, font_by_name(o.font),
                                               prompt_config_from_string(o.config_name),
                                               prompt_layout_from_string(o.layout));
    const std::filesystem::path dir = o.out_dir;
    std::filesystem::create_directories(dir);
    png::write_image(dir / "glyph.png", channel_slice(b.conditioning, PlaneLayout::glyph, 1));
    png::write_image(dir / "style.png", channel_slice(b.conditioning, PlaneLayout::style, 3));
    png::write_image(dir / "masked.png", channel_slice(b.conditioning, PlaneLayout::masked, 3));
    png::write_mask(dir / "mask.png", mask);
    gft1::save(dir / "conditioning.gft1", b.conditioning.to_tensor());
    gft1::save(dir / "content.gft1", b.content);
    gft1::save(dir / "style_text.gft1", b.style);
    return ok;
}

inline int run_synth_data(const Options& o, std::ostream&) {
    DatasetSpec spec;
    spec.languages = parse_alphabets(o.langs);
    spec.count = o.count;
    spec.paired = o.paired;
    spec.seed = o.seed;
    spec.test_fraction = o.test_fraction;
    spec.oov_count = o.oov_count;
    synth_dataset(spec, o.out);
    return ok;
}

inline int run_validate_pairs(const Options& o, std::ostream& err) {
    const PairThresholds th = PairThresholds::parse(o.thresholds);
    const Manifest m = open_manifest(o.manifest);
    std::vector<Verdict> verdicts(m.records.size());
    parallel_for(m.records.size(), [&](std::size_t i) {
        const LoadedSample s = load_sample(m, m.records[i]);
        verdicts[i] = validate_pair(s.source, s.edited, s.mask, s.target_text, font_for(s.language), th);
    });
    std::ostringstream rep;
    std::size_t passed = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const Verdict& v = verdicts[i];
        passed += v.ok();
        char buf[64];
        std::snprintf(buf, sizeof buf, "\tregion_diff=%.6f\tstyle_distance=%.6f", v.region_diff, v.style_distance);
        rep << "id=" << m.records[i].id << "\tregion_ok=" << v.region_ok << "\ttext_ok=" << v.text_ok
            << "\tstyle_ok=" << v.style_ok << buf << "\n";
    }
    rep << "total=" << verdicts.size() << "\npassed=" << passed << "\n";
    if (!o.out_report.empty()) write_text_file(o.out_report, rep.str());
    err << "validate-pairs: " << passed << "/" << verdicts.size() << " pairs pass\n";
    return passed == verdicts.size() ? ok : data;
}

inline std::vector<LoadedSample> load_split(const Manifest& m, const std::string& split) {
    return load_samples(m.filtered(split));
}

inline int run_train(const Options& o, std::ostream& err) {
    const TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
    GLYPHFLOW_CHECK(o.resume.empty() || o.init.empty(), ErrorKind::invalid_argument, "train",
                    "--resume and --init are mutually exclusive");
    const Manifest m = open_manifest(o.data);
    const auto samples = load_split(m, "train");
    GLYPHFLOW_CHECK(!samples.empty(), ErrorKind::data_error, "train", "no train records in ", o.data);
    std::optional<Checkpoint> init;
    if (!o.resume.empty()) init = load_checkpoint(o.resume);
    if (!o.init.empty()) init = load_checkpoint(o.init);
    const std::filesystem::path out = o.out;
    std::filesystem::create_directories(out);
    TrainHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& ck) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%06llu.mste", static_cast<unsigned long long>(ck.step));
        save_checkpoint(out / name, ck);
    };
    const TrainResult r = train_stage(cfg, samples, init, !o.resume.empty(), hooks);
    save_checkpoint(out / "checkpoint.mste", r.checkpoint);
    std::ostringstream log;
    write_loss_log(log, r.log);
    write_text_file(out / "loss.log", log.str());
    GLYPHFLOW_CHECK(r.frozen_before == r.frozen_after, ErrorKind::numeric_error, "train", "frozen components changed");
    err << "train: " << r.optimizer_steps << " optimizer steps, " << r.micro_batches << " micro-batches, "
        << r.skipped_steps << " skipped\n";
    return ok;
}

inline int run_edit(const Options& o, std::ostream&) {
    const Checkpoint ck = load_checkpoint(o.checkpoint);
    SamplerConfig sc = default_sampler(ck);
    sc.steps = o.steps;
    sc.guidance = o.guidance;
    sc.seed = o.seed;
    if (o.sampler_init != "auto") sc.init = sampler_init_from_string(o.sampler_init);
    if (!o.trace_dir.empty()) sc.trace_dir = o.trace_dir;
    const ImageBuffer img = png::read_image(o.image);
    const BinaryMask mask = png::read_mask(o.mask);
    const ImageBuffer out = edit_image(ck, img.channels() == 3 ? img : gray_to_rgb(to_gray(img)), mask, o.text,
                                       font_by_name(o.font), sc);
    png::write_image(o.edit_out, out);
    return ok;
}

inline int run_eval(const Options& o, std::ostream& err) {
    Manifest m = open_manifest(o.manifest);
    if (!o.split.empty()) m = m.filtered(o.split);
    const EvalReport rep = evaluate(o.pred_dir, m);
    std::ostringstream os;
    rep.write(os);
    write_text_file(o.out_report, os.str());
    rep.print_table(err);
    if (!rep.missing.empty()) err << "warning: " << rep.missing.size() << " predictions missing\n";
    return ok;
}

inline int run_protocol(const Options& o, std::ostream& err) {
    const std::vector<Alphabet> order = parse_alphabets(o.order);
    const TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
    const Manifest m = open_manifest(o.data);
    std::map<Alphabet, std::vector<LoadedSample>> train, eval;
    for (const auto& r : m.records) {
        if (std::find(order.begin(), order.end(), r.language) == order.end()) continue;
        if (r.split == "train") train[r.language].push_back(load_sample(m, r));
        if (r.split == "test" && (o.eval_count <= 0 || static_cast<int>(eval[r.language].size()) < o.eval_count))
            eval[r.language].push_back(load_sample(m, r));
    }
    SamplerConfig sc;
    sc.steps = cfg.sample_steps;
    sc.guidance = cfg.guidance;
    sc.seed = cfg.seed;
    sc.init = cfg.stage == Stage::cooldown ? SamplerInit::source : SamplerInit::noise;
    const ProtocolReport rep = incremental_protocol(order, train, eval, cfg, sc);
    std::ostringstream os;
    rep.write(os);
    write_text_file(o.out_report, os.str());
    if (!o.loss_log.empty()) {
        std::ostringstream log;
        write_loss_log(log, rep.log);
        write_text_file(o.loss_log, log.str());
    }
    err << os.str();
    return ok;
}

/// Parses argv and runs one subcommand.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Self-prompting scene text editing at desk scale", "glyphflow"};
    app.require_subcommand(1, 1);
    app.failure_message(CLI::FailureMessage::help);
    app.option_defaults()->always_capture_default();
    Options o;

    auto* rg = app.add_subcommand("render-glyph", "Render text with a built-in bitmap font to a PNG glyph map");
    rg->add_option("--text", o.text, "Text to render (UTF-8)")->required();
    rg->add_option("--font", o.font, "Alphabet name");
    rg->add_option("--scale", o.scale, "Integer pixel scale")->check(CLI::PositiveNumber);
    rg->add_option("--out", o.out, "Output PNG path")->required();

    auto* mp = app.add_subcommand("make-prompts", "Build the glyph, style, masked and mask planes for an edit");
    mp->add_option("--image", o.image, "Source RGB PNG")->required();
    mp->add_option("--mask", o.mask, "Mask PNG (nonzero = edit region)")->required();
    mp->add_option("--text", o.text, "Target text")->required();
    mp->add_option("--config", o.config_name, "TextOnly | TextGlyph | TextStyle | TextGlyphStyle");
    mp->add_option("--layout", o.layout, "Glyph/style placement: region | frame");
    mp->add_option("--font", o.font, "Alphabet name");
    mp->add_option("--out-dir", o.out_dir, "Output directory")->required();

    auto* sd = app.add_subcommand("synth-data", "Generate a synthetic scene-text dataset with a manifest");
    sd->add_option("--langs", o.langs, "Comma-separated alphabet names");
    sd->add_option("--count", o.count, "Records per language")->check(CLI::PositiveNumber);
    sd->add_flag("--paired", o.paired, "Generate source/edited pairs instead of single scenes");
    sd->add_option("--seed", o.seed, "Generation seed");
    sd->add_option("--test-fraction", o.test_fraction, "Fraction of each language held out for testing");
    sd->add_option("--oov-count", o.oov_count, "Extra per-language records whose targets use held-out glyphs");
    sd->add_option("--out", o.out, "Output dataset directory")->required();

    auto* vp = app.add_subcommand("validate-pairs", "Check region, text and style criteria for every pair");
    vp->add_option("--manifest", o.manifest, "Manifest file or dataset directory")->required();
    vp->add_option("--thresholds", o.thresholds, "region,style,dilation");
    vp->add_option("--out-report", o.out_report, "Per-pair verdict file (optional)");

    auto* tr = app.add_subcommand("train", "Run a pretraining or cooldown stage");
    tr->add_option("--config", o.config, "Training config file (key=value); empty uses defaults");
    tr->add_option("--data", o.data, "Dataset directory or manifest")->required();
    tr->add_option("--out", o.out, "Output directory for checkpoints and loss.log")->required();
    tr->add_option("--resume", o.resume, "Checkpoint to resume from (same stage)");
    tr->add_option("--init", o.init, "Checkpoint whose parameters start a new stage");

    auto* ed = app.add_subcommand("edit", "Replace the text under a mask");
    ed->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
    ed->add_option("--image", o.image, "Source RGB PNG")->required();
    ed->add_option("--mask", o.mask, "Mask PNG")->required();
    ed->add_option("--text", o.text, "Target text")->required();
    ed->add_option("--font", o.font, "Alphabet of the target text");
    ed->add_option("--steps", o.steps, "Sampling steps")->check(CLI::PositiveNumber);
    ed->add_option("--guidance", o.guidance, "Guidance value");
    ed->add_option("--seed", o.seed, "Sampler seed");
    ed->add_option("--init", o.sampler_init, "Sampler start: auto | noise | source");
    ed->add_option("--trace-dir", o.trace_dir, "Dump the latent after every step as GFT1 (optional)");
    ed->add_option("--out", o.edit_out, "Output PNG path");

    auto* ev = app.add_subcommand("eval", "Score predictions against a manifest");
    ev->add_option("--pred-dir", o.pred_dir, "Directory of {id}.png predictions")->required();
    ev->add_option("--manifest", o.manifest, "Manifest file or dataset directory")->required();
    ev->add_option("--split", o.split, "Only records of this split (empty = all)");
    ev->add_option("--out-report", o.out_report, "Report file")->required();

    auto* pr = app.add_subcommand("protocol", "Incremental multilingual training and evaluation");
    pr->add_option("--order", o.order, "Comma-separated alphabet order");
    pr->add_option("--data", o.data, "Dataset directory or manifest with train/test splits")->required();
    pr->add_option("--config", o.config, "Training config file; max_steps is per protocol step");
    pr->add_option("--eval-count", o.eval_count, "Test records per language (0 = all)");
    pr->add_option("--loss-log", o.loss_log, "Loss log path (optional)");
    pr->add_option("--out-report", o.out_report, "Report file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (rg->parsed()) return run_render_glyph(o, err);
        if (mp->parsed()) return run_make_prompts(o, err);
        if (sd->parsed()) return run_synth_data(o, err);
        if (vp->parsed()) return run_validate_pairs(o, err);
        if (tr->parsed()) return run_train(o, err);
        if (ed->parsed()) return run_edit(o, err);
        if (ev->parsed()) return run_eval(o, err);
        if (pr->parsed()) return run_protocol(o, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return data;
    }
    return usage;
}

}  // namespace glyphflow::cli
