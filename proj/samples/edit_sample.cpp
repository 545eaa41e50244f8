// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Builds a synthetic scene, trains a few pretraining steps on a handful of
// scenes, and edits the text of a held-out scene.
//
//   edit_sample [out_dir]

#include <glyphflow/glyphflow.hpp>

#include <iostream>

using namespace glyphflow;

int main(int argc, char** argv) {
    const std::filesystem::path out = argc > 1 ? argv[1] : "edit_sample_out";
    std::filesystem::create_directories(out);

    std::vector<LoadedSample> train;
    for (int i = 0; i < 16; ++i) {
        const Scene s = synth_scene(static_cast<std::uint64_t>(i), Alphabet::english);
        train.push_back({std::to_string(i), s.image, s.image, s.mask, s.text, s.text, s.language});
    }
    TrainConfig cfg;
    cfg.max_steps = 5;
    cfg.accum_steps = 2;
    cfg.optimizer.lr = 1e-3;
    const TrainResult r = train_stage(cfg, train);
    for (const auto& rec : r.log) std::cout << "step " << rec.step << " loss " << rec.loss << "\n";

    const PairedSample pair = synth_pair(1234, Alphabet::english);
    SamplerConfig sc = default_sampler(r.checkpoint);
    sc.steps = 10;
    const ImageBuffer edited =
        edit_image(r.checkpoint, pair.source.image, pair.source.mask, pair.edited.text, font_for(Alphabet::english), sc);

    png::write_image(out / "source.png", pair.source.image);
    png::write_mask(out / "mask.png", pair.source.mask);
    png::write_image(out / "edited.png", edited);
    std::cout << "source text " << pair.source.text << ", target " << pair.edited.text << ", read back '"
              << recognize_scene_text(crop(edited, mask_bbox(pair.source.mask)), font_for(Alphabet::english))
              << "'\n";
    return 0;
}
