// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Prompt construction: glyph map, style crop, masked image and mask stacked
// into the 8-channel conditioning image, plus the two text embeddings.

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "glyphflow/encoders.hpp"
#include "glyphflow/glyphs.hpp"
#include "glyphflow/image.hpp"

namespace glyphflow {

enum class PromptConfig { text_only, text_glyph, text_style, text_glyph_style };

inline constexpr std::array<std::string_view, 4> kPromptConfigNames = {"TextOnly", "TextGlyph", "TextStyle",
                                                                      "TextGlyphStyle"};

inline std::string_view to_string(PromptConfig c) { return kPromptConfigNames[static_cast<int>(c)]; }

inline PromptConfig prompt_config_from_string(std::string_view s) {
    for (int i = 0; i < 4; ++i)
        if (kPromptConfigNames[i] == s) return static_cast<PromptConfig>(i);
    GLYPHFLOW_THROW(ErrorKind::invalid_argument, "prompt_config", "unknown prompt config '", std::string(s), "'");
}

inline bool uses_glyph(PromptConfig c) { return c == PromptConfig::text_glyph || c == PromptConfig::text_glyph_style; }
inline bool uses_style(PromptConfig c) { return c == PromptConfig::text_style || c == PromptConfig::text_glyph_style; }

/// Where glyph and style planes are placed on the working canvas.
///   region: fitted into the mask's bounding rectangle (spatially aligned with the edit)
///   frame:  letterboxed to the whole canvas
enum class PromptLayout { region, frame };

inline std::string_view to_string(PromptLayout l) { return l == PromptLayout::region ? "region" : "frame"; }

inline PromptLayout prompt_layout_from_string(std::string_view s) {
    if (s == "region") return PromptLayout::region;
    if (s == "frame") return PromptLayout::frame;
    GLYPHFLOW_THROW(ErrorKind::invalid_argument, "prompt_layout", "unknown layout '", std::string(s), "'");
}

/// Channel layout of the conditioning image.
struct PlaneLayout {
    static constexpr int glyph = 0;
    static constexpr int style = 1;
    static constexpr int masked = 4;
    static constexpr int mask = 7;
    static constexpr int channels = 8;
};

struct PromptBundle {
    ImageBuffer conditioning;  // [I_g(1), I_s(3), I_m(3), M(1)]
    Tensor<float> content;     // [len, d_txt]
    Tensor<float> style;       // [1, d_txt]
    ImageBuffer source;        // I
    BinaryMask mask;           // M
    std::string target_text;
    PromptConfig config = PromptConfig::text_glyph;

    int height() const { return conditioning.height(); }
    int width() const { return conditioning.width(); }
};

/// Glyph map for `text`: largest integer scale that fits `region`, centered;
/// bilinear letterbox if even scale 1 does not fit.
inline ImageBuffer place_glyph_map(std::string_view text, const BitmapFont& font, int height, int width,
                                   const Rect& region) {
    const GlyphMap g1 = render_line(text, font, 1);
    const int k = std::min(region.width() / g1.image.width(), region.height() / g1.image.height());
    if (k < 1) return letterbox_into(g1.image, height, width, region);
    const GlyphMap gk = k == 1 ? g1 : render_line(text, font, k);
    ImageBuffer out(height, width, 1);
    const int oy = region.y0 + (region.height() - gk.image.height()) / 2;
    const int ox = region.x0 + (region.width() - gk.image.width()) / 2;
    for (int y = 0; y < gk.image.height(); ++y)
        for (int x = 0; x < gk.image.width(); ++x) out.at(oy + y, ox + x) = gk.image.at(y, x);
    return out;
}

inline PromptBundle build_prompt_bundle(const ImageBuffer& image, const BinaryMask& mask, std::string_view target_text,
                                        const BitmapFont& font, PromptConfig config,
                                        PromptLayout layout = PromptLayout::region,
                                        std::optional<std::string_view> style_text = std::nullopt) {
    GLYPHFLOW_CHECK(image.channels() == 3, ErrorKind::invalid_argument, "build_prompt_bundle",
                    "source image must be RGB");
    GLYPHFLOW_CHECK(image.same_size(mask.to_image()), ErrorKind::shape_mismatch, "build_prompt_bundle",
                    "image and mask sizes differ");
    GLYPHFLOW_CHECK(font.covers(target_text), ErrorKind::invalid_argument, "build_prompt_bundle", "target text '",
                    std::string(target_text), "' has codepoints outside alphabet '", std::string(font.name()), "'");
    const int h = image.height(), w = image.width();
    const Rect box = mask_bbox(mask);
    const Rect canvas = image.bounds();

    ImageBuffer glyph(h, w, 1);
    if (uses_glyph(config)) {
        glyph = layout == PromptLayout::region ? place_glyph_map(target_text, font, h, w, box)
                                               : letterbox(render_line(target_text, font, 1).image, h, w);
    }
    ImageBuffer style(h, w, 3);
    if (uses_style(config)) {
        style = letterbox_into(crop(image, box), h, w, layout == PromptLayout::region ? box : canvas);
    }
    PromptBundle b;
    b.conditioning = channel_concat({glyph, style, apply_mask(image, mask), mask.to_image()});
    b.content = embed_content_text(target_text);
    b.style = embed_style_text(style_text.value_or(target_text));
    b.source = image;
    b.mask = mask;
    b.target_text = std::string(target_text);
    b.config = config;
    return b;
}

}  // namespace glyphflow
