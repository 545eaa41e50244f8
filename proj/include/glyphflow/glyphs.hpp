// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Built-in 5x7 bitmap alphabets, a single-line renderer producing
// white-on-black glyph maps, and a template-matching recognizer used as the
// reading oracle for generated text.
//
// Every glyph inks all five columns and both the top and bottom rows. A
// rendered line therefore has exactly one blank column between neighbouring
// glyphs and spans exactly 7 * scale rows, which is what lets the recognizer
// segment cells and recover the scale without side information.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "glyphflow/image.hpp"
#include "glyphflow/random.hpp"
#include "glyphflow/utf8.hpp"

namespace glyphflow {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphAdvance = 6;
inline constexpr int kMinGlyphDistance = 4;

/// 35-bit glyph, bit (row * 5 + col).
using GlyphBits = std::uint64_t;

inline bool glyph_bit(GlyphBits g, int row, int col) { return (g >> (row * kGlyphWidth + col)) & 1u; }

inline int glyph_distance(GlyphBits a, GlyphBits b) { return std::popcount(a ^ b); }

/// Language proxies, in the order languages are introduced by the incremental protocol.
enum class Alphabet : int {
    arabic,
    english,
    french,
    chinese,
    german,
    korean,
    japanese,
    italian,
    bengali,
    hindi,
    russian,
    thai,
    swahili,
};

inline constexpr int kAlphabetCount = 13;

inline constexpr std::array<std::string_view, kAlphabetCount> kAlphabetNames = {
    "arabic", "english", "french", "chinese", "german", "korean", "japanese",
    "italian", "bengali", "hindi", "russian", "thai", "swahili"};

inline std::string_view alphabet_name(Alphabet a) { return kAlphabetNames[static_cast<int>(a)]; }

inline Alphabet alphabet_from_name(std::string_view name) {
    for (int i = 0; i < kAlphabetCount; ++i)
        if (kAlphabetNames[i] == name) return static_cast<Alphabet>(i);
    GLYPHFLOW_THROW(ErrorKind::invalid_argument, "alphabet", "unknown alphabet '", std::string(name), "'");
}

inline std::vector<Alphabet> all_alphabets() {
    std::vector<Alphabet> out;
    for (int i = 0; i < kAlphabetCount; ++i) out.push_back(static_cast<Alphabet>(i));
    return out;
}

class BitmapFont {
public:
    BitmapFont(Alphabet id, std::vector<std::pair<char32_t, GlyphBits>> glyphs) : id_(id), glyphs_(std::move(glyphs)) {
        for (std::size_t i = 0; i < glyphs_.size(); ++i) {
            GLYPHFLOW_CHECK(glyphs_[i].second != 0, ErrorKind::invalid_argument, "BitmapFont", "empty glyph");
            index_[glyphs_[i].first] = i;
        }
        GLYPHFLOW_CHECK(index_.size() == glyphs_.size(), ErrorKind::invalid_argument, "BitmapFont",
                        "duplicate codepoint");
    }

    Alphabet id() const { return id_; }
    std::string_view name() const { return alphabet_name(id_); }
    std::size_t size() const { return glyphs_.size(); }
    const std::vector<std::pair<char32_t, GlyphBits>>& glyphs() const { return glyphs_; }

    std::u32string codepoints() const {
        std::u32string out;
        for (const auto& [cp, _] : glyphs_) out.push_back(cp);
        return out;
    }

    bool contains(char32_t cp) const { return index_.count(cp) != 0; }

    GlyphBits glyph(char32_t cp) const {
        auto it = index_.find(cp);
        GLYPHFLOW_CHECK(it != index_.end(), ErrorKind::invalid_argument, "BitmapFont",
                        "codepoint ", utf8::codepoint_label(cp), " is not in alphabet '", std::string(name()), "'");
        return glyphs_[it->second].second;
    }

    bool covers(std::string_view text) const {
        for (char32_t cp : utf8::decode(text))
            if (!contains(cp)) return false;
        return true;
    }

    /// Codepoint whose glyph is nearest in Hamming distance (ties: table order).
    char32_t nearest(GlyphBits bits) const {
        int best = 1 << 30;
        char32_t out = glyphs_.front().first;
        for (const auto& [cp, g] : glyphs_) {
            const int d = glyph_distance(bits, g);
            if (d < best) {
                best = d;
                out = cp;
            }
        }
        return out;
    }

private:
    Alphabet id_;
    std::vector<std::pair<char32_t, GlyphBits>> glyphs_;
    std::map<char32_t, std::size_t> index_;
};

namespace detail {

inline GlyphBits parse_rows(const std::array<const char*, 7>& rows) {
    GlyphBits g = 0;
    for (int r = 0; r < kGlyphHeight; ++r)
        for (int c = 0; c < kGlyphWidth; ++c)
            if (rows[r][c] == '#') g |= GlyphBits{1} << (r * kGlyphWidth + c);
    return g;
}

/// Every column inked, top and bottom rows inked.
inline bool well_formed(GlyphBits g) {
    for (int c = 0; c < kGlyphWidth; ++c) {
        bool any = false;
        for (int r = 0; r < kGlyphHeight; ++r) any = any || glyph_bit(g, r, c);
        if (!any) return false;
    }
    bool top = false, bottom = false;
    for (int c = 0; c < kGlyphWidth; ++c) {
        top = top || glyph_bit(g, 0, c);
        bottom = bottom || glyph_bit(g, kGlyphHeight - 1, c);
    }
    return top && bottom;
}

inline std::vector<std::pair<char32_t, GlyphBits>> latin_glyphs() {
    static const std::vector<std::pair<char32_t, std::array<const char*, 7>>> table = {
        {U'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
        {U'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "#####"}},
        {U'C', {".####", "#...#", "#....", "#....", "#....", "#...#", "####."}},
        {U'D', {"###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."}},
        {U'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
        {U'F', {"#####", "#....", "#....", "###..", "#....", "#....", "#...."}},
        {U'G', {".####", "#....", "#....", "#.###", "#...#", "#...#", ".####"}},
        {U'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
        {U'I', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"}},
        {U'J', {"#####", "...#.", "...#.", "...#.", "#..#.", "#..#.", ".##.#"}},
        {U'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
        {U'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
        {U'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
        {U'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
        {U'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
        {U'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
        {U'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
        {U'R', {"####.", "#...#", "#...#", "#####", "#.#..", "#..#.", "#...#"}},
        {U'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
        {U'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
        {U'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
        {U'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
        {U'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"}},
        {U'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
        {U'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
        {U'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
    };
    std::vector<std::pair<char32_t, GlyphBits>> out;
    for (const auto& [cp, rows] : table) out.emplace_back(cp, parse_rows(rows));
    return out;
}

/// Codepoints assigned to each proxy alphabet, drawn from the real script's block.
inline std::u32string alphabet_codepoints(Alphabet a) {
    switch (a) {
        case Alphabet::arabic:
            return U"ابتثجحخدذرزس";
        case Alphabet::english: return U"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
        case Alphabet::french:
            return U"ÀÂÇÉÈÊËÎÏÔÙÛ";
        case Alphabet::chinese:
            return U"一二三人口日月山水火木土";
        case Alphabet::german:
            return U"ÄÖÜẞäöüßŒœÆæ";
        case Alphabet::korean:
            return U"ㄱㄴㄷㄹㅁㅂㅅㅇㅈㅊㅋㅌ";
        case Alphabet::japanese:
            return U"あいうえおかきくけこさし";
        case Alphabet::italian:
            return U"àèéìíîòóùúâê";
        case Alphabet::bengali:
            return U"অআইঈউঊকখগঘচছ";
        case Alphabet::hindi:
            return U"अआइईउऊकखगघचछ";
        case Alphabet::russian:
            return U"БГДЖЗИЙЛПФЦЧ";
        case Alphabet::thai:
            return U"กขคงจฉชซญดตถ";
        case Alphabet::swahili: return U"abcdefghijkl";
    }
    return {};
}

/// One random stroke glyph: 3-5 bars and diagonals on the 5x7 grid.
inline GlyphBits random_stroke_glyph(CounterRng& rng) {
    GlyphBits g = 0;
    auto set = [&](int r, int c) {
        if (r >= 0 && r < kGlyphHeight && c >= 0 && c < kGlyphWidth) g |= GlyphBits{1} << (r * kGlyphWidth + c);
    };
    const int strokes = rng.uniform_int(3, 5);
    for (int s = 0; s < strokes; ++s) {
        switch (rng.uniform_int(0, 3)) {
            case 0: {  // horizontal bar
                const int r = rng.uniform_int(0, 6), a = rng.uniform_int(0, 2), b = rng.uniform_int(2, 4);
                for (int c = a; c <= b; ++c) set(r, c);
                break;
            }
            case 1: {  // vertical bar
                const int c = rng.uniform_int(0, 4), a = rng.uniform_int(0, 3), b = rng.uniform_int(3, 6);
                for (int r = a; r <= b; ++r) set(r, c);
                break;
            }
            case 2: {  // falling diagonal
                const int r0 = rng.uniform_int(0, 3), c0 = rng.uniform_int(0, 1), len = rng.uniform_int(3, 5);
                for (int i = 0; i < len; ++i) set(r0 + i, c0 + i);
                break;
            }
            default: {  // rising diagonal
                const int r0 = rng.uniform_int(3, 6), c0 = rng.uniform_int(0, 1), len = rng.uniform_int(3, 5);
                for (int i = 0; i < len; ++i) set(r0 - i, c0 + i);
                break;
            }
        }
    }
    return g;
}

inline std::vector<BitmapFont> build_fonts() {
    constexpr std::uint64_t kFontSeed = 0x5EED'F0E7ULL;
    std::vector<GlyphBits> used;
    std::vector<BitmapFont> fonts;
    auto latin = latin_glyphs();
    for (const auto& [cp, g] : latin) used.push_back(g);
    for (Alphabet a : all_alphabets()) {
        if (a == Alphabet::english) {
            fonts.emplace_back(a, latin);
            continue;
        }
        CounterRng rng(derive_seed(kFontSeed, static_cast<std::uint64_t>(a)));
        std::vector<std::pair<char32_t, GlyphBits>> glyphs;
        for (char32_t cp : alphabet_codepoints(a)) {
            for (int attempt = 0;; ++attempt) {
                GLYPHFLOW_CHECK(attempt < 100000, ErrorKind::numeric_error, "build_fonts", "glyph search exhausted");
                const GlyphBits g = random_stroke_glyph(rng);
                const int ink = std::popcount(g);
                if (!well_formed(g) || ink < 10 || ink > 21) continue;
                const bool distinct = std::all_of(used.begin(), used.end(), [&](GlyphBits u) {
                    return glyph_distance(u, g) >= kMinGlyphDistance;
                });
                if (!distinct) continue;
                used.push_back(g);
                glyphs.emplace_back(cp, g);
                break;
            }
        }
        fonts.emplace_back(a, std::move(glyphs));
    }
    return fonts;
}

}  // namespace detail

/// All 13 built-in fonts, indexed by Alphabet. Built once, immutable afterwards.
inline const std::vector<BitmapFont>& builtin_fonts() {
    static const std::vector<BitmapFont> fonts = detail::build_fonts();
    return fonts;
}

inline const BitmapFont& font_for(Alphabet a) { return builtin_fonts()[static_cast<int>(a)]; }

inline const BitmapFont& font_by_name(std::string_view name) { return font_for(alphabet_from_name(name)); }

/// Text export: a "U+XXXX <char>" header line, then 7 rows of '.'/'#', then a blank line.
inline void export_font(std::ostream& os, const BitmapFont& font) {
    os << "# font " << font.name() << " " << font.size() << " glyphs 5x7\n";
    for (const auto& [cp, g] : font.glyphs()) {
        os << utf8::codepoint_label(cp) << ' ' << utf8::encode(cp) << '\n';
        for (int r = 0; r < kGlyphHeight; ++r) {
            for (int c = 0; c < kGlyphWidth; ++c) os << (glyph_bit(g, r, c) ? '#' : '.');
            os << '\n';
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Rendering

struct GlyphMap {
    ImageBuffer image;  // single channel, 1 = stroke
    std::string text;
    Alphabet font = Alphabet::english;
    int scale = 1;
};

inline int rendered_width(std::size_t chars, int scale) {
    return scale * (static_cast<int>(chars) * kGlyphAdvance - 1);
}

inline GlyphMap render_line(std::string_view text, const BitmapFont& font, int scale = 1) {
    GLYPHFLOW_CHECK(scale >= 1, ErrorKind::invalid_argument, "render_line", "scale must be >= 1");
    const std::u32string cps = utf8::decode(text);
    GLYPHFLOW_CHECK(!cps.empty(), ErrorKind::invalid_argument, "render_line", "text must be nonempty");
    std::vector<GlyphBits> bits;
    for (char32_t cp : cps) bits.push_back(font.glyph(cp));
    ImageBuffer img(kGlyphHeight * scale, rendered_width(cps.size(), scale), 1);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const int x0 = static_cast<int>(i) * kGlyphAdvance * scale;
        for (int r = 0; r < kGlyphHeight; ++r)
            for (int c = 0; c < kGlyphWidth; ++c) {
                if (!glyph_bit(bits[i], r, c)) continue;
                for (int dy = 0; dy < scale; ++dy)
                    for (int dx = 0; dx < scale; ++dx) img.at(r * scale + dy, x0 + c * scale + dx) = 1.0f;
            }
    }
    return GlyphMap{std::move(img), std::string(text), font.id(), scale};
}

// ---------------------------------------------------------------------------
// Recognition

namespace detail {

inline GlyphBits sample_cell(const ImageBuffer& bin, int top, int height, int c0, int width) {
    GlyphBits g = 0;
    for (int r = 0; r < kGlyphHeight; ++r) {
        const int ya = top + r * height / kGlyphHeight;
        const int yb = std::max(ya + 1, top + (r + 1) * height / kGlyphHeight);
        for (int c = 0; c < kGlyphWidth; ++c) {
            const int xa = c0 + c * width / kGlyphWidth;
            const int xb = std::max(xa + 1, c0 + (c + 1) * width / kGlyphWidth);
            double s = 0;
            int n = 0;
            for (int y = ya; y < yb; ++y)
                for (int x = xa; x < xb; ++x) {
                    s += bin.at(y, x);
                    ++n;
                }
            if (n && s / n >= 0.5) g |= GlyphBits{1} << (r * kGlyphWidth + c);
        }
    }
    return g;
}

}  // namespace detail

/// Reads a single horizontal line of light-on-dark text.
///
/// Binarizes at 0.5, finds the text rows, estimates the scale from the line
/// height, segments cells on blank-column gaps (falling back to the font
/// pitch when the gap count disagrees with the line width), and matches each
/// cell to the nearest glyph after resampling it to 5x7.
inline std::string recognize(const ImageBuffer& image, const BitmapFont& font) {
    const ImageBuffer gray = to_gray(image);
    const int h = gray.height(), w = gray.width();
    ImageBuffer bin(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) bin.at(y, x) = gray.at(y, x) >= 0.5f ? 1.0f : 0.0f;

    std::vector<int> rows(h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) rows[y] += bin.at(y, x) > 0.5f;
    const int row_max = *std::max_element(rows.begin(), rows.end());
    if (row_max == 0) return {};
    const int row_thr = std::max(1, static_cast<int>(std::ceil(0.2 * row_max)));
    int top = 0, bottom = h - 1;
    while (rows[top] < row_thr) ++top;
    while (rows[bottom] < row_thr) --bottom;
    const int line_h = bottom - top + 1;
    const int scale = std::max(1, static_cast<int>(std::lround(line_h / static_cast<double>(kGlyphHeight))));

    std::vector<int> cols(w, 0);
    for (int x = 0; x < w; ++x)
        for (int y = top; y <= bottom; ++y) cols[x] += bin.at(y, x) > 0.5f;
    const int col_thr = std::max(1, static_cast<int>(std::ceil(0.6 * scale)));
    int left = 0, right = w - 1;
    while (left < w && cols[left] < col_thr) ++left;
    while (right >= 0 && cols[right] < col_thr) --right;
    if (left > right) return {};

    const int pitch = kGlyphAdvance * scale;
    const int n_chars = std::max(1, static_cast<int>(std::lround((right - left + 1 + scale) / static_cast<double>(pitch))));

    std::vector<std::pair<int, int>> cells;  // [x0, x1)
    for (int x = left; x <= right;) {
        if (cols[x] < col_thr) {
            ++x;
            continue;
        }
        int e = x;
        while (e <= right && cols[e] >= col_thr) ++e;
        cells.emplace_back(x, e);
        x = e;
    }
    const int glyph_w = kGlyphWidth * scale;
    const bool gaps_agree =
        static_cast<int>(cells.size()) == n_chars &&
        std::all_of(cells.begin(), cells.end(), [&](const auto& c) {
            return std::abs((c.second - c.first) - glyph_w) <= std::max(1, scale / 2);
        });
    if (!gaps_agree) {
        cells.clear();
        for (int i = 0; i < n_chars; ++i) {
            const int x0 = left + i * pitch;
            const int x1 = std::min(w, x0 + glyph_w);
            if (x0 < x1) cells.emplace_back(x0, x1);
        }
    }

    std::u32string out;
    for (const auto& [x0, x1] : cells) out.push_back(font.nearest(detail::sample_cell(bin, top, line_h, x0, x1 - x0)));
    return utf8::encode(out);
}

/// Reads a scene-text crop: extracts the text foreground (either polarity)
/// and passes it to the recognizer.
inline std::string recognize_scene_text(const ImageBuffer& crop_rgb, const BitmapFont& font) {
    return recognize(text_foreground(crop_rgb), font);
}

}  // namespace glyphflow
