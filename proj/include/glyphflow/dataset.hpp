// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic scene-text data: single scenes for self-supervised pretraining,
// source/edited pairs for cooldown, the pair validators, splits and manifests.
//
// Manifest format (manifest.txt, UTF-8, one record per line):
//
//   id=<id>\tsrc=<path>\tedit=<path>\tmask=<path>\tsource_text=<s>\ttarget_text=<s>\tlanguage=<name>\tsplit=<split>
//
// Paths are relative to the manifest's directory. In values '%', TAB, CR and
// LF are written as %25, %09, %0D and %0A. Unpaired records have
// source_text == target_text and identical source/edited images.

#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glyphflow/glyphs.hpp"
#include "glyphflow/image.hpp"
#include "glyphflow/parallel.hpp"
#include "glyphflow/png_io.hpp"
#include "glyphflow/random.hpp"

namespace glyphflow {

inline constexpr int kMaskDilation = 2;
inline constexpr float kBackgroundNoise = 0.05f;
inline constexpr float kMinContrast = 0.3f;
inline constexpr int kSceneMargin = 4;
inline constexpr std::uint64_t kOovSeed = 0x00F0'0F0FULL;

struct Rgb {
    float r = 0, g = 0, b = 0;
    float luma() const { return 0.299f * r + 0.587f * g + 0.114f * b; }
    float& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
    float operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
    bool operator==(const Rgb&) const = default;
};

/// Linear color gradient across the canvas plus seeded Gaussian noise.
struct BackgroundSpec {
    Rgb from;
    Rgb to;
    float angle = 0;
    std::uint64_t noise_seed = 0;
    bool operator==(const BackgroundSpec&) const = default;
};

struct SceneStyle {
    Rgb foreground;
    BackgroundSpec background;
    int scale = 2;
    bool operator==(const SceneStyle&) const = default;
};

struct Scene {
    ImageBuffer image;
    BinaryMask mask;
    std::string text;
    Alphabet language = Alphabet::english;
    SceneStyle style;
    Rect text_box;  // tight box of the rendered line
};

struct PairedSample {
    Scene source;
    Scene edited;
};

struct SceneOptions {
    int resolution = 64;
    int min_length = 1;
    int max_length = 4;
    std::vector<int> scales = {2, 3};
    std::u32string pool;      // glyphs to draw from; empty = the whole alphabet
    std::u32string required;  // when nonempty, generated text contains one of these
};

// ---------------------------------------------------------------------------
// Out-of-vocabulary hold-out

/// ceil(fraction * n) glyphs of an alphabet, chosen by a fixed seeded shuffle.
inline std::u32string held_out_glyphs(Alphabet a, double fraction = 0.1) {
    std::u32string cps = font_for(a).codepoints();
    CounterRng rng(derive_seed(kOovSeed, static_cast<std::uint64_t>(a)));
    rng.shuffle(cps);
    const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(cps.size())));
    std::u32string out = cps.substr(0, n);
    std::sort(out.begin(), out.end());
    return out;
}

/// Glyphs available to training texts: the alphabet minus the held-out set.
inline std::u32string training_glyphs(Alphabet a, double fraction = 0.1) {
    const std::u32string held = held_out_glyphs(a, fraction);
    std::u32string out;
    for (char32_t cp : font_for(a).codepoints())
        if (held.find(cp) == std::u32string::npos) out.push_back(cp);
    return out;
}

// ---------------------------------------------------------------------------
// Scene synthesis

namespace detail {

inline std::u32string random_text(CounterRng& rng, const std::u32string& pool, int length,
                                  const std::u32string& required) {
    std::u32string t;
    for (int i = 0; i < length; ++i) t.push_back(pool[rng.below(pool.size())]);
    if (!required.empty()) t[rng.below(t.size())] = required[rng.below(required.size())];
    return t;
}

inline Rgb gradient_at(const BackgroundSpec& bg, int res, float x, float y) {
    const float c = (res - 1) * 0.5f;
    const float s = std::clamp(((x - c) * std::cos(bg.angle) + (y - c) * std::sin(bg.angle)) / res + 0.5f, 0.0f, 1.0f);
    return Rgb{bg.from.r + (bg.to.r - bg.from.r) * s, bg.from.g + (bg.to.g - bg.from.g) * s,
               bg.from.b + (bg.to.b - bg.from.b) * s};
}

inline ImageBuffer render_background(const BackgroundSpec& bg, int res) {
    ImageBuffer img(res, res, 3);
    const Tensor<float> noise =
        seeded_randn<float>(Shape{static_cast<std::size_t>(res), static_cast<std::size_t>(res), 3}, bg.noise_seed);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const Rgb c = gradient_at(bg, res, static_cast<float>(x), static_cast<float>(y));
            for (int k = 0; k < 3; ++k)
                img.at(y, x, k) =
                    std::clamp(c[k] + kBackgroundNoise * noise[(static_cast<std::size_t>(y) * res + x) * 3 + k], 0.0f, 1.0f);
        }
    return img;
}

/// Noise-free luma range of the background over a rectangle.
inline std::pair<float, float> luma_range(const BackgroundSpec& bg, int res, const Rect& r) {
    float lo = 1, hi = 0;
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x) {
            const float l = gradient_at(bg, res, static_cast<float>(x), static_cast<float>(y)).luma();
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
    return {lo, hi};
}

inline void draw_text(ImageBuffer& img, const GlyphMap& g, int x0, int y0, const Rgb& fg) {
    for (int y = 0; y < g.image.height(); ++y)
        for (int x = 0; x < g.image.width(); ++x)
            if (g.image.at(y, x) > 0.5f)
                for (int k = 0; k < 3; ++k) img.at(y0 + y, x0 + x, k) = fg[k];
}

inline BinaryMask box_mask(int res, const Rect& box) {
    const Rect r{std::max(0, box.x0 - kMaskDilation), std::max(0, box.y0 - kMaskDilation),
                 std::min(res, box.x1 + kMaskDilation), std::min(res, box.y1 + kMaskDilation)};
    return BinaryMask::from_rect(res, res, r);
}

inline Scene compose_scene(const SceneStyle& style, std::string text, Alphabet lang, int res, int x0, int y0) {
    const GlyphMap g = render_line(text, font_for(lang), style.scale);
    Scene s;
    s.image = render_background(style.background, res);
    draw_text(s.image, g, x0, y0, style.foreground);
    s.text_box = Rect{x0, y0, x0 + g.image.width(), y0 + g.image.height()};
    s.mask = box_mask(res, s.text_box);
    s.text = std::move(text);
    s.language = lang;
    s.style = style;
    return s;
}

}  // namespace detail

/// Scene for one seed. `text` and `style` override the random draws.
inline Scene synth_scene(std::uint64_t seed, Alphabet lang, std::optional<std::string> text = std::nullopt,
                         std::optional<SceneStyle> style = std::nullopt, const SceneOptions& opt = {}) {
    const BitmapFont& font = font_for(lang);
    CounterRng rng(derive_seed(seed, 0x5CE7E));
    const int res = opt.resolution;
    std::u32string cps;
    if (text) {
        GLYPHFLOW_CHECK(font.covers(*text), ErrorKind::invalid_argument, "synth_scene", "text '", *text,
                        "' is not drawn from alphabet ", font.name());
        cps = utf8::decode(*text);
        GLYPHFLOW_CHECK(!cps.empty(), ErrorKind::invalid_argument, "synth_scene", "text must be nonempty");
    } else {
        const std::u32string pool = opt.pool.empty() ? font.codepoints() : opt.pool;
        cps = detail::random_text(rng, pool, rng.uniform_int(opt.min_length, opt.max_length), opt.required);
    }

    SceneStyle st;
    st.scale = style ? style->scale : opt.scales[rng.below(opt.scales.size())];
    const int room = res - 2 * kSceneMargin;
    int attempts = 0;
    while (rendered_width(cps.size(), st.scale) > room || kGlyphHeight * st.scale > room) {
        GLYPHFLOW_CHECK(++attempts < 8 && st.scale > 1, ErrorKind::invalid_argument, "synth_scene", "text of ",
                        cps.size(), " glyphs does not fit a ", res, " px canvas");
        --st.scale;
    }
    const int w = rendered_width(cps.size(), st.scale), h = kGlyphHeight * st.scale;
    const int x0 = kSceneMargin + static_cast<int>(rng.below(static_cast<std::uint64_t>(room - w + 1)));
    const int y0 = kSceneMargin + static_cast<int>(rng.below(static_cast<std::uint64_t>(room - h + 1)));
    const Rect box{x0, y0, x0 + w, y0 + h};

    if (style) {
        st.foreground = style->foreground;
        st.background = style->background;
    } else {
        // Background drawn first; the foreground is then chosen against its luma range over the text box.
        for (int tries = 0;; ++tries) {
            GLYPHFLOW_CHECK(tries < 64, ErrorKind::data_error, "synth_scene", "no foreground with enough contrast");
            BackgroundSpec bg;
            for (int k = 0; k < 3; ++k) {
                bg.from[k] = static_cast<float>(rng.uniform(0.1, 0.9));
                bg.to[k] = std::clamp(bg.from[k] + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
            }
            bg.angle = static_cast<float>(rng.uniform(0.0, 2.0 * 3.14159265358979));
            bg.noise_seed = rng.next_u64();
            const auto [lo, hi] = detail::luma_range(bg, res, box);
            bool found = false;
            for (int k = 0; k < 32 && !found; ++k) {
                Rgb fg{static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                       static_cast<float>(rng.uniform())};
                if (fg.luma() <= lo - kMinContrast || fg.luma() >= hi + kMinContrast) {
                    st.foreground = fg;
                    found = true;
                }
            }
            if (found) {
                st.background = bg;
                break;
            }
        }
    }
    return detail::compose_scene(st, utf8::encode(cps), lang, res, x0, y0);
}

/// Source scene plus an edit with a different, same-length-or-shorter text,
/// centered in the source text box, same style and background realization.
inline PairedSample synth_pair(std::uint64_t seed, Alphabet lang, const SceneOptions& source_opt = {},
                               const SceneOptions& target_opt = {}) {
    PairedSample p;
    SceneOptions src_opt = source_opt;
    src_opt.min_length = std::max(src_opt.min_length, 1);
    p.source = synth_scene(seed, lang, std::nullopt, std::nullopt, src_opt);
    const BitmapFont& font = font_for(lang);
    const std::u32string pool = target_opt.pool.empty() ? font.codepoints() : target_opt.pool;
    const std::u32string src = utf8::decode(p.source.text);
    CounterRng rng(derive_seed(seed, 0xED17));
    std::u32string tgt;
    for (int tries = 0;; ++tries) {
        GLYPHFLOW_CHECK(tries < 64, ErrorKind::data_error, "synth_pair", "cannot draw a distinct target text");
        const int n = static_cast<int>(src.size());
        tgt = detail::random_text(rng, pool, rng.uniform_int(std::max(1, n - 1), n), target_opt.required);
        if (tgt != src) break;
    }
    const Rect& sb = p.source.text_box;
    const int w = rendered_width(tgt.size(), p.source.style.scale);
    p.edited = detail::compose_scene(p.source.style, utf8::encode(tgt), lang, p.source.image.height(),
                                     sb.x0 + (sb.width() - w) / 2, sb.y0);
    p.edited.mask = p.source.mask;
    return p;
}

// ---------------------------------------------------------------------------
// Validators

struct PairThresholds {
    float region = 2.0f / 255.0f;  // max abs off-mask difference
    float style = 0.1f;            // max L2 between foreground mean colors
    int dilation = 2;              // mask dilation before the off-mask check

    static PairThresholds parse(const std::string& s) {
        PairThresholds t;
        std::istringstream is(s);
        std::string a, b, c;
        GLYPHFLOW_CHECK(std::getline(is, a, ',') && std::getline(is, b, ',') && std::getline(is, c),
                        ErrorKind::invalid_argument, "thresholds", "expected region,style,dilation; got '", s, "'");
        try {
            t.region = std::stof(a);
            t.style = std::stof(b);
            t.dilation = std::stoi(c);
        } catch (const std::exception&) {
            GLYPHFLOW_THROW(ErrorKind::invalid_argument, "thresholds", "unparsable thresholds '", s, "'");
        }
        GLYPHFLOW_CHECK(t.region >= 0 && t.style >= 0 && t.dilation >= 0, ErrorKind::invalid_argument, "thresholds",
                        "thresholds must be non-negative");
        return t;
    }
};

struct Verdict {
    bool region_ok = false;
    bool text_ok = false;
    bool style_ok = false;
    float region_diff = 0;
    double style_distance = 0;
    std::string recognized;

    bool ok() const { return region_ok && text_ok && style_ok; }
};

/// Mean foreground color of the text inside the mask's bounding rectangle.
inline std::array<double, 3> foreground_color(const ImageBuffer& image, const BinaryMask& mask) {
    const ImageBuffer c = crop(image, mask_bbox(mask));
    return masked_mean_rgb(c, text_foreground(c));
}

inline Verdict validate_pair(const ImageBuffer& source, const ImageBuffer& edited, const BinaryMask& mask,
                             std::string_view target_text, const BitmapFont& font, const PairThresholds& th = {}) {
    GLYPHFLOW_CHECK(source.same_size(edited) && source.channels() == edited.channels() &&
                        source.height() == mask.height() && source.width() == mask.width(),
                    ErrorKind::shape_mismatch, "validate_pair", "source, edited and mask sizes differ");
    Verdict v;
    const BinaryMask grown = mask.dilated(th.dilation);
    const int c = source.channels();
    for (int y = 0; y < source.height(); ++y)
        for (int x = 0; x < source.width(); ++x) {
            if (grown.at(y, x)) continue;
            for (int k = 0; k < c; ++k) v.region_diff = std::max(v.region_diff, std::abs(source.at(y, x, k) - edited.at(y, x, k)));
        }
    v.region_ok = v.region_diff <= th.region;
    v.recognized = recognize_scene_text(crop(edited, mask_bbox(mask)), font);
    v.text_ok = v.recognized == target_text;
    const auto a = foreground_color(source, mask), b = foreground_color(edited, mask);
    v.style_distance = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
    v.style_ok = v.style_distance <= th.style;
    return v;
}

inline Verdict validate_pair(const PairedSample& p, const PairThresholds& th = {}) {
    return validate_pair(p.source.image, p.edited.image, p.source.mask, p.edited.text, font_for(p.edited.language), th);
}

// ---------------------------------------------------------------------------
// Manifests

struct ManifestRecord {
    std::string id;
    std::string src;
    std::string edit;
    std::string mask;
    std::string source_text;
    std::string target_text;
    Alphabet language = Alphabet::english;
    std::string split = "train";

    bool paired() const { return source_text != target_text; }
    bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
    std::filesystem::path root;  // directory that record paths are relative to
    std::vector<ManifestRecord> records;

    std::filesystem::path resolve(const std::string& rel) const { return root / rel; }

    Manifest filtered(std::string_view split) const {
        Manifest m{root, {}};
        for (const auto& r : records)
            if (r.split == split) m.records.push_back(r);
        return m;
    }
};

namespace detail {

inline std::string escape_value(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '%': out += "%25"; break;
            case '\t': out += "%09"; break;
            case '\r': out += "%0D"; break;
            case '\n': out += "%0A"; break;
            default: out += ch;
        }
    }
    return out;
}

inline std::string unescape_value(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out += s[i];
            continue;
        }
        GLYPHFLOW_CHECK(i + 2 < s.size(), ErrorKind::data_error, "manifest", "truncated escape");
        const std::string hex(s.substr(i + 1, 2));
        GLYPHFLOW_CHECK(std::isxdigit(static_cast<unsigned char>(hex[0])) &&
                            std::isxdigit(static_cast<unsigned char>(hex[1])),
                        ErrorKind::data_error, "manifest", "bad escape '%", hex, "'");
        out += static_cast<char>(std::stoi(hex, nullptr, 16));
        i += 2;
    }
    return out;
}

}  // namespace detail

inline void write_manifest(std::ostream& os, const Manifest& m) {
    for (const auto& r : m.records) {
        os << "id=" << detail::escape_value(r.id) << "\tsrc=" << detail::escape_value(r.src)
           << "\tedit=" << detail::escape_value(r.edit) << "\tmask=" << detail::escape_value(r.mask)
           << "\tsource_text=" << detail::escape_value(r.source_text)
           << "\ttarget_text=" << detail::escape_value(r.target_text) << "\tlanguage=" << alphabet_name(r.language)
           << "\tsplit=" << detail::escape_value(r.split) << "\n";
    }
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    std::ofstream os(path, std::ios::binary);
    GLYPHFLOW_CHECK(os.good(), ErrorKind::data_error, "manifest", "cannot write ", path.string());
    write_manifest(os, m);
}

inline Manifest read_manifest(std::istream& is, const std::filesystem::path& root) {
    Manifest m{root, {}};
    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::map<std::string, std::string> kv;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, '\t')) {
            const auto eq = field.find('=');
            GLYPHFLOW_CHECK(eq != std::string::npos, ErrorKind::data_error, "manifest", "line ", lineno,
                            ": field without '='");
            kv[field.substr(0, eq)] = detail::unescape_value(field.substr(eq + 1));
        }
        auto need = [&](const char* k) {
            auto it = kv.find(k);
            GLYPHFLOW_CHECK(it != kv.end(), ErrorKind::data_error, "manifest", "line ", lineno, ": missing key ", k);
            return it->second;
        };
        ManifestRecord r;
        r.id = need("id");
        r.src = need("src");
        r.edit = need("edit");
        r.mask = need("mask");
        r.source_text = need("source_text");
        r.target_text = need("target_text");
        try {
            r.language = alphabet_from_name(need("language"));
        } catch (const Error& e) {
            GLYPHFLOW_THROW(ErrorKind::data_error, "manifest", "line ", lineno, ": ", e.what());
        }
        r.split = need("split");
        GLYPHFLOW_CHECK(ids.insert(r.id).second, ErrorKind::data_error, "manifest", "duplicate id ", r.id);
        m.records.push_back(std::move(r));
    }
    return m;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    GLYPHFLOW_CHECK(is.good(), ErrorKind::data_error, "manifest", "cannot read ", path.string());
    return read_manifest(is, path.parent_path());
}

/// Accepts either a manifest file or a dataset directory containing manifest.txt.
inline Manifest open_manifest(const std::filesystem::path& path) {
    return read_manifest(std::filesystem::is_directory(path) ? path / "manifest.txt" : path);
}

/// Images and texts of one record.
struct LoadedSample {
    std::string id;
    ImageBuffer source;
    ImageBuffer edited;
    BinaryMask mask;
    std::string source_text;
    std::string target_text;
    Alphabet language = Alphabet::english;
};

inline LoadedSample load_sample(const Manifest& m, const ManifestRecord& r) {
    LoadedSample s;
    s.id = r.id;
    s.source = png::read_image(m.resolve(r.src));
    s.edited = r.edit == r.src ? s.source : png::read_image(m.resolve(r.edit));
    s.mask = png::read_mask(m.resolve(r.mask));
    s.source_text = r.source_text;
    s.target_text = r.target_text;
    s.language = r.language;
    GLYPHFLOW_CHECK(s.source.channels() == 3 && s.edited.channels() == 3, ErrorKind::data_error, "load_sample",
                    r.id, ": images must be RGB");
    GLYPHFLOW_CHECK(s.source.same_size(s.edited) && s.source.height() == s.mask.height() &&
                        s.source.width() == s.mask.width(),
                    ErrorKind::data_error, "load_sample", r.id, ": image and mask sizes differ");
    GLYPHFLOW_CHECK(s.mask.count() > 0, ErrorKind::data_error, "load_sample", r.id, ": empty mask");
    return s;
}

inline std::vector<LoadedSample> load_samples(const Manifest& m) {
    std::vector<LoadedSample> out(m.records.size());
    parallel_for(m.records.size(), [&](std::size_t i) { out[i] = load_sample(m, m.records[i]); });
    return out;
}

// ---------------------------------------------------------------------------
// Splits and schedules

/// Seeded per-language shuffle; round(fraction * n_lang) records of each
/// language go to the test side. Record order is preserved on both sides.
inline std::pair<std::vector<ManifestRecord>, std::vector<ManifestRecord>> split(
    const std::vector<ManifestRecord>& records, double test_fraction = 0.2, std::uint64_t seed = 42) {
    GLYPHFLOW_CHECK(!records.empty(), ErrorKind::invalid_argument, "split", "empty manifest");
    GLYPHFLOW_CHECK(test_fraction > 0 && test_fraction < 1, ErrorKind::invalid_argument, "split",
                    "test fraction must lie in (0, 1), got ", test_fraction);
    std::map<int, std::vector<std::size_t>> by_lang;
    for (std::size_t i = 0; i < records.size(); ++i) by_lang[static_cast<int>(records[i].language)].push_back(i);
    std::vector<bool> is_test(records.size(), false);
    for (auto& [lang, idx] : by_lang) {
        CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(lang)));
        rng.shuffle(idx);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
    }
    std::pair<std::vector<ManifestRecord>, std::vector<ManifestRecord>> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        ManifestRecord r = records[i];
        r.split = is_test[i] ? "test" : "train";
        (is_test[i] ? out.second : out.first).push_back(std::move(r));
    }
    return out;
}

/// Languages active at protocol step k (1-based): the first k of `order`.
inline std::vector<Alphabet> language_schedule(const std::vector<Alphabet>& order, int k) {
    GLYPHFLOW_CHECK(k >= 1 && k <= static_cast<int>(order.size()), ErrorKind::invalid_argument, "language_schedule",
                    "step ", k, " outside [1, ", order.size(), "]");
    return {order.begin(), order.begin() + k};
}

// ---------------------------------------------------------------------------
// Dataset generation

struct DatasetSpec {
    std::vector<Alphabet> languages = {Alphabet::english};
    int count = 100;          // records per language before splitting
    bool paired = false;
    std::uint64_t seed = 42;
    double test_fraction = 0.2;
    int oov_count = 0;        // extra per-language records whose targets use held-out glyphs
    SceneOptions scene;
};

namespace detail {

inline std::string record_id(Alphabet a, const char* kind, int i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%s%05d", std::string(alphabet_name(a)).c_str(), kind, i);
    return buf;
}

}  // namespace detail

/// Generates one record's scenes. Unpaired records use the same scene for both sides.
inline PairedSample synth_record(std::uint64_t seed, Alphabet lang, bool paired, bool oov, const SceneOptions& base) {
    SceneOptions src = base, tgt = base;
    src.pool = training_glyphs(lang);
    tgt.pool = src.pool;
    if (oov) tgt.required = held_out_glyphs(lang);
    if (paired) return synth_pair(seed, lang, src, tgt);
    PairedSample p;
    p.source = synth_scene(seed, lang, std::nullopt, std::nullopt, tgt);
    p.edited = p.source;
    return p;
}

/// Writes `{split}/{id}.src.png|.edit.png|.mask.png` and manifest.txt under `dir`.
inline Manifest synth_dataset(const DatasetSpec& spec, const std::filesystem::path& dir) {
    GLYPHFLOW_CHECK(spec.count >= 1 && spec.oov_count >= 0, ErrorKind::invalid_argument, "synth_dataset",
                    "count must be >= 1");
    struct Job {
        ManifestRecord record;
        std::uint64_t seed;
        bool oov;
    };
    std::vector<ManifestRecord> base;
    std::vector<std::uint64_t> seeds;
    for (Alphabet a : spec.languages)
        for (int i = 0; i < spec.count; ++i) {
            ManifestRecord r;
            r.id = detail::record_id(a, "", i);
            r.language = a;
            base.push_back(r);
            seeds.push_back(derive_seed(spec.seed, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(i)));
        }
    std::map<std::string, std::string> split_of;
    if (base.size() >= 2) {
        auto [train, test] = split(base, spec.test_fraction, spec.seed);
        for (const auto& r : train) split_of[r.id] = r.split;
        for (const auto& r : test) split_of[r.id] = r.split;
    }
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < base.size(); ++i) {
        ManifestRecord r = base[i];
        r.split = split_of.count(r.id) ? split_of[r.id] : "train";
        jobs.push_back({r, seeds[i], false});
    }
    for (Alphabet a : spec.languages)
        for (int i = 0; i < spec.oov_count; ++i) {
            ManifestRecord r;
            r.id = detail::record_id(a, "oov", i);
            r.language = a;
            r.split = "oov";
            jobs.push_back({r, derive_seed(derive_seed(spec.seed, kOovSeed), static_cast<std::uint64_t>(a),
                                           static_cast<std::uint64_t>(i)),
                            true});
        }
    for (const char* s : {"train", "test", "oov"}) std::filesystem::create_directories(dir / s);
    parallel_for(jobs.size(), [&](std::size_t i) {
        Job& j = jobs[i];
        const PairedSample p = synth_record(j.seed, j.record.language, spec.paired, j.oov, spec.scene);
        ManifestRecord& r = j.record;
        r.src = r.split + "/" + r.id + ".src.png";
        r.edit = r.split + "/" + r.id + ".edit.png";
        r.mask = r.split + "/" + r.id + ".mask.png";
        r.source_text = p.source.text;
        r.target_text = p.edited.text;
        png::write_image(dir / r.src, p.source.image);
        png::write_image(dir / r.edit, p.edited.image);
        png::write_mask(dir / r.mask, p.source.mask);
    });
    Manifest m{dir, {}};
    for (auto& j : jobs) m.records.push_back(std::move(j.record));
    write_manifest(dir / "manifest.txt", m);
    return m;
}

}  // namespace glyphflow
