// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "adversary.hpp"
#include "glyphflow/dataset.hpp"
#include "test_util.hpp"

using namespace glyphflow;
using glyphflow::testing::throws_kind;
namespace gt = glyphflow::testing;

namespace {

bool same_bytes(const ImageBuffer& a, const ImageBuffer& b) {
    return a.same_size(b) && a.channels() == b.channels() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

std::vector<ManifestRecord> fake_records(const std::vector<std::pair<Alphabet, int>>& counts) {
    std::vector<ManifestRecord> out;
    for (auto [a, n] : counts)
        for (int i = 0; i < n; ++i) {
            ManifestRecord r;
            r.id = std::string(alphabet_name(a)) + std::to_string(i);
            r.language = a;
            out.push_back(r);
        }
    return out;
}

}  // namespace

TEST(SynthScene, RecognizerRecoversText) {
    for (Alphabet a : all_alphabets())
        for (std::uint64_t s = 0; s < 40; ++s) {
            const Scene sc = synth_scene(derive_seed(s, 1), a);
            ASSERT_EQ(recognize_scene_text(crop(sc.image, mask_bbox(sc.mask)), font_for(a)), sc.text)
                << alphabet_name(a) << " seed " << s;
        }
}

TEST(SynthScene, DeterministicBytes) {
    const Scene a = synth_scene(7, Alphabet::korean), b = synth_scene(7, Alphabet::korean);
    EXPECT_TRUE(same_bytes(a.image, b.image));
    EXPECT_EQ(a.text, b.text);
    EXPECT_EQ(a.style, b.style);
    EXPECT_FALSE(same_bytes(a.image, synth_scene(8, Alphabet::korean).image));
}

TEST(SynthScene, MaskContainsTextAndContrastHolds) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const Scene sc = synth_scene(s, Alphabet::english);
        const GlyphMap g = render_line(sc.text, font_for(Alphabet::english), sc.style.scale);
        const Rect& box = sc.text_box;
        EXPECT_EQ(box.width(), g.image.width());
        for (int y = 0; y < g.image.height(); ++y)
            for (int x = 0; x < g.image.width(); ++x)
                if (g.image.at(y, x) > 0.5f) {
                    ASSERT_TRUE(sc.mask.at(box.y0 + y, box.x0 + x));
                    for (int k = 0; k < 3; ++k) ASSERT_EQ(sc.image.at(box.y0 + y, box.x0 + x, k), sc.style.foreground[k]);
                }
        EXPECT_EQ(mask_bbox(sc.mask), (Rect{box.x0 - 2, box.y0 - 2, box.x1 + 2, box.y1 + 2}));
        const auto [lo, hi] = detail::luma_range(sc.style.background, 64, box);
        const float l = sc.style.foreground.luma();
        EXPECT_TRUE(l <= lo - kMinContrast || l >= hi + kMinContrast) << s;
    }
}

TEST(SynthScene, BackgroundNoiseAmplitude) {
    const Scene sc = synth_scene(3, Alphabet::english);
    double s2 = 0;
    int n = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (sc.mask.at(y, x)) continue;
            const Rgb c = detail::gradient_at(sc.style.background, 64, static_cast<float>(x), static_cast<float>(y));
            for (int k = 0; k < 3; ++k) {
                const double d = sc.image.at(y, x, k) - c[k];
                s2 += d * d;
                ++n;
            }
        }
    EXPECT_NEAR(std::sqrt(s2 / n), kBackgroundNoise, 0.01);
}

TEST(SynthScene, TooLongTextErrors) {
    EXPECT_TRUE(throws_kind([] { synth_scene(1, Alphabet::english, std::string(20, 'A')); }, ErrorKind::invalid_argument));
    // shrinks the scale rather than failing when a smaller scale fits
    SceneOptions opt;
    opt.scales = {3};
    const Scene sc = synth_scene(1, Alphabet::english, std::string("ABCDEF"), std::nullopt, opt);
    EXPECT_LT(sc.style.scale, 3);
    EXPECT_TRUE(throws_kind([] { synth_scene(1, Alphabet::english, std::string("a")); }, ErrorKind::invalid_argument));
}

TEST(SynthPair, SharedBackgroundAndStyle) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const PairedSample p = synth_pair(s, all_alphabets()[s % 13]);
        ASSERT_NE(p.source.text, p.edited.text);
        ASSERT_LE(utf8::decode(p.edited.text).size(), utf8::decode(p.source.text).size());
        ASSERT_EQ(p.source.style, p.edited.style);
        ASSERT_TRUE(std::equal(p.source.mask.data().begin(), p.source.mask.data().end(), p.edited.mask.data().begin()));
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (!p.source.mask.at(y, x)) {
                    for (int k = 0; k < 3; ++k) ASSERT_EQ(p.source.image.at(y, x, k), p.edited.image.at(y, x, k));
                }
        const auto a = foreground_color(p.source.image, p.source.mask);
        const auto b = foreground_color(p.edited.image, p.edited.mask);
        for (int k = 0; k < 3; ++k) ASSERT_NEAR(a[k], b[k], 1e-6) << s;
    }
}

TEST(ValidatePair, GeneratedPairsPass) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const PairedSample p = synth_pair(derive_seed(s, 77), all_alphabets()[s % 13]);
        const Verdict v = validate_pair(p);
        ASSERT_TRUE(v.ok()) << s << " region " << v.region_diff << " style " << v.style_distance << " read '"
                            << v.recognized << "' want '" << p.edited.text << "'";
    }
}

TEST(ValidatePair, EachDefectFailsItsOwnCheck) {
    for (std::uint64_t s = 0; s < 150; ++s) {
        const PairedSample p = synth_pair(derive_seed(s, 78), all_alphabets()[s % 13]);
        const gt::Defect d = static_cast<gt::Defect>(s % 3);
        const gt::Corrupted c = gt::corrupt(p, d, s);
        const Verdict v = validate_pair(p.source.image, c.edited, p.source.mask, c.target_text, font_for(p.edited.language));
        ASSERT_TRUE(gt::fails_only(v, d)) << "seed " << s << " defect " << static_cast<int>(d) << " region "
                                          << v.region_ok << " text " << v.text_ok << " style " << v.style_ok;
    }
}

TEST(ValidatePair, SpecThresholdArithmetic) {
    const PairedSample p = synth_pair(5, Alphabet::english);
    ImageBuffer far = p.edited.image;
    far.at(0, 0, 1) = far.at(0, 0, 1) > 0.5f ? far.at(0, 0, 1) - 0.5f : far.at(0, 0, 1) + 0.5f;
    ASSERT_FALSE(p.source.mask.dilated(2).at(0, 0));
    EXPECT_FALSE(validate_pair(p.source.image, far, p.source.mask, p.edited.text, font_for(Alphabet::english)).region_ok);

    const Verdict base = validate_pair(p);
    const gt::Corrupted c = gt::recolor(p);
    const Verdict v = validate_pair(p.source.image, c.edited, p.source.mask, c.target_text, font_for(Alphabet::english));
    EXPECT_FALSE(v.style_ok);
    EXPECT_NEAR(v.style_distance, 0.3, 0.02);
    EXPECT_EQ(v.region_ok, base.region_ok);
}

TEST(ValidatePair, LooserThresholdsNeverFlipPassToFail) {
    const PairThresholds tight{};
    for (std::uint64_t s = 0; s < 60; ++s) {
        const PairedSample p = synth_pair(derive_seed(s, 3), Alphabet::french);
        const gt::Corrupted c = gt::corrupt(p, static_cast<gt::Defect>(s % 3), s);
        const auto& font = font_for(Alphabet::french);
        const Verdict a = validate_pair(p.source.image, c.edited, p.source.mask, c.target_text, font, tight);
        for (const PairThresholds& loose :
             {PairThresholds{0.6f, 0.1f, 2}, PairThresholds{2.0f / 255, 0.5f, 2}, PairThresholds{2.0f / 255, 0.1f, 4}}) {
            const Verdict b = validate_pair(p.source.image, c.edited, p.source.mask, c.target_text, font, loose);
            if (a.region_ok) { ASSERT_TRUE(b.region_ok); }
            if (a.text_ok) { ASSERT_TRUE(b.text_ok); }
            if (a.style_ok) { ASSERT_TRUE(b.style_ok); }
        }
    }
}

TEST(ValidatePair, ThresholdParsing) {
    const auto t = PairThresholds::parse("0.01,0.2,3");
    EXPECT_FLOAT_EQ(t.region, 0.01f);
    EXPECT_FLOAT_EQ(t.style, 0.2f);
    EXPECT_EQ(t.dilation, 3);
    EXPECT_TRUE(throws_kind([] { PairThresholds::parse("0.1,0.2"); }, ErrorKind::invalid_argument));
    EXPECT_TRUE(throws_kind([] { PairThresholds::parse("a,b,c"); }, ErrorKind::invalid_argument));
    EXPECT_TRUE(throws_kind([] { PairThresholds::parse("-1,0.2,1"); }, ErrorKind::invalid_argument));
}

TEST(Split, ExactCountsAndDeterminism) {
    const auto recs = fake_records({{Alphabet::english, 100}});
    const auto [train, test] = split(recs, 0.2, 42);
    EXPECT_EQ(train.size(), 80u);
    EXPECT_EQ(test.size(), 20u);
    const auto again = split(recs, 0.2, 42);
    EXPECT_EQ(again.first, train);
    EXPECT_EQ(again.second, test);
    EXPECT_NE(split(recs, 0.2, 43).second, test);
    std::set<std::string> ids;
    for (const auto& r : train) {
        EXPECT_EQ(r.split, "train");
        ids.insert(r.id);
    }
    for (const auto& r : test) {
        EXPECT_EQ(r.split, "test");
        EXPECT_TRUE(ids.insert(r.id).second) << "overlap " << r.id;
    }
    EXPECT_EQ(ids.size(), 100u);
}

TEST(Split, StratifiedPerLanguage) {
    const auto recs = fake_records({{Alphabet::arabic, 37}, {Alphabet::thai, 11}, {Alphabet::hindi, 52}});
    const auto [train, test] = split(recs, 0.2, 1);
    std::map<Alphabet, int> total, in_test;
    for (const auto& r : recs) ++total[r.language];
    for (const auto& r : test) ++in_test[r.language];
    for (auto [a, n] : total) EXPECT_LE(std::abs(in_test[a] - 0.2 * n), 1.0) << alphabet_name(a);
}

TEST(Split, Errors) {
    EXPECT_TRUE(throws_kind([] { split({}, 0.2, 1); }, ErrorKind::invalid_argument));
    const auto recs = fake_records({{Alphabet::english, 4}});
    EXPECT_TRUE(throws_kind([&] { split(recs, 0.0, 1); }, ErrorKind::invalid_argument));
    EXPECT_TRUE(throws_kind([&] { split(recs, 1.0, 1); }, ErrorKind::invalid_argument));
}

TEST(LanguageSchedule, FollowsIntroductionOrder) {
    const auto order = all_alphabets();
    EXPECT_EQ(language_schedule(order, 1), std::vector<Alphabet>{Alphabet::arabic});
    EXPECT_EQ(language_schedule(order, 3), (std::vector<Alphabet>{Alphabet::arabic, Alphabet::english, Alphabet::french}));
    EXPECT_EQ(language_schedule(order, 13), order);
    EXPECT_EQ(order.back(), Alphabet::swahili);
    EXPECT_TRUE(throws_kind([&] { language_schedule(order, 0); }, ErrorKind::invalid_argument));
    EXPECT_TRUE(throws_kind([&] { language_schedule(order, 14); }, ErrorKind::invalid_argument));
}

TEST(OutOfVocabulary, HoldOutIsTenPercentAndDisjoint) {
    for (Alphabet a : all_alphabets()) {
        const auto held = held_out_glyphs(a), train = training_glyphs(a);
        const std::size_t n = font_for(a).size();
        EXPECT_EQ(held.size(), static_cast<std::size_t>(std::ceil(0.1 * n)));
        EXPECT_EQ(held.size() + train.size(), n);
        for (char32_t c : held) EXPECT_EQ(train.find(c), std::u32string::npos);
    }
    for (std::uint64_t s = 0; s < 30; ++s) {
        const PairedSample train_rec = synth_record(s, Alphabet::german, true, false, {});
        const auto held = held_out_glyphs(Alphabet::german);
        for (char32_t c : utf8::decode(train_rec.source.text + train_rec.edited.text))
            ASSERT_EQ(held.find(c), std::u32string::npos);
        const PairedSample oov = synth_record(s, Alphabet::german, true, true, {});
        bool has = false;
        for (char32_t c : utf8::decode(oov.edited.text)) has |= held.find(c) != std::u32string::npos;
        ASSERT_TRUE(has);
    }
}

TEST(Manifest, RoundTripWithEscapes) {
    Manifest m;
    m.root = "/data";
    ManifestRecord r;
    r.id = "x1";
    r.src = "train/x1.src.png";
    r.edit = "train/x1.edit.png";
    r.mask = "train/x1.mask.png";
    r.source_text = "a\tb%c";
    r.target_text = "line\nbreak\r";
    r.language = Alphabet::thai;
    m.records.push_back(r);
    r.id = "x2";
    r.source_text = r.target_text = "\xD0\x96";
    m.records.push_back(r);
    std::stringstream ss;
    write_manifest(ss, m);
    const std::string text = ss.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    const Manifest back = read_manifest(ss, "/data");
    EXPECT_EQ(back.records, m.records);
}

TEST(Manifest, RejectsDuplicatesAndGarbage) {
    std::istringstream dup("id=a\tsrc=s\tedit=e\tmask=m\tsource_text=A\ttarget_text=A\tlanguage=english\tsplit=train\n"
                           "id=a\tsrc=s\tedit=e\tmask=m\tsource_text=A\ttarget_text=A\tlanguage=english\tsplit=train\n");
    EXPECT_TRUE(throws_kind([&] { read_manifest(dup, "."); }, ErrorKind::data_error));
    std::istringstream bad("id=a\tsrc\n");
    EXPECT_TRUE(throws_kind([&] { read_manifest(bad, "."); }, ErrorKind::data_error));
    std::istringstream lang("id=a\tsrc=s\tedit=e\tmask=m\tsource_text=A\ttarget_text=A\tlanguage=vulcan\tsplit=train\n");
    EXPECT_TRUE(throws_kind([&] { read_manifest(lang, "."); }, ErrorKind::data_error));
}

TEST(SynthDataset, LayoutAndReload) {
    const auto dir = gt::scratch_dir("dataset");
    DatasetSpec spec;
    spec.languages = {Alphabet::english, Alphabet::hindi};
    spec.count = 10;
    spec.paired = true;
    spec.oov_count = 2;
    const Manifest m = synth_dataset(spec, dir);
    ASSERT_EQ(m.records.size(), 24u);
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.txt"));
    const Manifest back = open_manifest(dir);
    EXPECT_EQ(back.records, m.records);
    std::map<std::string, int> per_split;
    for (const auto& r : back.records) {
        ++per_split[r.split];
        EXPECT_TRUE(std::filesystem::exists(dir / r.split / (r.id + ".src.png")));
        EXPECT_TRUE(std::filesystem::exists(dir / r.split / (r.id + ".edit.png")));
        EXPECT_TRUE(std::filesystem::exists(dir / r.split / (r.id + ".mask.png")));
    }
    EXPECT_EQ(per_split["train"], 16);
    EXPECT_EQ(per_split["test"], 4);
    EXPECT_EQ(per_split["oov"], 4);
    const auto samples = load_samples(back);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const Verdict v = validate_pair(s.source, s.edited, s.mask, s.target_text, font_for(s.language));
        EXPECT_TRUE(v.ok()) << s.id;
    }
    // same spec, same bytes
    const auto dir2 = gt::scratch_dir("dataset2");
    synth_dataset(spec, dir2);
    for (const auto& r : m.records) {
        const auto a = png::read_image(dir / r.src), b = png::read_image(dir2 / r.src);
        ASSERT_TRUE(same_bytes(a, b)) << r.id;
    }
}

TEST(SynthDataset, MissingFilesAreDataErrors) {
    const auto dir = gt::scratch_dir("dataset_missing");
    DatasetSpec spec;
    spec.count = 3;
    const Manifest m = synth_dataset(spec, dir);
    std::filesystem::remove(dir / m.records[0].mask);
    EXPECT_TRUE(throws_kind([&] { load_samples(m); }, ErrorKind::data_error));
    EXPECT_TRUE(throws_kind([&] { open_manifest(dir / "nope"); }, ErrorKind::data_error));
}
