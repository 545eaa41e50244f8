// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint files:
//
//   "MSTE", u32 version (1), u32 entry count,
//   entries: u16 name length, UTF-8 name, GFT1 tensor
//
// all integers little-endian. Entries written by this library:
//
//   codec.W          frozen latent codec matrix
//   meta.config      model config as 11 floats (see config_to_tensor)
//   meta.train       [stage, prompt config, layout]
//   meta.step        optimizer step as [low 16 bits, high 16 bits]
//   model.<name>     backbone parameters
//   opt.m.<name>     AdamW first moments  (optional)
//   opt.v.<name>     AdamW second moments (optional)
//   opt.counters     [step lo, step hi, skipped lo, skipped hi] (optional)

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "glyphflow/backbone.hpp"
#include "glyphflow/encoders.hpp"
#include "glyphflow/optim.hpp"
#include "glyphflow/prompt.hpp"

namespace glyphflow {

enum class Stage { pretrain, cooldown };

inline std::string_view to_string(Stage s) { return s == Stage::pretrain ? "pretrain" : "cooldown"; }

inline Stage stage_from_string(std::string_view s) {
    if (s == "pretrain") return Stage::pretrain;
    if (s == "cooldown") return Stage::cooldown;
    GLYPHFLOW_THROW(ErrorKind::invalid_argument, "stage", "unknown stage '", std::string(s), "'");
}

/// Ordered named tensors as stored on disk.
using TensorEntries = std::vector<std::pair<std::string, Tensor<float>>>;

namespace mste {

inline constexpr std::uint32_t kVersion = 1;

inline void write(std::ostream& os, const TensorEntries& entries) {
    os.write("MSTE", 4);
    gft1::detail::put_u32(os, kVersion);
    gft1::detail::put_u32(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, t] : entries) {
        GLYPHFLOW_CHECK(name.size() < 65536, ErrorKind::invalid_argument, "mste", "name too long");
        const auto n = static_cast<std::uint16_t>(name.size());
        const unsigned char len[2] = {static_cast<unsigned char>(n & 0xFF), static_cast<unsigned char>(n >> 8)};
        os.write(reinterpret_cast<const char*>(len), 2);
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        gft1::write(os, t);
    }
}

inline TensorEntries read(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    GLYPHFLOW_CHECK(is.gcount() == 4 && std::memcmp(magic, "MSTE", 4) == 0, ErrorKind::data_error, "mste",
                    "bad magic");
    const std::uint32_t version = gft1::detail::get_u32(is);
    GLYPHFLOW_CHECK(version == kVersion, ErrorKind::data_error, "mste", "unsupported version ", version);
    const std::uint32_t count = gft1::detail::get_u32(is);
    TensorEntries out;
    for (std::uint32_t i = 0; i < count; ++i) {
        unsigned char len[2];
        is.read(reinterpret_cast<char*>(len), 2);
        GLYPHFLOW_CHECK(is.gcount() == 2, ErrorKind::data_error, "mste", "truncated entry header");
        std::string name(static_cast<std::size_t>(len[0] | (len[1] << 8)), '\0');
        is.read(name.data(), static_cast<std::streamsize>(name.size()));
        GLYPHFLOW_CHECK(is.gcount() == static_cast<std::streamsize>(name.size()), ErrorKind::data_error, "mste",
                        "truncated entry name");
        out.emplace_back(std::move(name), gft1::read(is));
    }
    return out;
}

}  // namespace mste

struct Checkpoint {
    ModelConfig config;
    ModelParams<float> params;
    LatentCodec codec;
    Stage stage = Stage::pretrain;
    PromptConfig prompt = PromptConfig::text_glyph;
    PromptLayout layout = PromptLayout::region;
    std::uint64_t step = 0;
    std::optional<OptimizerState> optimizer;

    static Checkpoint fresh(const ModelConfig& cfg, std::uint64_t seed) {
        return Checkpoint{cfg, init_params<float>(cfg, seed), LatentCodec(cfg.codec_patch, 1), Stage::pretrain,
                          PromptConfig::text_glyph, PromptLayout::region, 0, std::nullopt};
    }
};

namespace detail {

inline Tensor<float> u32_pair(std::uint64_t v) {
    GLYPHFLOW_CHECK(v < (1ULL << 32), ErrorKind::invalid_argument, "checkpoint", "counter overflow");
    return Tensor<float>(Shape{2}, {static_cast<float>(v & 0xFFFF), static_cast<float>(v >> 16)});
}

inline std::uint64_t from_pair(const Tensor<float>& t, std::size_t at = 0) {
    return static_cast<std::uint64_t>(t[at]) | (static_cast<std::uint64_t>(t[at + 1]) << 16);
}

inline Tensor<float> config_to_tensor(const ModelConfig& c) {
    return Tensor<float>(Shape{11}, {static_cast<float>(c.d_model), static_cast<float>(c.heads),
                                     static_cast<float>(c.dual_blocks), static_cast<float>(c.single_blocks),
                                     static_cast<float>(c.d_txt), static_cast<float>(c.patch),
                                     static_cast<float>(c.resolution), static_cast<float>(c.cond_channels),
                                     static_cast<float>(c.target_channels), static_cast<float>(c.codec_patch),
                                     static_cast<float>(c.mlp_ratio)});
}

inline ModelConfig config_from_tensor(const Tensor<float>& t) {
    GLYPHFLOW_CHECK(t.numel() == 11, ErrorKind::data_error, "checkpoint", "bad meta.config");
    ModelConfig c;
    int* fields[] = {&c.d_model, &c.heads, &c.dual_blocks, &c.single_blocks, &c.d_txt, &c.patch,
                     &c.resolution, &c.cond_channels, &c.target_channels, &c.codec_patch, &c.mlp_ratio};
    for (std::size_t i = 0; i < 11; ++i) *fields[i] = static_cast<int>(t[i]);
    return c;
}

}  // namespace detail

inline TensorEntries to_entries(const Checkpoint& ck) {
    TensorEntries e;
    e.emplace_back("codec.W", ck.codec.matrix());
    e.emplace_back("meta.config", detail::config_to_tensor(ck.config));
    e.emplace_back("meta.train", Tensor<float>(Shape{3}, {static_cast<float>(ck.stage), static_cast<float>(ck.prompt),
                                                          static_cast<float>(ck.layout)}));
    e.emplace_back("meta.step", detail::u32_pair(ck.step));
    for (const auto& [n, t] : ck.params.entries()) e.emplace_back("model." + n, t);
    if (ck.optimizer) {
        const auto& params = ck.params.entries();
        for (std::size_t i = 0; i < params.size(); ++i) e.emplace_back("opt.m." + params[i].first, ck.optimizer->m[i]);
        for (std::size_t i = 0; i < params.size(); ++i) e.emplace_back("opt.v." + params[i].first, ck.optimizer->v[i]);
        Tensor<float> counters(Shape{4});
        const auto a = detail::u32_pair(ck.optimizer->step), b = detail::u32_pair(ck.optimizer->skipped);
        counters[0] = a[0], counters[1] = a[1], counters[2] = b[0], counters[3] = b[1];
        e.emplace_back("opt.counters", counters);
    }
    return e;
}

inline Checkpoint from_entries(const TensorEntries& entries) {
    std::map<std::string, const Tensor<float>*> by_name;
    for (const auto& [n, t] : entries) by_name[n] = &t;
    auto need = [&](const std::string& n) -> const Tensor<float>& {
        auto it = by_name.find(n);
        GLYPHFLOW_CHECK(it != by_name.end(), ErrorKind::data_error, "checkpoint", "missing entry ", n);
        return *it->second;
    };
    Checkpoint ck;
    ck.config = detail::config_from_tensor(need("meta.config"));
    ck.config.validate();
    const auto& train = need("meta.train");
    GLYPHFLOW_CHECK(train.numel() == 3, ErrorKind::data_error, "checkpoint", "bad meta.train");
    ck.stage = static_cast<Stage>(static_cast<int>(train[0]));
    ck.prompt = static_cast<PromptConfig>(static_cast<int>(train[1]));
    ck.layout = static_cast<PromptLayout>(static_cast<int>(train[2]));
    ck.step = detail::from_pair(need("meta.step"));
    ck.codec = LatentCodec(ck.config.codec_patch, 1, need("codec.W"));
    for (const auto& [name, shape] : parameter_layout(ck.config)) {
        const auto& t = need("model." + name);
        GLYPHFLOW_CHECK(t.shape() == shape, ErrorKind::data_error, "checkpoint", "parameter ", name, " has shape ",
                        shape_str(t.shape()), ", config expects ", shape_str(shape));
        ck.params.add(name, t);
    }
    if (by_name.count("opt.counters")) {
        OptimizerState s;
        for (const auto& [name, _] : ck.params.entries()) {
            s.m.push_back(need("opt.m." + name));
            s.v.push_back(need("opt.v." + name));
        }
        const auto& c = need("opt.counters");
        s.step = detail::from_pair(c, 0);
        s.skipped = detail::from_pair(c, 2);
        ck.optimizer = std::move(s);
    }
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    GLYPHFLOW_CHECK(os.good(), ErrorKind::data_error, "checkpoint", "cannot write ", path.string());
    mste::write(os, to_entries(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    GLYPHFLOW_CHECK(is.good(), ErrorKind::data_error, "checkpoint", "cannot read ", path.string());
    return from_entries(mste::read(is));
}

}  // namespace glyphflow
