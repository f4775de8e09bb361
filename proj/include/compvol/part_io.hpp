// SPDX-License-Identifier: Apache-2.0
#pragma once

// Part-set container: <dir>/manifest.json plus part<k>.{feat,depth,dens}.f32
// raw little-endian float32 tensors (row-major, y, x, channel; no header).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "compvol/error.hpp"
#include "compvol/part_model.hpp"

namespace compvol {

inline constexpr int kPartSetVersion = 1;

namespace detail {

inline void write_f32(const std::filesystem::path& path, const std::vector<float>& data) {
    std::vector<char> bytes(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(data[i]);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed: " + path.string());
}

inline std::vector<float> read_f32(const std::filesystem::path& path, std::size_t count, const std::string& who) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(who + ": missing tensor file " + path.filename().string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != count * 4)
        throw FormatError(who + ": expected " + std::to_string(count * 4) + " bytes, found " +
                          std::to_string(bytes.size()));
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        data[i] = std::bit_cast<float>(bits);
        if (!std::isfinite(data[i])) throw NumericError(who + ": non-finite value at element " + std::to_string(i));
    }
    return data;
}

inline PartKind kind_from_string(const std::string& s) {
    if (s == "background") return PartKind::Background;
    if (s == "face_base") return PartKind::FaceBase;
    if (s == "facial") return PartKind::Facial;
    throw FormatError("unknown part kind '" + s + "'");
}

inline DepthMode depth_mode_from_string(const std::string& s) {
    if (s == "relative") return DepthMode::Relative;
    if (s == "absolute") return DepthMode::Absolute;
    throw FormatError("unknown depth mode '" + s + "'");
}

}  // namespace detail

inline void save_part_set(const PartSet& set, const std::filesystem::path& dir) {
    validate(set);
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["version"] = kPartSetVersion;
    manifest["K"] = set.size();
    manifest["H"] = set.height;
    manifest["W"] = set.width;
    manifest["C"] = set.channels;
    manifest["face_base_depth"] = set.face_base_depth;
    auto parts = nlohmann::ordered_json::array();
    for (const auto& p : set.parts) {
        const std::string stem = "part" + std::to_string(p.id.index);
        parts.push_back({{"index", p.id.index},
                         {"kind", to_string(p.id.kind)},
                         {"name", p.id.name},
                         {"depth_mode", to_string(p.depth_mode)},
                         {"stem", stem}});
        detail::write_f32(dir / (stem + ".feat.f32"), p.feature);
        detail::write_f32(dir / (stem + ".depth.f32"), p.depth);
        detail::write_f32(dir / (stem + ".dens.f32"), p.density);
    }
    manifest["parts"] = std::move(parts);
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw FormatError("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

inline PartSet load_part_set(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw FormatError("no manifest.json in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }

    PartSet set;
    std::vector<nlohmann::json> entries;
    try {
        const int version = manifest.at("version").get<int>();
        if (version != kPartSetVersion)
            throw FormatError("manifest version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kPartSetVersion) + ")");
        const int k = manifest.at("K").get<int>();
        set.height = manifest.at("H").get<int>();
        set.width = manifest.at("W").get<int>();
        set.channels = manifest.at("C").get<int>();
        set.face_base_depth = manifest.value("face_base_depth", 16.0);
        if (k < 2 || set.height < 1 || set.width < 1 || set.channels < 1)
            throw FormatError("manifest dimensions invalid");
        entries = manifest.at("parts").get<std::vector<nlohmann::json>>();
        if (static_cast<int>(entries.size()) != k)
            throw FormatError("manifest declares K=" + std::to_string(k) + " but lists " +
                              std::to_string(entries.size()) + " parts");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }

    const auto pixels = static_cast<std::size_t>(set.height) * set.width;
    for (const auto& e : entries) {
        PartMaps2D p;
        std::string stem;
        try {
            p.id.index = e.at("index").get<int>();
            p.id.kind = detail::kind_from_string(e.at("kind").get<std::string>());
            p.id.name = e.at("name").get<std::string>();
            p.depth_mode = detail::depth_mode_from_string(e.at("depth_mode").get<std::string>());
            stem = e.at("stem").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError(std::string("manifest part entry: ") + ex.what());
        }
        p.height = set.height;
        p.width = set.width;
        p.channels = set.channels;
        const std::string who = "part " + std::to_string(p.id.index) + " (" + p.id.name + ")";
        p.feature = detail::read_f32(dir / (stem + ".feat.f32"), pixels * set.channels, who + " tensor 'feat'");
        p.depth = detail::read_f32(dir / (stem + ".depth.f32"), pixels, who + " tensor 'depth'");
        p.density = detail::read_f32(dir / (stem + ".dens.f32"), pixels, who + " tensor 'dens'");
        set.parts.push_back(std::move(p));
    }
    std::sort(set.parts.begin(), set.parts.end(),
              [](const PartMaps2D& a, const PartMaps2D& b) { return a.id.index < b.id.index; });
    validate(set);
    return set;
}

}  // namespace compvol
