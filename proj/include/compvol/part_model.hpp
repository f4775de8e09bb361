// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-part 2D inputs: feature, depth and density maps for each semantic part,
// the relative/absolute depth convention, and a procedural portrait generator
// standing in for learned per-part generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "compvol/error.hpp"

namespace compvol {

enum class PartKind { Background, FaceBase, Facial };
enum class DepthMode { Relative, Absolute };

inline const char* to_string(PartKind k) {
    switch (k) {
        case PartKind::Background: return "background";
        case PartKind::FaceBase: return "face_base";
        case PartKind::Facial: return "facial";
    }
    return "?";
}

inline const char* to_string(DepthMode m) { return m == DepthMode::Relative ? "relative" : "absolute"; }

struct PartId {
    int index = 0;
    PartKind kind = PartKind::Facial;
    std::string name;

    bool operator==(const PartId&) const = default;
};

/// One part's 2D maps. Storage is row-major, y-major then x then channel,
/// which is also the on-disk layout.
struct PartMaps2D {
    PartId id;
    int height = 0;
    int width = 0;
    int channels = 0;
    DepthMode depth_mode = DepthMode::Relative;
    std::vector<float> feature;  // H*W*C
    std::vector<float> depth;    // H*W, grid-z units
    std::vector<float> density;  // H*W, >= 0

    std::size_t pixel(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    float depth_at(int x, int y) const { return depth[pixel(x, y)]; }
    float density_at(int x, int y) const { return density[pixel(x, y)]; }
    std::span<const float> feature_at(int x, int y) const {
        return {feature.data() + pixel(x, y) * channels, static_cast<std::size_t>(channels)};
    }

    bool operator==(const PartMaps2D&) const = default;
};

struct PartSet {
    std::vector<PartMaps2D> parts;  // ordered by PartId::index
    int height = 0;
    int width = 0;
    int channels = 0;
    double face_base_depth = 16.0;

    int size() const { return static_cast<int>(parts.size()); }

    /// Index of the part with the given name, or -1.
    int find(const std::string& name) const {
        for (const auto& p : parts)
            if (p.id.name == name) return p.id.index;
        return -1;
    }

    bool operator==(const PartSet&) const = default;
};

/// Elliptical density blob of one facial part, in normalized image coordinates.
struct BlobSpec {
    std::string name;
    double cx = 0.5, cy = 0.5;
    double rx = 0.05, ry = 0.05;
    double peak = 4.0;
    double depth_offset = -1.0;  // relative to the face base; negative is nearer the camera
};

struct SynthConfig {
    std::uint64_t seed = 7;
    int parts = 13;  // K
    int height = 64;
    int width = 64;
    int channels = 16;
    int depth_planes = 32;  // Z, used for range checks only
    double face_base_depth = 16.0;
    double background_depth = 30.0;
    double background_density = 2.0;
    double face_density = 3.0;
    /// Facial blobs, K-2 entries. Empty means "seed-jittered default layout".
    std::vector<BlobSpec> blobs;
};

// ---------------------------------------------------------------------------

inline void validate(const PartMaps2D& p) {
    const std::string who = "part " + std::to_string(p.id.index) + " (" + p.id.name + ")";
    if (p.height < 1 || p.width < 1 || p.channels < 1)
        throw ConfigError(who + ": invalid dimensions");
    if (p.height != p.width) throw ConfigError(who + ": maps must be square");
    const auto n = static_cast<std::size_t>(p.height) * p.width;
    if (p.depth.size() != n || p.density.size() != n || p.feature.size() != n * p.channels)
        throw ConfigError(who + ": map sizes do not match dimensions");
    const bool absolute = p.id.kind != PartKind::Facial;
    if (absolute != (p.depth_mode == DepthMode::Absolute))
        throw ConfigError(who + ": background and face base must use absolute depth, facial parts relative");
    for (float v : p.density)
        if (!std::isfinite(v) || v < 0.0f) throw NumericError(who + ": density must be finite and >= 0");
    for (float v : p.depth)
        if (!std::isfinite(v)) throw NumericError(who + ": non-finite depth");
    for (float v : p.feature)
        if (!std::isfinite(v)) throw NumericError(who + ": non-finite feature");
}

inline void validate(const PartSet& set) {
    if (set.size() < 2) throw ConfigError("part set needs at least background and face base");
    if (!std::isfinite(set.face_base_depth)) throw NumericError("non-finite face base depth");
    int backgrounds = 0, face_bases = 0;
    for (int k = 0; k < set.size(); ++k) {
        const auto& p = set.parts[k];
        if (p.id.index != k) throw ConfigError("part indices must be dense and ordered");
        if (p.height != set.height || p.width != set.width || p.channels != set.channels)
            throw ConfigError("part " + std::to_string(k) + ": dimensions differ from the set");
        backgrounds += p.id.kind == PartKind::Background;
        face_bases += p.id.kind == PartKind::FaceBase;
        validate(p);
    }
    if (backgrounds != 1 || face_bases != 1)
        throw ConfigError("part set needs exactly one background and one face base");
}

/// Absolute depth per pixel: relative parts are offset by the face-base depth.
inline std::vector<double> absolute_depth(const PartMaps2D& part, double face_base_depth) {
    std::vector<double> out(part.depth.size());
    const double offset = part.depth_mode == DepthMode::Relative ? face_base_depth : 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(part.depth[i]) + offset;
    return out;
}

// ---------------------------------------------------------------------------

namespace detail {

inline double unit(std::mt19937_64& rng) {  // [0,1), 53 bits
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double symmetric(std::mt19937_64& rng, double half_width) {
    return (2.0 * unit(rng) - 1.0) * half_width;
}

/// Compact Gaussian-profile bump: peak at r=0, exactly zero for r >= 1.
inline double compact_gaussian(double r2) {
    if (r2 >= 1.0) return 0.0;
    constexpr double k = 4.5;
    const double floor = std::exp(-k);
    return (std::exp(-k * r2) - floor) / (1.0 - floor);
}

inline PartMaps2D blank_part(PartId id, DepthMode mode, int h, int w, int c) {
    PartMaps2D p;
    p.id = std::move(id);
    p.height = h;
    p.width = w;
    p.channels = c;
    p.depth_mode = mode;
    p.feature.assign(static_cast<std::size_t>(h) * w * c, 0.0f);
    p.depth.assign(static_cast<std::size_t>(h) * w, 0.0f);
    p.density.assign(static_cast<std::size_t>(h) * w, 0.0f);
    return p;
}

/// Per-part constant vector plus a mild linear gradient across the image.
inline void fill_features(PartMaps2D& p, std::mt19937_64& rng) {
    std::vector<double> base(p.channels), gx(p.channels), gy(p.channels);
    for (int c = 0; c < p.channels; ++c) {
        base[c] = symmetric(rng, 1.0);
        gx[c] = symmetric(rng, 0.25);
        gy[c] = symmetric(rng, 0.25);
    }
    for (int y = 0; y < p.height; ++y) {
        const double v = (y + 0.5) / p.height - 0.5;
        for (int x = 0; x < p.width; ++x) {
            const double u = (x + 0.5) / p.width - 0.5;
            float* f = p.feature.data() + p.pixel(x, y) * p.channels;
            for (int c = 0; c < p.channels; ++c) f[c] = static_cast<float>(base[c] + gx[c] * u + gy[c] * v);
        }
    }
}

// Face ellipse in normalized coordinates.
inline constexpr double kFaceCx = 0.5, kFaceCy = 0.52, kFaceRx = 0.25, kFaceRy = 0.31;

inline std::vector<BlobSpec> default_blob_layout() {
    // Interior parts keep a gap of about two pixels (at 64x64) from each other
    // and from the face outline; hair, ears and neck sit outside the outline.
    return {
        {"l_brow", 0.39, 0.360, 0.065, 0.022, 6.0, -1.0},
        {"r_brow", 0.61, 0.360, 0.065, 0.022, 6.0, -1.0},
        {"l_eye", 0.39, 0.440, 0.055, 0.027, 6.0, -0.5},
        {"r_eye", 0.61, 0.440, 0.055, 0.027, 6.0, -0.5},
        {"nose", 0.50, 0.550, 0.045, 0.060, 6.0, -3.0},
        {"u_lip", 0.50, 0.660, 0.080, 0.022, 6.0, -1.5},
        {"l_lip", 0.50, 0.740, 0.070, 0.025, 6.0, -1.5},
        {"l_ear", 0.180, 0.52, 0.025, 0.070, 6.0, 1.0},
        {"r_ear", 0.820, 0.52, 0.025, 0.070, 6.0, 1.0},
        {"hair", 0.50, 0.130, 0.270, 0.040, 6.0, 0.0},
        {"neck", 0.50, 0.900, 0.100, 0.035, 6.0, 2.0},
    };
}

}  // namespace detail

/// Procedural portrait-like part set. Deterministic in the seed.
inline PartSet synth_part_set(const SynthConfig& cfg) {
    if (cfg.parts < 2) throw ConfigError("synth: K must be >= 2");
    if (cfg.height < 2 || cfg.width < 2 || cfg.height != cfg.width)
        throw ConfigError("synth: maps must be square with side >= 2");
    if (cfg.channels < 1) throw ConfigError("synth: C must be >= 1");
    if (cfg.depth_planes < 2) throw ConfigError("synth: Z must be >= 2");
    const double zmax = cfg.depth_planes - 1;
    if (!(cfg.face_base_depth >= 0.0 && cfg.face_base_depth <= zmax))
        throw ConfigError("synth: face_base_depth outside [0, Z-1]");
    if (!(cfg.background_depth >= 0.0 && cfg.background_depth <= zmax))
        throw ConfigError("synth: background_depth outside [0, Z-1]");
    if (!(cfg.background_density >= 0.0) || !(cfg.face_density >= 0.0))
        throw ConfigError("synth: densities must be >= 0");

    std::mt19937_64 rng(cfg.seed);
    const int n_facial = cfg.parts - 2;

    std::vector<BlobSpec> blobs = cfg.blobs;
    if (blobs.empty()) {
        const auto layout = detail::default_blob_layout();
        for (int i = 0; i < n_facial; ++i) {
            BlobSpec b;
            if (i < static_cast<int>(layout.size())) {
                b = layout[i];
                b.cx += detail::symmetric(rng, 0.005);
                b.cy += detail::symmetric(rng, 0.005);
                b.peak *= 1.0 + detail::symmetric(rng, 0.1);
                b.depth_offset += detail::symmetric(rng, 0.25);
            } else {
                b.name = "part" + std::to_string(i + 2);
                b.cx = 0.5 + detail::symmetric(rng, 0.15);
                b.cy = 0.5 + detail::symmetric(rng, 0.2);
                b.rx = 0.03 + 0.03 * detail::unit(rng);
                b.ry = 0.03 + 0.03 * detail::unit(rng);
                b.peak = 3.0 + detail::unit(rng);
                b.depth_offset = detail::symmetric(rng, 2.0);
            }
            blobs.push_back(b);
        }
    }
    if (static_cast<int>(blobs.size()) != n_facial)
        throw ConfigError("synth: expected " + std::to_string(n_facial) + " blob specs");
    for (const auto& b : blobs) {
        if (!(b.rx > 0.0) || !(b.ry > 0.0)) throw ConfigError("synth: blob radii must be > 0");
        if (!(b.peak >= 0.0)) throw ConfigError("synth: blob peak must be >= 0");
        const double d = cfg.face_base_depth + b.depth_offset;
        if (!(d >= 0.0 && d <= zmax)) throw ConfigError("synth: blob " + b.name + " depth outside grid");
    }

    const int h = cfg.height, w = cfg.width, c = cfg.channels;
    PartSet set;
    set.height = h;
    set.width = w;
    set.channels = c;
    set.face_base_depth = cfg.face_base_depth;

    auto bg = detail::blank_part({0, PartKind::Background, "background"}, DepthMode::Absolute, h, w, c);
    std::fill(bg.depth.begin(), bg.depth.end(), static_cast<float>(cfg.background_depth));
    std::fill(bg.density.begin(), bg.density.end(), static_cast<float>(cfg.background_density));
    detail::fill_features(bg, rng);
    set.parts.push_back(std::move(bg));

    auto face = detail::blank_part({1, PartKind::FaceBase, "face_base"}, DepthMode::Absolute, h, w, c);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = ((x + 0.5) / w - detail::kFaceCx) / detail::kFaceRx;
            const double v = ((y + 0.5) / h - detail::kFaceCy) / detail::kFaceRy;
            const double r2 = u * u + v * v;
            // Flat-topped ellipse with a soft rim, receding slightly toward the edge.
            const double rim = std::clamp((1.0 - std::sqrt(r2)) / 0.1, 0.0, 1.0);
            face.density[face.pixel(x, y)] = static_cast<float>(cfg.face_density * rim * rim * (3.0 - 2.0 * rim));
            const double dome = std::min(zmax, cfg.face_base_depth + 2.0 * std::min(r2, 1.0));
            face.depth[face.pixel(x, y)] = static_cast<float>(dome);
        }
    }
    detail::fill_features(face, rng);
    set.parts.push_back(std::move(face));

    for (int i = 0; i < n_facial; ++i) {
        const auto& b = blobs[i];
        auto p = detail::blank_part({i + 2, PartKind::Facial, b.name}, DepthMode::Relative, h, w, c);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double u = ((x + 0.5) / w - b.cx) / b.rx;
                const double v = ((y + 0.5) / h - b.cy) / b.ry;
                const double profile = detail::compact_gaussian(u * u + v * v);
                p.density[p.pixel(x, y)] = static_cast<float>(b.peak * profile);
                // Slightly more pronounced at the blob center.
                const double rel = b.depth_offset - 0.5 * std::copysign(profile, b.depth_offset);
                p.depth[p.pixel(x, y)] = static_cast<float>(rel);
            }
        }
        detail::fill_features(p, rng);
        set.parts.push_back(std::move(p));
    }
    validate(set);
    return set;
}

/// Two-part occlusion scene on a transparent background: a small opaque
/// disk ("front", index 2) sits strictly in front of a larger denser disk
/// (face base, "rear", index 1). Centers coincide.
struct OcclusionScene {
    int size = 64;
    int channels = 4;
    double rear_depth = 20.0;
    double front_offset = -8.0;  // front absolute depth = rear_depth + front_offset
    double rear_radius = 0.35;   // normalized
    double front_radius = 0.18;
    double rear_density = 4.0;
    double front_density = 2.5;
};

inline PartSet occlusion_part_set(const OcclusionScene& sc = {}) {
    const int n = sc.size, c = sc.channels;
    if (n < 2 || c < 1) throw ConfigError("occlusion scene: invalid dimensions");
    PartSet set;
    set.height = n;
    set.width = n;
    set.channels = c;
    set.face_base_depth = sc.rear_depth;

    auto disk = [&](PartMaps2D& p, double radius, double peak) {
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                const double u = (x + 0.5) / n - 0.5, v = (y + 0.5) / n - 0.5;
                const double r = std::sqrt(u * u + v * v);
                const double edge = std::clamp((radius - r) * n / 2.0, 0.0, 1.0);  // ~2 px rim
                p.density[p.pixel(x, y)] = static_cast<float>(peak * edge);
            }
        }
    };
    auto constant_feature = [&](PartMaps2D& p, int hot) {
        for (std::size_t i = 0; i < p.feature.size(); ++i)
            p.feature[i] = static_cast<int>(i % c) == hot % c ? 1.0f : 0.0f;
    };

    auto bg = detail::blank_part({0, PartKind::Background, "background"}, DepthMode::Absolute, n, n, c);
    std::fill(bg.depth.begin(), bg.depth.end(), 30.0f);
    constant_feature(bg, 0);
    set.parts.push_back(std::move(bg));

    auto rear = detail::blank_part({1, PartKind::FaceBase, "rear"}, DepthMode::Absolute, n, n, c);
    std::fill(rear.depth.begin(), rear.depth.end(), static_cast<float>(sc.rear_depth));
    disk(rear, sc.rear_radius, sc.rear_density);
    constant_feature(rear, 1);
    set.parts.push_back(std::move(rear));

    auto front = detail::blank_part({2, PartKind::Facial, "front"}, DepthMode::Relative, n, n, c);
    std::fill(front.depth.begin(), front.depth.end(), static_cast<float>(sc.front_offset));
    disk(front, sc.front_radius, sc.front_density);
    constant_feature(front, 2);
    set.parts.push_back(std::move(front));

    validate(set);
    return set;
}

}  // namespace compvol
