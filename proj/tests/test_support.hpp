// SPDX-License-Identifier: Apache-2.0
#pragma once

// Random inputs and independent oracles shared by the unit and acceptance
// suites. Nothing here calls the code paths it is used to check.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "compvol/part_model.hpp"

namespace compvol::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Random but valid part set: background, face base, then K-2 facial parts.
/// Some density pixels are exactly zero.
inline PartSet random_part_set(std::mt19937_64& rng, int parts, int size, int channels, double zmax) {
    PartSet set;
    set.height = set.width = size;
    set.channels = channels;
    set.face_base_depth = uniform(rng, 0.25 * zmax, 0.75 * zmax);
    for (int k = 0; k < parts; ++k) {
        PartMaps2D p;
        p.id.index = k;
        p.id.kind = k == 0 ? PartKind::Background : (k == 1 ? PartKind::FaceBase : PartKind::Facial);
        p.id.name = k == 0 ? "background" : (k == 1 ? "face_base" : "p" + std::to_string(k));
        p.depth_mode = k < 2 ? DepthMode::Absolute : DepthMode::Relative;
        p.height = p.width = size;
        p.channels = channels;
        const std::size_t n = static_cast<std::size_t>(size) * size;
        p.depth.resize(n);
        p.density.resize(n);
        p.feature.resize(n * channels);
        for (std::size_t i = 0; i < n; ++i) {
            p.depth[i] = static_cast<float>(k < 2 ? uniform(rng, 0.0, zmax) : uniform(rng, -3.0, 3.0));
            p.density[i] = uniform(rng, 0.0, 1.0) < 0.2 ? 0.0f : static_cast<float>(uniform(rng, 0.0, 5.0));
        }
        for (auto& f : p.feature) f = static_cast<float>(uniform(rng, -1.0, 1.0));
        set.parts.push_back(std::move(p));
    }
    return set;
}

/// Trilinear interpolation written as the explicit 8-term weighted sum of
/// corner values, with its own clamping. `value(x, y, z)` gives grid values.
template <class ValueFn>
double trilinear_oracle(ValueFn value, int nx, int ny, int nz, double px, double py, double pz) {
    auto clampd = [](double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); };
    px = clampd(px, 0.0, nx - 1.0);
    py = clampd(py, 0.0, ny - 1.0);
    pz = clampd(pz, 0.0, nz - 1.0);
    int ix = static_cast<int>(std::floor(px)), iy = static_cast<int>(std::floor(py)),
        iz = static_cast<int>(std::floor(pz));
    if (ix == nx - 1) --ix;
    if (iy == ny - 1) --iy;
    if (iz == nz - 1) --iz;
    const double tx = px - ix, ty = py - iy, tz = pz - iz;
    double sum = 0.0;
    for (int a = 0; a <= 1; ++a)
        for (int b = 0; b <= 1; ++b)
            for (int c = 0; c <= 1; ++c) {
                const double w = (a ? tx : 1.0 - tx) * (b ? ty : 1.0 - ty) * (c ? tz : 1.0 - tz);
                sum += w * value(ix + a, iy + b, iz + c);
            }
    return sum;
}

}  // namespace compvol::testing

namespace cvt = compvol::testing;
