// SPDX-License-Identifier: Apache-2.0
#pragma once

// Transmittance, compositing weights and per-ray feature rendering over the
// fused volume.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "compvol/error.hpp"
#include "compvol/lifting.hpp"
#include "compvol/raycam.hpp"

namespace compvol {

struct WeightProfile {
    std::vector<double> T;  // T_1 = 1, non-increasing
    std::vector<double> w;  // w_i = T_i (1 - exp(-sigma_i delta_i))
    double residual = 1.0;  // T_{N+1}; sum(w) + residual == 1
};

namespace detail {
inline void check_profile_inputs(std::span<const double> sigma, std::span<const double> delta) {
    if (sigma.size() != delta.size())
        throw UsageError("sigma and delta lengths differ (" + std::to_string(sigma.size()) + " vs " +
                         std::to_string(delta.size()) + ")");
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i]))
            throw DomainError("density must be finite and >= 0 (sample " + std::to_string(i) + ")");
        if (!(delta[i] > 0.0) || !std::isfinite(delta[i]))
            throw DomainError("sample spacing must be finite and > 0 (sample " + std::to_string(i) + ")");
    }
}
}  // namespace detail

/// T_i = exp(-sum_{j<i} sigma_j delta_j).
inline std::vector<double> transmittance(std::span<const double> sigma, std::span<const double> delta) {
    detail::check_profile_inputs(sigma, delta);
    std::vector<double> T(sigma.size());
    double optical = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        T[i] = std::exp(-optical);
        optical += sigma[i] * delta[i];
    }
    return T;
}

inline WeightProfile nerf_weights(std::span<const double> sigma, std::span<const double> delta) {
    detail::check_profile_inputs(sigma, delta);
    WeightProfile p;
    p.T.resize(sigma.size());
    p.w.resize(sigma.size());
    double optical = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double od = sigma[i] * delta[i];
        p.T[i] = std::exp(-optical);
        p.w[i] = p.T[i] * -std::expm1(-od);
        optical += od;
    }
    p.residual = std::exp(-optical);
    return p;
}

/// Densities are per grid-depth voxel; world-space spacings are scaled by
/// Z (voxels per world unit along depth) before compositing.
inline double optical_scale(const GridGeom& g, const Box& box = world_box()) {
    return g.Z / (box.hi.z - box.lo.z);
}

/// sum_i w_i f_i along one ray, with weights from the fused density.
inline std::vector<double> render_pixel_feature(const RaySampleBatch& batch, const FusedVolume& fused) {
    if (!batch.hit) throw UsageError("render_pixel_feature called on a ray that misses the volume");
    FusedSampler sampler(fused);
    const double scale = optical_scale(fused.geom());
    const std::size_t n = batch.points.size();
    std::vector<double> sigma(n), delta(n);
    std::vector<std::vector<double>> features(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = sampler.sample(batch.points[i]);
        sigma[i] = s.density;
        delta[i] = batch.delta[i] * scale;
        features[i] = s.feature;
    }
    const auto weights = nerf_weights(sigma, delta);
    std::vector<double> out(fused.channels(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += weights.w[i] * features[i][c];
    return out;
}

}  // namespace compvol
