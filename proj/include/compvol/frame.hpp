// SPDX-License-Identifier: Apache-2.0
#pragma once

// Whole-frame rendering: one ray per pixel, feature compositing over the fused
// volume and the per-part mask stack from the same samples and weights.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "compvol/error.hpp"
#include "compvol/lifting.hpp"
#include "compvol/maskrender.hpp"
#include "compvol/parallel.hpp"
#include "compvol/part_model.hpp"
#include "compvol/raycam.hpp"
#include "compvol/renderer.hpp"

namespace compvol {

struct RenderOptions {
    MappingFn mapping = MappingFn::gaussian(1.0);
    std::vector<int> active;  // part indices; empty = all
    MaskWeightMode mask_mode = MaskWeightMode::NerfWeights;
    int depth_planes = 32;                    // Z
    int threads = 0;                          // 0: environment / hardware
    std::optional<std::uint64_t> jitter_seed;  // stratified sampling when set
};

struct RenderedFrame {
    int width = 0;
    int height = 0;
    int channels = 0;
    CameraPose pose;
    std::vector<double> feature;        // h*w*C
    MaskStack mask;                     // softmax over parts
    MaskGrid mask_init;                 // pre-softmax accumulations
    std::vector<std::uint8_t> coverage;  // 1 where the ray hits the volume

    std::span<const double> feature_at(int x, int y) const {
        return {feature.data() + (static_cast<std::size_t>(y) * width + x) * channels,
                static_cast<std::size_t>(channels)};
    }
    bool covered(int x, int y) const { return coverage[static_cast<std::size_t>(y) * width + x] != 0; }
};

namespace detail {
inline std::uint64_t pixel_seed(std::uint64_t seed, std::uint64_t pixel) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (pixel + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
}  // namespace detail

inline RenderedFrame render_frame(const PartSet& parts, const CameraPose& pose, const CameraConfig& cfg,
                                  const RenderOptions& opts = {}) {
    validate(parts);
    validate(cfg);
    const FusedVolume fused = fuse(parts, opts.mapping, opts.depth_planes, opts.active);
    const GridGeom geom = fused.geom();
    const auto rays = generate_rays(pose, cfg);
    const int K = parts.size();
    const int C = parts.channels;
    const int W = cfg.image_w, H = cfg.image_h, N = cfg.n_samples;
    const double scale = optical_scale(geom);

    RenderedFrame frame;
    frame.width = W;
    frame.height = H;
    frame.channels = C;
    frame.pose = pose;
    frame.feature.assign(static_cast<std::size_t>(W) * H * C, 0.0);
    frame.mask = {MaskGrid(W, H, K, 1.0 / K), opts.mask_mode};
    frame.mask_init = MaskGrid(W, H, K, 0.0);
    frame.coverage.assign(static_cast<std::size_t>(W) * H, 0);

    parallel_items(H, resolve_threads(opts.threads), [&](auto&& next) {
        FusedSampler sampler(fused);
        std::vector<double> sigma(N), delta(N), features(static_cast<std::size_t>(N) * C),
            part_density(static_cast<std::size_t>(K) * N);
        for (int row; (row = next()) >= 0;) {
            for (int u = 0; u < W; ++u) {
                const std::size_t pix = static_cast<std::size_t>(row) * W + u;
                const Ray& ray = rays[pix];
                RaySampleBatch batch;
                if (opts.jitter_seed) {
                    std::mt19937_64 rng(detail::pixel_seed(*opts.jitter_seed, pix));
                    batch = place_samples_jittered(ray, geom, N, rng);
                } else {
                    batch = place_samples(ray, geom, N);
                }
                if (!batch.hit) continue;  // zero feature, uniform mask

                std::fill(part_density.begin(), part_density.end(), 0.0);
                for (int i = 0; i < N; ++i) {
                    const auto& s = sampler.sample(batch.points[i]);
                    sigma[i] = s.density;
                    delta[i] = batch.delta[i] * scale;
                    std::copy(s.feature.begin(), s.feature.end(), features.begin() + static_cast<std::ptrdiff_t>(i) * C);
                    for (int k = 0; k < K; ++k) part_density[static_cast<std::size_t>(k) * N + i] = s.part_density[k];
                }
                const auto weights = nerf_weights(sigma, delta);
                double* f = frame.feature.data() + pix * C;
                for (int i = 0; i < N; ++i)
                    for (int c = 0; c < C; ++c) f[c] += weights.w[i] * features[static_cast<std::size_t>(i) * C + c];

                const auto m_init = init_mask_pixel(part_density, K, weights, opts.mask_mode);
                const auto m = softmax_mask(m_init);
                std::copy(m_init.begin(), m_init.end(), frame.mask_init.pixel(u, row).begin());
                std::copy(m.begin(), m.end(), frame.mask.m.pixel(u, row).begin());
                frame.coverage[pix] = 1;
            }
        }
    });
    return frame;
}

}  // namespace compvol
