// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-part semantic masks. Each part's own density is sampled along the ray
// and averaged with the fused-volume compositing weights (or with unit
// weights in the ablation mode); a softmax over parts gives the mask vector.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "compvol/error.hpp"
#include "compvol/renderer.hpp"

namespace compvol {

enum class MaskWeightMode { NerfWeights, Uniform };

inline const char* to_string(MaskWeightMode m) { return m == MaskWeightMode::NerfWeights ? "nerf" : "uniform"; }

/// h x w x K grid, channel innermost.
struct MaskGrid {
    int width = 0;
    int height = 0;
    int parts = 0;
    std::vector<double> values;

    MaskGrid() = default;
    MaskGrid(int w, int h, int k, double fill = 0.0)
        : width(w), height(h), parts(k), values(static_cast<std::size_t>(w) * h * k, fill) {}

    std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * parts; }
    double at(int x, int y, int k) const { return values[offset(x, y) + k]; }
    double& at(int x, int y, int k) { return values[offset(x, y) + k]; }
    std::span<const double> pixel(int x, int y) const {
        return {values.data() + offset(x, y), static_cast<std::size_t>(parts)};
    }
    std::span<double> pixel(int x, int y) { return {values.data() + offset(x, y), static_cast<std::size_t>(parts)}; }
};

struct MaskStack {
    MaskGrid m;
    MaskWeightMode mode = MaskWeightMode::NerfWeights;
};

struct HiResMask {
    MaskGrid m_hr;
    int scale = 1;
};

/// m_init_k = sum_i w_i sigma_k^i. `part_density` holds K rows of N samples.
inline std::vector<double> init_mask_pixel(std::span<const double> part_density, int parts,
                                           const WeightProfile& weights, MaskWeightMode mode) {
    const std::size_t n = weights.w.size();
    if (parts < 1 || part_density.size() != static_cast<std::size_t>(parts) * n)
        throw UsageError("part density samples (" + std::to_string(part_density.size()) + ") do not match K*N (" +
                         std::to_string(parts) + "*" + std::to_string(n) + ")");
    std::vector<double> m(parts, 0.0);
    for (int k = 0; k < parts; ++k) {
        const double* row = part_density.data() + static_cast<std::size_t>(k) * n;
        double acc = 0.0;
        if (mode == MaskWeightMode::NerfWeights)
            for (std::size_t i = 0; i < n; ++i) acc += weights.w[i] * row[i];
        else
            for (std::size_t i = 0; i < n; ++i) acc += row[i];
        m[k] = acc;
    }
    return m;
}

inline std::vector<double> init_mask_pixel(const std::vector<std::vector<double>>& part_density,
                                           const WeightProfile& weights, MaskWeightMode mode) {
    std::vector<double> flat;
    for (const auto& row : part_density) {
        if (row.size() != weights.w.size()) throw UsageError("per-part sample list length differs from N");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return init_mask_pixel(flat, static_cast<int>(part_density.size()), weights, mode);
}

/// Max-subtracted softmax.
inline std::vector<double> softmax_mask(std::span<const double> m_init) {
    std::vector<double> out(m_init.size());
    if (m_init.empty()) return out;
    for (double v : m_init)
        if (!std::isfinite(v)) throw NumericError("softmax of non-finite mask value");
    const double top = *std::max_element(m_init.begin(), m_init.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = std::exp(m_init[k] - top);
        sum += out[k];
    }
    for (double& v : out) v /= sum;
    return out;
}

/// Channelwise bilinear upsampling, half-pixel centers, edge clamp.
inline MaskGrid upsample_bilinear(const MaskGrid& m, int s) {
    if (s < 1) throw UsageError("upsample factor must be >= 1");
    if (s == 1) return m;
    MaskGrid out(m.width * s, m.height * s, m.parts);
    auto axis = [s](int i, int n, int& i0, int& i1, double& f) {
        const double src = std::clamp((i + 0.5) / s - 0.5, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<int>(std::floor(src));
        i1 = std::min(i0 + 1, n - 1);
        f = src - i0;
    };
    for (int y = 0; y < out.height; ++y) {
        int y0, y1;
        double fy;
        axis(y, m.height, y0, y1, fy);
        for (int x = 0; x < out.width; ++x) {
            int x0, x1;
            double fx;
            axis(x, m.width, x0, x1, fx);
            for (int k = 0; k < m.parts; ++k) {
                const double top = m.at(x0, y0, k) * (1.0 - fx) + m.at(x1, y0, k) * fx;
                const double bottom = m.at(x0, y1, k) * (1.0 - fx) + m.at(x1, y1, k) * fx;
                out.at(x, y, k) = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    return out;
}

inline MaskStack upsample_bilinear(const MaskStack& m, int s) { return {upsample_bilinear(m.m, s), m.mode}; }

/// m_hr = upsample(m) + delta, no clamping or renormalization.
inline HiResMask compose_hires_mask(const MaskStack& m, const MaskGrid& delta, int s) {
    if (s < 1) throw UsageError("upsample factor must be >= 1");
    if (delta.width != m.m.width * s || delta.height != m.m.height * s || delta.parts != m.m.parts ||
        delta.values.size() != static_cast<std::size_t>(delta.width) * delta.height * delta.parts)
        throw UsageError("mask residual shape does not match the upsampled mask");
    HiResMask out{upsample_bilinear(m.m, s), s};
    for (std::size_t i = 0; i < out.m_hr.values.size(); ++i) out.m_hr.values[i] += delta.values[i];
    return out;
}

/// Per-pixel index of the largest channel; ties go to the lowest index.
inline std::vector<int> argmax_labels(const MaskGrid& m) {
    std::vector<int> labels(static_cast<std::size_t>(m.width) * m.height, 0);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const auto px = m.pixel(x, y);
            int best = 0;
            for (int k = 1; k < m.parts; ++k)
                if (px[k] > px[best]) best = k;
            labels[static_cast<std::size_t>(y) * m.width + x] = best;
        }
    return labels;
}

}  // namespace compvol
