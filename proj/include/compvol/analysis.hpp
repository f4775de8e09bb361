// SPDX-License-Identifier: Apache-2.0
#pragma once

// Depth-smoothness regularizer with its analytic gradient, a central
// finite-difference checker, and difference-map disentanglement metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compvol/error.hpp"
#include "compvol/image.hpp"
#include "compvol/part_model.hpp"

namespace compvol {

inline constexpr double kDefaultLambdaDs = 0.1;

struct LossReport {
    double l_ds = 0.0;
    double weighted = 0.0;
    double lambda_ds = kDefaultLambdaDs;
};

/// Stacked depth maps, K x H x W, x fastest.
struct DepthStack {
    int parts = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    static DepthStack from(const PartSet& set) {
        DepthStack s{set.size(), set.height, set.width, {}};
        s.values.reserve(static_cast<std::size_t>(s.parts) * s.height * s.width);
        for (const auto& p : set.parts)
            for (float d : p.depth) s.values.push_back(static_cast<double>(d));
        return s;
    }
};

namespace detail {
inline void check_stack(int parts, int height, int width, std::size_t n) {
    if (parts < 1 || height < 1 || width < 1 || n != static_cast<std::size_t>(parts) * height * width)
        throw UsageError("depth stack shape mismatch");
}

/// Calls fn(p, q) for every in-bounds ordered 8-neighbour pair (p, q).
template <class Fn>
void for_each_neighbour_pair(int parts, int height, int width, Fn&& fn) {
    for (int k = 0; k < parts; ++k) {
        const std::size_t base = static_cast<std::size_t>(k) * height * width;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
                        fn(base + static_cast<std::size_t>(y) * width + x,
                           base + static_cast<std::size_t>(ny) * width + nx);
                    }
    }
}
}  // namespace detail

/// Sum of squared 8-neighbour depth differences over A = 8*K*H*W. Every
/// ordered pair counts once (each unordered pair twice); out-of-bounds
/// neighbours are skipped while A stays fixed.
inline double depth_smoothness(std::span<const double> depth, int parts, int height, int width) {
    detail::check_stack(parts, height, width, depth.size());
    double sum = 0.0;
    detail::for_each_neighbour_pair(parts, height, width, [&](std::size_t p, std::size_t q) {
        const double d = depth[p] - depth[q];
        sum += d * d;
    });
    return sum / (8.0 * parts * height * width);
}

/// dL/dd_p = (4/A) * sum over neighbours q of (d_p - d_q).
inline std::vector<double> depth_smoothness_gradient(std::span<const double> depth, int parts, int height,
                                                     int width) {
    detail::check_stack(parts, height, width, depth.size());
    std::vector<double> grad(depth.size(), 0.0);
    const double scale = 4.0 / (8.0 * parts * height * width);
    detail::for_each_neighbour_pair(parts, height, width,
                                    [&](std::size_t p, std::size_t q) { grad[p] += scale * (depth[p] - depth[q]); });
    return grad;
}

inline LossReport regularized_loss_term(const PartSet& set, double lambda_ds) {
    if (!(lambda_ds >= 0.0)) throw DomainError("lambda_ds must be >= 0");
    const auto stack = DepthStack::from(set);
    LossReport r;
    r.l_ds = depth_smoothness(stack.values, stack.parts, stack.height, stack.width);
    r.lambda_ds = lambda_ds;
    r.weighted = lambda_ds * r.l_ds;
    return r;
}

inline LossReport depth_smoothness_loss(const PartSet& set) { return regularized_loss_term(set, kDefaultLambdaDs); }

/// Per-part gradient grids, same layout as DepthStack.
inline std::vector<std::vector<double>> depth_smoothness_grad(const PartSet& set) {
    const auto stack = DepthStack::from(set);
    const auto flat = depth_smoothness_gradient(stack.values, stack.parts, stack.height, stack.width);
    const std::size_t plane = static_cast<std::size_t>(stack.height) * stack.width;
    std::vector<std::vector<double>> out(stack.parts);
    for (int k = 0; k < stack.parts; ++k)
        out[k].assign(flat.begin() + static_cast<std::ptrdiff_t>(k * plane),
                      flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * plane));
    return out;
}

// ---------------------------------------------------------------------------

struct GradCheckReport {
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    int n_probes = 0;
    bool pass = false;
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Compares `analytic` against central differences (f(x+h e) - f(x-h e)) / 2h.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8). Probes every coordinate
/// up to 4096 of them, otherwise an evenly strided subset.
inline GradCheckReport finite_diff_check(const ScalarFn& f, std::span<const double> x,
                                         std::span<const double> analytic, double h, double tolerance) {
    if (!(h > 0.0)) throw DomainError("finite-difference step must be > 0");
    if (analytic.size() != x.size()) throw UsageError("gradient length differs from input length");
    std::vector<double> probe(x.begin(), x.end());
    const std::size_t n = x.size();
    const std::size_t stride = n <= 4096 ? 1 : (n + 4095) / 4096;
    GradCheckReport r;
    for (std::size_t i = 0; i < n; i += stride) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double fp = f(probe);
        probe[i] = orig - h;
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("non-finite function value while probing coordinate " + std::to_string(i));
        const double numeric = (fp - fm) / (2.0 * h);
        const double abs_err = std::abs(analytic[i] - numeric);
        const double rel_err = abs_err / std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        r.max_abs_err = std::max(r.max_abs_err, abs_err);
        r.max_rel_err = std::max(r.max_rel_err, rel_err);
        ++r.n_probes;
    }
    r.pass = r.max_rel_err <= tolerance;
    return r;
}

// ---------------------------------------------------------------------------
// Difference-map metrics

struct DiffMetrics {
    int width = 0;
    int height = 0;
    std::vector<double> map;            // per pixel, mean |a - b| over RGB
    std::vector<std::uint8_t> edited;   // 1 = excluded from the masked mean
    double d_mean = 0.0;
    double d_mean_masked = 0.0;
    std::size_t masked_pixel_count = 0;  // number of edited pixels
};

inline std::vector<double> diff_map(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw UsageError("diff_map: image shapes differ");
    if (a.channels != 3) throw UsageError("diff_map: expected 3-channel images");
    for (const auto* img : {&a, &b})
        for (double v : img->data)
            if (!(v >= 0.0 && v <= 1.0)) throw DomainError("diff_map: pixel values must lie in [0, 1]");
    std::vector<double> map(static_cast<std::size_t>(a.width) * a.height);
    for (std::size_t p = 0; p < map.size(); ++p) {
        const std::size_t o = p * 3;
        map[p] = (std::abs(a.data[o] - b.data[o]) + std::abs(a.data[o + 1] - b.data[o + 1]) +
                  std::abs(a.data[o + 2] - b.data[o + 2])) /
                 3.0;
    }
    return map;
}

inline double d_mean(std::span<const double> map) {
    if (map.empty()) throw UsageError("d_mean of an empty map");
    double sum = 0.0;
    for (double v : map) sum += v;
    return sum / static_cast<double>(map.size());
}

/// Mean over pixels where `edited` is 0.
inline double d_mean_masked(std::span<const double> map, std::span<const std::uint8_t> edited) {
    if (map.size() != edited.size()) throw UsageError("d_mean_masked: mask shape differs from map");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < map.size(); ++i)
        if (!edited[i]) {
            sum += map[i];
            ++count;
        }
    if (count == 0) throw DomainError("d_mean_masked: every pixel is edited");
    return sum / static_cast<double>(count);
}

/// `edited` empty means no pixel is edited.
inline DiffMetrics compute_metrics(const Image& a, const Image& b, std::vector<std::uint8_t> edited = {}) {
    DiffMetrics m;
    m.width = a.width;
    m.height = a.height;
    m.map = diff_map(a, b);
    if (edited.empty()) edited.assign(m.map.size(), 0);
    m.edited = std::move(edited);
    m.d_mean = d_mean(m.map);
    m.d_mean_masked = d_mean_masked(m.map, m.edited);
    m.masked_pixel_count = static_cast<std::size_t>(std::count_if(m.edited.begin(), m.edited.end(),
                                                                  [](std::uint8_t e) { return e != 0; }));
    return m;
}

}  // namespace compvol
