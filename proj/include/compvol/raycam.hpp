// SPDX-License-Identifier: Apache-2.0
#pragma once

// Orbit camera, pose distribution, per-pixel ray generation and sample
// placement inside the world box.
//
// World mapping (grid index -> world):
//   x_w = (x + 0.5) / X * 2 - 1      (left to right)
//   y_w = 1 - (y + 0.5) / Y * 2      (image row 0 is at the top)
//   z_w = 0.5 - (z + 0.5) / Z        (depth grows away from the frontal camera)
// so the world box is [-1, 1]^2 x [-0.5, 0.5] and the frontal camera sits on +z.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "compvol/error.hpp"
#include "compvol/lifting.hpp"

namespace compvol {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(Vec3 a) { return (1.0 / norm(a)) * a; }

struct CameraPose {
    double yaw = std::numbers::pi / 2;
    double pitch = std::numbers::pi / 2;

    static constexpr CameraPose frontal() { return {}; }
};

inline constexpr double kPoseMean = std::numbers::pi / 2;
inline constexpr double kYawStd = 0.3;
inline constexpr double kPitchStd = 0.155;

/// yaw ~ N(pi/2, 0.3^2), pitch ~ N(pi/2, 0.155^2), drawn in that order from
/// a stream of standard normal deviates.
template <class StandardNormalStream>
    requires std::invocable<StandardNormalStream&> &&
             std::convertible_to<std::invoke_result_t<StandardNormalStream&>, double>
CameraPose sample_pose(StandardNormalStream& stream) {
    const double a = stream();
    const double b = stream();
    return {kPoseMean + kYawStd * a, kPoseMean + kPitchStd * b};
}

/// Seeded standard normal stream.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
    double operator()() { return dist_(rng_); }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

struct CameraConfig {
    double orbit_radius = 3.0;
    double fov_y = 0.5236;  // ~30 degrees
    int image_w = 64;
    int image_h = 64;
    int n_samples = 36;
};

struct Box {
    Vec3 lo{-1.0, -1.0, -0.5};
    Vec3 hi{1.0, 1.0, 0.5};
};

inline constexpr Box world_box() { return {}; }

inline double circumradius(const Box& b) {
    return norm(0.5 * (b.hi - b.lo));
}

inline void validate(const CameraConfig& c) {
    if (!(c.orbit_radius > circumradius(world_box())))
        throw ConfigError("orbit radius must exceed the world box circumradius");
    if (!(c.fov_y > 0.0 && c.fov_y < std::numbers::pi)) throw ConfigError("fov_y must be in (0, pi)");
    if (c.image_w < 1 || c.image_h < 1) throw ConfigError("image size must be positive");
    if (c.n_samples < 2) throw ConfigError("n_samples must be >= 2");
}

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit
    int u = 0;       // column
    int v = 0;       // row
};

struct CameraFrame {
    Vec3 position, forward, right, up;
};

/// Camera on the orbit sphere looking at the origin, world up +y.
inline CameraFrame camera_frame(const CameraPose& pose, double orbit_radius) {
    if (!std::isfinite(pose.yaw) || !std::isfinite(pose.pitch)) throw PoseError("non-finite pose");
    const double sp = std::sin(pose.pitch);
    if (std::abs(sp) < 1e-6) throw PoseError("pitch within 1e-6 of 0 or pi: view direction parallel to up");
    CameraFrame f;
    f.position = orbit_radius * Vec3{std::cos(pose.yaw) * sp, std::cos(pose.pitch), std::sin(pose.yaw) * sp};
    f.forward = normalize(-1.0 * f.position);
    f.right = normalize(cross(f.forward, Vec3{0.0, 1.0, 0.0}));
    f.up = cross(f.right, f.forward);
    return f;
}

/// One ray per pixel through the pixel center; row-major, row 0 at the top.
inline std::vector<Ray> generate_rays(const CameraPose& pose, const CameraConfig& cfg) {
    validate(cfg);
    const CameraFrame f = camera_frame(pose, cfg.orbit_radius);
    const double tan_half = std::tan(cfg.fov_y / 2.0);
    const double aspect = static_cast<double>(cfg.image_w) / cfg.image_h;
    std::vector<Ray> rays;
    rays.reserve(static_cast<std::size_t>(cfg.image_w) * cfg.image_h);
    for (int v = 0; v < cfg.image_h; ++v) {
        const double sy = (1.0 - 2.0 * (v + 0.5) / cfg.image_h) * tan_half;
        for (int u = 0; u < cfg.image_w; ++u) {
            const double sx = (2.0 * (u + 0.5) / cfg.image_w - 1.0) * tan_half * aspect;
            rays.push_back({f.position, normalize(f.forward + sx * f.right + sy * f.up), u, v});
        }
    }
    return rays;
}

/// Entry/exit parameters of a ray against an axis-aligned box, entry clamped
/// at 0. Empty when the ray misses or only grazes it.
inline std::optional<std::pair<double, double>> intersect(const Vec3& origin, const Vec3& dir, const Box& box) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double o = origin[a], d = dir[a], lo = box.lo[a], hi = box.hi[a];
        if (d == 0.0) {
            if (o < lo || o > hi) return std::nullopt;
            continue;
        }
        double ta = (lo - o) / d, tb = (hi - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) return std::nullopt;
    return std::make_pair(t0, t1);
}

inline GridPoint world_to_grid(const Vec3& w, const GridGeom& g, const Box& box = world_box()) {
    return {(w.x - box.lo.x) / (box.hi.x - box.lo.x) * g.X - 0.5,
            (box.hi.y - w.y) / (box.hi.y - box.lo.y) * g.Y - 0.5,
            (box.hi.z - w.z) / (box.hi.z - box.lo.z) * g.Z - 0.5};
}

inline Vec3 grid_to_world(const GridPoint& p, const GridGeom& g, const Box& box = world_box()) {
    return {box.lo.x + (p.x + 0.5) / g.X * (box.hi.x - box.lo.x),
            box.hi.y - (p.y + 0.5) / g.Y * (box.hi.y - box.lo.y),
            box.hi.z - (p.z + 0.5) / g.Z * (box.hi.z - box.lo.z)};
}

struct RaySampleBatch {
    bool hit = false;
    double t_enter = 0.0;
    double t_exit = 0.0;
    std::vector<double> t;          // ascending
    std::vector<double> delta;      // delta_i = t_{i+1} - t_i; last = mean spacing
    std::vector<GridPoint> points;  // grid coordinates
};

namespace detail {
inline RaySampleBatch finish_batch(const Ray& ray, const GridGeom& g, const Box& box, double t_enter, double t_exit,
                                   std::vector<double> t) {
    RaySampleBatch b;
    b.hit = true;
    b.t_enter = t_enter;
    b.t_exit = t_exit;
    const std::size_t n = t.size();
    b.delta.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) b.delta[i] = t[i + 1] - t[i];
    b.delta[n - 1] = (t_exit - t_enter) / static_cast<double>(n);
    b.points.reserve(n);
    for (double ti : t) b.points.push_back(world_to_grid(ray.origin + ti * ray.direction, g, box));
    b.t = std::move(t);
    return b;
}
}  // namespace detail

/// Midpoints of n equal sub-intervals of the ray's span inside the box.
inline RaySampleBatch place_samples(const Ray& ray, const GridGeom& g, int n, const Box& box = world_box()) {
    if (n < 2) throw UsageError("place_samples needs n >= 2");
    const auto span = intersect(ray.origin, ray.direction, box);
    if (!span) return {};
    const auto [t_enter, t_exit] = *span;
    const double step = (t_exit - t_enter) / n;
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = t_enter + (i + 0.5) * step;
    return detail::finish_batch(ray, g, box, t_enter, t_exit, std::move(t));
}

/// Stratified variant: one uniform draw inside each sub-interval.
inline RaySampleBatch place_samples_jittered(const Ray& ray, const GridGeom& g, int n, std::mt19937_64& rng,
                                             const Box& box = world_box()) {
    if (n < 2) throw UsageError("place_samples needs n >= 2");
    const auto span = intersect(ray.origin, ray.direction, box);
    if (!span) return {};
    const auto [t_enter, t_exit] = *span;
    const double step = (t_exit - t_enter) / n;
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = t_enter + (i + detail::unit(rng)) * step;
    return detail::finish_batch(ray, g, box, t_enter, t_exit, std::move(t));
}

}  // namespace compvol
