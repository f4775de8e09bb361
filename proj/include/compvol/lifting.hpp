// SPDX-License-Identifier: Apache-2.0
#pragma once

// Depth-guided 2D-to-3D lifting. A part's 3D feature/density at voxel
// (x, y, z) is psi(d_hat(x, y), z) times its 2D value at (x, y), where psi is
// a symmetric bump peaking at the part's absolute depth. Volumes are views
// evaluated on demand; MaterializedVolume exists for small grids and as the
// oracle for the lazy path.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <new>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "compvol/error.hpp"
#include "compvol/part_model.hpp"

namespace compvol {

struct GaussianMapping {
    double alpha = 1.0;  // width of the bell: larger is narrower
};

struct InverseProportionalMapping {
    double beta = 1.0;
};

/// psi(d_hat, z): weight in (0, 1], exactly 1 at z == d_hat, symmetric in d_hat - z.
class MappingFn {
public:
    MappingFn() = default;
    MappingFn(GaussianMapping g) : v_(g) {  // NOLINT(google-explicit-constructor)
        if (!(g.alpha > 0.0) || !std::isfinite(g.alpha)) throw ConfigError("gaussian alpha must be > 0");
    }
    MappingFn(InverseProportionalMapping m) : v_(m) {  // NOLINT(google-explicit-constructor)
        if (!(m.beta > 0.0) || !std::isfinite(m.beta)) throw ConfigError("inverse-proportional beta must be > 0");
    }

    static MappingFn gaussian(double alpha = 1.0) { return GaussianMapping{alpha}; }
    static MappingFn inverse_proportional(double beta = 1.0) { return InverseProportionalMapping{beta}; }

    double operator()(double d_hat, double z) const {
        const double d = d_hat - z;
        if (const auto* g = std::get_if<GaussianMapping>(&v_)) return std::exp(-g->alpha * d * d);
        const auto& m = std::get<InverseProportionalMapping>(v_);
        return 1.0 / (1.0 + m.beta * d * d);
    }

    bool is_gaussian() const { return std::holds_alternative<GaussianMapping>(v_); }
    double parameter() const {
        if (const auto* g = std::get_if<GaussianMapping>(&v_)) return g->alpha;
        return std::get<InverseProportionalMapping>(v_).beta;
    }
    std::string describe() const {
        return (is_gaussian() ? "gaussian:" : "invprop:") + std::to_string(parameter());
    }

private:
    std::variant<GaussianMapping, InverseProportionalMapping> v_{GaussianMapping{}};
};

inline double psi(const MappingFn& mapping, double d_hat, double z) { return mapping(d_hat, z); }

struct GridGeom {
    int X = 64;
    int Y = 64;
    int Z = 32;

    bool operator==(const GridGeom&) const = default;
    std::size_t voxels() const { return static_cast<std::size_t>(X) * Y * Z; }
    bool contains(int x, int y, int z) const { return x >= 0 && x < X && y >= 0 && y < Y && z >= 0 && z < Z; }
};

inline void validate(const GridGeom& g) {
    if (g.X < 2 || g.Y < 2 || g.Z < 2) throw ConfigError("grid dimensions must be >= 2");
}

/// Continuous position in grid-index coordinates.
struct GridPoint {
    double x = 0.0, y = 0.0, z = 0.0;
};

struct Voxel {
    std::vector<double> feature;
    double density = 0.0;
};

/// Anything that can be read voxel by voxel: lifted parts, fused sums,
/// materialized grids. Indices passed to the *_unchecked members are in range.
template <class V>
concept VolumeView = requires(const V& v, int i, std::span<double> out) {
    { v.geom() } -> std::convertible_to<GridGeom>;
    { v.channels() } -> std::convertible_to<int>;
    { v.density_unchecked(i, i, i) } -> std::convertible_to<double>;
    v.add_feature_unchecked(i, i, i, out);  // out[c] += feature[c]
};

// ---------------------------------------------------------------------------

class LiftedPartVolume {
public:
    LiftedPartVolume(const PartMaps2D& part, double face_base_depth, MappingFn mapping, int depth_planes = 32)
        : part_(&part),
          d_hat_(absolute_depth(part, face_base_depth)),
          mapping_(mapping),
          geom_{part.width, part.height, depth_planes} {
        validate(geom_);
    }

    const PartMaps2D& source() const { return *part_; }
    const PartId& id() const { return part_->id; }
    const MappingFn& mapping() const { return mapping_; }
    GridGeom geom() const { return geom_; }
    int channels() const { return part_->channels; }
    double d_hat(int x, int y) const { return d_hat_[part_->pixel(x, y)]; }

    double weight(int x, int y, int z) const { return mapping_(d_hat(x, y), static_cast<double>(z)); }

    double density_unchecked(int x, int y, int z) const {
        return weight(x, y, z) * static_cast<double>(part_->density_at(x, y));
    }

    void add_feature_unchecked(int x, int y, int z, std::span<double> out) const {
        const double w = weight(x, y, z);
        const auto f = part_->feature_at(x, y);
        for (std::size_t c = 0; c < f.size(); ++c) out[c] += w * static_cast<double>(f[c]);
    }

private:
    const PartMaps2D* part_;
    std::vector<double> d_hat_;
    MappingFn mapping_;
    GridGeom geom_;
};

namespace detail {
template <VolumeView V>
void check_index(const V& v, int x, int y, int z) {
    if (!v.geom().contains(x, y, z))
        throw BoundsError("voxel (" + std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z) +
                          ") outside grid");
}
}  // namespace detail

/// Lifted feature and density at one voxel, bounds-checked.
template <VolumeView V>
Voxel voxel(const V& v, int x, int y, int z) {
    detail::check_index(v, x, y, z);
    Voxel out;
    out.feature.assign(v.channels(), 0.0);
    v.add_feature_unchecked(x, y, z, out.feature);
    out.density = v.density_unchecked(x, y, z);
    return out;
}

// ---------------------------------------------------------------------------

/// Dense X*Y*Z grid, indexed [x][y][z] (z fastest), channels innermost for features.
template <class T = double>
class MaterializedVolume {
public:
    MaterializedVolume(GridGeom geom, int channels)
        : geom_(geom), channels_(channels), density_(geom.voxels()), feature_(geom.voxels() * channels) {}

    GridGeom geom() const { return geom_; }
    int channels() const { return channels_; }

    std::size_t offset(int x, int y, int z) const {
        return (static_cast<std::size_t>(x) * geom_.Y + y) * geom_.Z + z;
    }
    T& density_ref(int x, int y, int z) { return density_[offset(x, y, z)]; }
    std::span<T> feature_ref(int x, int y, int z) {
        return {feature_.data() + offset(x, y, z) * channels_, static_cast<std::size_t>(channels_)};
    }

    double density_unchecked(int x, int y, int z) const { return static_cast<double>(density_[offset(x, y, z)]); }
    void add_feature_unchecked(int x, int y, int z, std::span<double> out) const {
        const T* f = feature_.data() + offset(x, y, z) * channels_;
        for (int c = 0; c < channels_; ++c) out[c] += static_cast<double>(f[c]);
    }

    std::span<const T> density_data() const { return density_; }
    std::span<const T> feature_data() const { return feature_; }

private:
    GridGeom geom_;
    int channels_;
    std::vector<T> density_;
    std::vector<T> feature_;
};

template <class T = double>
constexpr std::size_t required_bytes(GridGeom geom, int channels) {
    return geom.voxels() * (static_cast<std::size_t>(channels) + 1) * sizeof(T);
}

/// Reads another view through storage type T, so a lazy view can be compared
/// bit-for-bit against a MaterializedVolume<T>.
template <class T, VolumeView V>
class StorageCast {
public:
    explicit StorageCast(const V& inner) : inner_(&inner) {}
    GridGeom geom() const { return inner_->geom(); }
    int channels() const { return inner_->channels(); }
    double density_unchecked(int x, int y, int z) const {
        return static_cast<double>(static_cast<T>(inner_->density_unchecked(x, y, z)));
    }
    void add_feature_unchecked(int x, int y, int z, std::span<double> out) const {
        std::vector<double> tmp(out.size(), 0.0);
        inner_->add_feature_unchecked(x, y, z, tmp);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += static_cast<double>(static_cast<T>(tmp[c]));
    }

private:
    const V* inner_;
};

/// Evaluates every voxel of a view into a dense grid. Throws AllocationError
/// (carrying the byte count) when the grid exceeds `budget_bytes` or the
/// allocation fails.
template <class T = double, VolumeView V>
MaterializedVolume<T> materialize(const V& view,
                                  std::size_t budget_bytes = std::numeric_limits<std::size_t>::max()) {
    const GridGeom g = view.geom();
    const int channels = view.channels();
    const std::size_t bytes = required_bytes<T>(g, channels);
    if (bytes > budget_bytes)
        throw AllocationError("materialize needs " + std::to_string(bytes) + " bytes, budget is " +
                                  std::to_string(budget_bytes),
                              bytes);
    try {
        MaterializedVolume<T> out(g, channels);
        std::vector<double> f(channels);
        for (int x = 0; x < g.X; ++x)
            for (int y = 0; y < g.Y; ++y)
                for (int z = 0; z < g.Z; ++z) {
                    out.density_ref(x, y, z) = static_cast<T>(view.density_unchecked(x, y, z));
                    std::fill(f.begin(), f.end(), 0.0);
                    view.add_feature_unchecked(x, y, z, f);
                    auto dst = out.feature_ref(x, y, z);
                    for (int c = 0; c < channels; ++c) dst[c] = static_cast<T>(f[c]);
                }
        return out;
    } catch (const std::bad_alloc&) {
        throw AllocationError("materialize: allocation of " + std::to_string(bytes) + " bytes failed", bytes);
    }
}

// ---------------------------------------------------------------------------

/// Sum of lifted parts over an active subset. Parts are kept in ascending
/// PartId order so the floating-point sum does not depend on input order.
class FusedVolume {
public:
    FusedVolume(std::vector<LiftedPartVolume> parts, std::vector<int> active) : parts_(std::move(parts)) {
        if (parts_.empty()) throw UsageError("fused volume needs at least one part");
        std::sort(parts_.begin(), parts_.end(),
                  [](const LiftedPartVolume& a, const LiftedPartVolume& b) { return a.id().index < b.id().index; });
        geom_ = parts_.front().geom();
        channels_ = parts_.front().channels();
        for (const auto& p : parts_)
            if (p.geom() != geom_ || p.channels() != channels_)
                throw ConfigError("fused parts must share geometry and channel count");
        set_active(std::move(active));
    }

    /// Active subset given as PartId indices.
    void set_active(std::vector<int> active) {
        std::sort(active.begin(), active.end());
        active.erase(std::unique(active.begin(), active.end()), active.end());
        if (active.empty()) throw UsageError("active part set is empty");
        std::vector<int> slots;
        for (int idx : active) {
            const int slot = slot_of(idx);
            if (slot < 0) throw UsageError("active part " + std::to_string(idx) + " not in fused volume");
            slots.push_back(slot);
        }
        active_slots_ = std::move(slots);
    }

    GridGeom geom() const { return geom_; }
    int channels() const { return channels_; }
    const std::vector<LiftedPartVolume>& parts() const { return parts_; }
    const std::vector<int>& active_slots() const { return active_slots_; }

    std::vector<int> active_indices() const {
        std::vector<int> out;
        for (int s : active_slots_) out.push_back(parts_[s].id().index);
        return out;
    }

    int slot_of(int part_index) const {
        for (std::size_t s = 0; s < parts_.size(); ++s)
            if (parts_[s].id().index == part_index) return static_cast<int>(s);
        return -1;
    }

    double density_unchecked(int x, int y, int z) const {
        double sum = 0.0;
        for (int s : active_slots_) sum += parts_[s].density_unchecked(x, y, z);
        return sum;
    }

    void add_feature_unchecked(int x, int y, int z, std::span<double> out) const {
        for (int s : active_slots_) parts_[s].add_feature_unchecked(x, y, z, out);
    }

private:
    std::vector<LiftedPartVolume> parts_;
    std::vector<int> active_slots_;
    GridGeom geom_;
    int channels_ = 0;
};

/// Lifts every part of a set. `active` empty means all parts.
inline FusedVolume fuse(const PartSet& set, const MappingFn& mapping, int depth_planes = 32,
                        std::vector<int> active = {}) {
    std::vector<LiftedPartVolume> lifted;
    lifted.reserve(set.parts.size());
    for (const auto& p : set.parts) lifted.emplace_back(p, set.face_base_depth, mapping, depth_planes);
    if (active.empty())
        for (const auto& p : set.parts) active.push_back(p.id.index);
    return FusedVolume(std::move(lifted), std::move(active));
}

inline Voxel fuse_at(const FusedVolume& fused, int x, int y, int z) { return voxel(fused, x, y, z); }

// ---------------------------------------------------------------------------
// Trilinear sampling

/// Lower corner and fractional offsets of the 8-voxel cell around a point.
/// Points outside the grid clamp to the boundary.
struct TrilinearCell {
    int x0 = 0, y0 = 0, z0 = 0;
    double fx = 0.0, fy = 0.0, fz = 0.0;

    static TrilinearCell locate(const GridGeom& g, const GridPoint& p) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw DomainError("trilinear sample at non-finite point");
        TrilinearCell c;
        axis(p.x, g.X, c.x0, c.fx);
        axis(p.y, g.Y, c.y0, c.fy);
        axis(p.z, g.Z, c.z0, c.fz);
        return c;
    }

    /// corners[(dx << 2) | (dy << 1) | dz]
    double blend(const std::array<double, 8>& v) const {
        const double gx = 1.0 - fx, gy = 1.0 - fy, gz = 1.0 - fz;
        const double c00 = v[0b000] * gx + v[0b100] * fx;
        const double c01 = v[0b001] * gx + v[0b101] * fx;
        const double c10 = v[0b010] * gx + v[0b110] * fx;
        const double c11 = v[0b011] * gx + v[0b111] * fx;
        const double c0 = c00 * gy + c10 * fy;
        const double c1 = c01 * gy + c11 * fy;
        return c0 * gz + c1 * fz;
    }

private:
    static void axis(double p, int n, int& i0, double& f) {
        const double q = std::clamp(p, 0.0, static_cast<double>(n - 1));
        i0 = std::min(static_cast<int>(std::floor(q)), n - 2);
        f = q - i0;
    }
};

template <VolumeView V>
double sample_density(const V& v, const GridPoint& p) {
    const auto cell = TrilinearCell::locate(v.geom(), p);
    std::array<double, 8> corners{};
    for (int i = 0; i < 8; ++i)
        corners[i] = v.density_unchecked(cell.x0 + (i >> 2), cell.y0 + ((i >> 1) & 1), cell.z0 + (i & 1));
    return cell.blend(corners);
}

template <VolumeView V>
std::vector<double> sample_feature(const V& v, const GridPoint& p) {
    const auto cell = TrilinearCell::locate(v.geom(), p);
    const int channels = v.channels();
    std::vector<double> corner_features(static_cast<std::size_t>(8) * channels, 0.0);
    for (int i = 0; i < 8; ++i)
        v.add_feature_unchecked(cell.x0 + (i >> 2), cell.y0 + ((i >> 1) & 1), cell.z0 + (i & 1),
                                std::span<double>(corner_features).subspan(static_cast<std::size_t>(i) * channels,
                                                                           channels));
    std::vector<double> out(channels);
    std::array<double, 8> corners{};
    for (int c = 0; c < channels; ++c) {
        for (int i = 0; i < 8; ++i) corners[i] = corner_features[static_cast<std::size_t>(i) * channels + c];
        out[c] = cell.blend(corners);
    }
    return out;
}

/// Feature and density at a continuous point.
template <VolumeView V>
Voxel sample_trilinear(const V& v, const GridPoint& p) {
    return {sample_feature(v, p), sample_density(v, p)};
}

/// Everything the renderer needs at one sample point, evaluated with a
/// single pass over the 8 corners of every active part. Values are
/// bit-identical to sample_trilinear on the fused view and on each part.
struct FusedSample {
    double density = 0.0;               // fused
    std::vector<double> feature;        // fused, C
    std::vector<double> part_density;   // per slot of FusedVolume::parts(), 0 for inactive
};

class FusedSampler {
public:
    explicit FusedSampler(const FusedVolume& fused)
        : fused_(&fused),
          corner_features_(static_cast<std::size_t>(8) * fused.channels()) {
        sample_.feature.resize(fused.channels());
        sample_.part_density.resize(fused.parts().size());
    }

    const FusedSample& sample(const GridPoint& p) {
        const auto cell = TrilinearCell::locate(fused_->geom(), p);
        const int channels = fused_->channels();
        std::array<double, 8> fused_corners{};
        std::fill(corner_features_.begin(), corner_features_.end(), 0.0);
        std::fill(sample_.part_density.begin(), sample_.part_density.end(), 0.0);

        for (int slot : fused_->active_slots()) {
            const auto& part = fused_->parts()[slot];
            const auto& src = part.source();
            std::array<double, 8> corners{};
            for (int i = 0; i < 8; ++i) {
                const int x = cell.x0 + (i >> 2), y = cell.y0 + ((i >> 1) & 1), z = cell.z0 + (i & 1);
                const double w = part.weight(x, y, z);
                corners[i] = w * static_cast<double>(src.density_at(x, y));
                fused_corners[i] += corners[i];
                const auto f = src.feature_at(x, y);
                double* dst = corner_features_.data() + static_cast<std::size_t>(i) * channels;
                for (int c = 0; c < channels; ++c) dst[c] += w * static_cast<double>(f[c]);
            }
            sample_.part_density[slot] = cell.blend(corners);
        }
        sample_.density = cell.blend(fused_corners);
        for (int c = 0; c < channels; ++c) {
            std::array<double, 8> corners{};
            for (int i = 0; i < 8; ++i) corners[i] = corner_features_[static_cast<std::size_t>(i) * channels + c];
            sample_.feature[c] = cell.blend(corners);
        }
        return sample_;
    }

private:
    const FusedVolume* fused_;
    FusedSample sample_;
    std::vector<double> corner_features_;
};

}  // namespace compvol
