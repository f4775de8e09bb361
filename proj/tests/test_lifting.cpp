// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "compvol/lifting.hpp"
#include "test_support.hpp"

using namespace compvol;
using compvol::testing::random_part_set;
using compvol::testing::uniform;

namespace {

PartSet small_set(std::uint64_t seed, int size = 4, int parts = 3, int channels = 2) {
    std::mt19937_64 rng(seed);
    return random_part_set(rng, parts, size, channels, 3.0);
}

}  // namespace

TEST(Psi, Examples) {
    const auto g1 = MappingFn::gaussian(1.0), g2 = MappingFn::gaussian(2.0);
    EXPECT_EQ(psi(g1, 5.0, 5.0), 1.0);
    EXPECT_DOUBLE_EQ(psi(g1, 5.0, 4.0), 0.36787944117144233);
    EXPECT_DOUBLE_EQ(psi(g2, 5.0, 6.0), 0.1353352832366127);
    const auto ip = MappingFn::inverse_proportional(1.0);
    EXPECT_EQ(psi(ip, 5.0, 5.0), 1.0);
    EXPECT_DOUBLE_EQ(psi(ip, 5.0, 7.0), 0.2);
}

TEST(Psi, SymmetricPeakedAndInRange) {
    std::mt19937_64 rng(1);
    for (const auto& m : {MappingFn::gaussian(1.0), MappingFn::gaussian(0.3), MappingFn::inverse_proportional(2.0)}) {
        for (int i = 0; i < 1000; ++i) {
            // Multiples of 2^-10 keep d +- e exact.
            const double d = std::ldexp(cvt::uniform_int(rng, 0, 31 << 10), -10);
            const double e = std::ldexp(cvt::uniform_int(rng, 1, 10 << 10), -10);
            EXPECT_EQ(psi(m, d, d + e), psi(m, d, d - e));
            const double v = psi(m, d, d + e);
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, 1.0);
        }
    }
}

TEST(Psi, GaussianWidthIsMonotoneInAlpha) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double a1 = uniform(rng, 0.1, 3), a2 = a1 + uniform(rng, 1e-3, 3);
        const double d = uniform(rng, 0, 31), z = uniform(rng, 0, 31);
        EXPECT_GE(psi(MappingFn::gaussian(a1), d, z), psi(MappingFn::gaussian(a2), d, z));
    }
}

TEST(MappingFn, RejectsNonPositiveParameters) {
    EXPECT_ANY_THROW(MappingFn::gaussian(0.0));
    EXPECT_ANY_THROW(MappingFn::inverse_proportional(-1.0));
}

// ---------------------------------------------------------------------------

TEST(Voxel, ScalarExampleAndIdentities) {
    PartSet set = small_set(3);
    auto& p = set.parts[0];  // absolute
    p.depth[p.pixel(1, 2)] = 10.0f;
    p.density[p.pixel(1, 2)] = 2.0f;
    const LiftedPartVolume lifted(p, set.face_base_depth, MappingFn::gaussian(1.0), 32);
    EXPECT_NEAR(voxel(lifted, 1, 2, 12).density, 2.0 * std::exp(-4.0), 1e-15);
    EXPECT_NEAR(voxel(lifted, 1, 2, 12).density, 0.0366313, 1e-7);

    // z == d_hat: the 2D values come through unchanged.
    const auto at_peak = voxel(lifted, 1, 2, 10);
    EXPECT_EQ(at_peak.density, 2.0);
    for (int c = 0; c < p.channels; ++c) EXPECT_EQ(at_peak.feature[c], p.feature_at(1, 2)[c]);

    p.density[p.pixel(3, 3)] = 0.0f;
    for (int z = 0; z < 32; ++z) EXPECT_EQ(voxel(lifted, 3, 3, z).density, 0.0);
}

TEST(Voxel, BoundsErrors) {
    const PartSet set = small_set(4);
    const LiftedPartVolume lifted(set.parts[1], set.face_base_depth, MappingFn::gaussian(1.0), 4);
    EXPECT_THROW(voxel(lifted, -1, 0, 0), BoundsError);
    EXPECT_THROW(voxel(lifted, 4, 0, 0), BoundsError);
    EXPECT_THROW(voxel(lifted, 0, 4, 0), BoundsError);
    EXPECT_THROW(voxel(lifted, 0, 0, 4), BoundsError);
    EXPECT_NO_THROW(voxel(lifted, 3, 3, 3));
}

TEST(Materialize, MatchesLazyVoxelsBitExactly) {
    const PartSet set = small_set(5);
    for (const auto& p : set.parts) {
        const LiftedPartVolume lifted(p, set.face_base_depth, MappingFn::gaussian(1.0), 4);
        const auto dense = materialize<double>(lifted);
        for (int x = 0; x < 4; ++x)
            for (int y = 0; y < 4; ++y)
                for (int z = 0; z < 4; ++z) {
                    const auto a = voxel(lifted, x, y, z), b = voxel(dense, x, y, z);
                    EXPECT_EQ(a.density, b.density);
                    EXPECT_EQ(a.feature, b.feature);
                }
    }
}

TEST(Materialize, ZeroDensityPartGivesZeroGrid) {
    PartSet set = small_set(6);
    std::fill(set.parts[2].density.begin(), set.parts[2].density.end(), 0.0f);
    const LiftedPartVolume lifted(set.parts[2], set.face_base_depth, MappingFn::gaussian(1.0), 4);
    const auto grid = materialize<double>(lifted);
    for (double v : grid.density_data()) EXPECT_EQ(v, 0.0);
}

TEST(Materialize, ReportsRequiredBytesBeforeAllocating) {
    EXPECT_EQ(required_bytes<float>(GridGeom{64, 64, 32}, 256), 134742016u);
    const PartSet set = small_set(7, 8);
    const LiftedPartVolume lifted(set.parts[0], set.face_base_depth, MappingFn::gaussian(1.0), 4);
    try {
        materialize<double>(lifted, 100);
        FAIL() << "expected AllocationError";
    } catch (const AllocationError& e) {
        EXPECT_EQ(e.required_bytes(), 8u * 8u * 4u * 3u * sizeof(double));
    }
}

// ---------------------------------------------------------------------------

TEST(Fuse, SingletonEqualsPart) {
    const PartSet set = small_set(8);
    const auto m = MappingFn::gaussian(1.0);
    const FusedVolume fused = fuse(set, m, 4, {2});
    const LiftedPartVolume part(set.parts[2], set.face_base_depth, m, 4);
    for (int x = 0; x < 4; ++x)
        for (int z = 0; z < 4; ++z) {
            const auto a = fuse_at(fused, x, 1, z), b = voxel(part, x, 1, z);
            EXPECT_EQ(a.density, b.density);
            EXPECT_EQ(a.feature, b.feature);
        }
}

TEST(Fuse, ZeroPartIsAdditiveIdentity) {
    PartSet set = small_set(9);
    std::fill(set.parts[2].density.begin(), set.parts[2].density.end(), 0.0f);
    std::fill(set.parts[2].feature.begin(), set.parts[2].feature.end(), 0.0f);
    const auto m = MappingFn::gaussian(1.0);
    const FusedVolume both = fuse(set, m, 4, {1, 2}), one = fuse(set, m, 4, {1});
    for (int z = 0; z < 4; ++z) {
        EXPECT_EQ(fuse_at(both, 2, 3, z).density, fuse_at(one, 2, 3, z).density);
        EXPECT_EQ(fuse_at(both, 2, 3, z).feature, fuse_at(one, 2, 3, z).feature);
    }
}

TEST(Fuse, ThreePartDensitySum) {
    PartSet set = small_set(10);
    const float dens[] = {0.2f, 0.3f, 0.5f};
    for (int k = 0; k < 3; ++k) {
        auto& p = set.parts[k];
        p.density[p.pixel(0, 0)] = dens[k];
        // Put every part's peak at z=1 so psi = 1.
        p.depth[p.pixel(0, 0)] = k < 2 ? 1.0f : static_cast<float>(1.0 - set.face_base_depth);
    }
    const FusedVolume fused = fuse(set, MappingFn::gaussian(1.0), 4);
    EXPECT_NEAR(fuse_at(fused, 0, 0, 1).density, 1.0, 1e-7);
}

TEST(Fuse, EmptyOrUnknownActiveSetRejected) {
    const PartSet set = small_set(11);
    FusedVolume fused = fuse(set, MappingFn::gaussian(1.0), 4);
    EXPECT_THROW(fused.set_active({}), UsageError);
    EXPECT_THROW(fused.set_active({9}), UsageError);
    EXPECT_EQ(fused.active_indices(), (std::vector<int>{0, 1, 2}));
}

TEST(Fuse, DisjointSubsetsAddUp) {
    std::mt19937_64 rng(12);
    const PartSet set = random_part_set(rng, 5, 6, 3, 7.0);
    const auto m = MappingFn::inverse_proportional(1.5);
    const FusedVolume all = fuse(set, m, 8), s = fuse(set, m, 8, {0, 3}), t = fuse(set, m, 8, {1, 2, 4});
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y)
            for (int z = 0; z < 8; ++z) {
                const auto a = fuse_at(all, x, y, z), b = fuse_at(s, x, y, z), c = fuse_at(t, x, y, z);
                EXPECT_NEAR(a.density, b.density + c.density, 1e-12);
                for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(a.feature[ch], b.feature[ch] + c.feature[ch], 1e-12);
                EXPECT_GE(a.density, 0.0);
            }
}

TEST(Fuse, InputOrderDoesNotMatter) {
    const PartSet set = small_set(13, 4, 4);
    const auto m = MappingFn::gaussian(1.0);
    std::vector<LiftedPartVolume> fwd, rev;
    for (const auto& p : set.parts) fwd.emplace_back(p, set.face_base_depth, m, 4);
    for (auto it = set.parts.rbegin(); it != set.parts.rend(); ++it) rev.emplace_back(*it, set.face_base_depth, m, 4);
    const FusedVolume a(std::move(fwd), {0, 1, 2, 3}), b(std::move(rev), {3, 2, 1, 0});
    for (int z = 0; z < 4; ++z) EXPECT_EQ(fuse_at(a, 1, 2, z).density, fuse_at(b, 1, 2, z).density);
}

// ---------------------------------------------------------------------------

TEST(Trilinear, IntegerPointReturnsVoxel) {
    const PartSet set = small_set(14);
    const FusedVolume fused = fuse(set, MappingFn::gaussian(1.0), 4);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y)
            for (int z = 0; z < 4; ++z) {
                const auto s = sample_trilinear(fused, {double(x), double(y), double(z)});
                const auto v = fuse_at(fused, x, y, z);
                EXPECT_EQ(s.density, v.density);
                EXPECT_EQ(s.feature, v.feature);
            }
}

TEST(Trilinear, EdgeMidpoint) {
    MaterializedVolume<double> g({2, 2, 2}, 1);
    g.density_ref(1, 0, 0) = 1.0;
    EXPECT_EQ(sample_density(g, {0.5, 0.0, 0.0}), 0.5);
}

TEST(Trilinear, MatchesEightTermOracleAtSpecPoint) {
    std::mt19937_64 rng(15);
    MaterializedVolume<double> g({4, 4, 4}, 1);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y)
            for (int z = 0; z < 4; ++z) g.density_ref(x, y, z) = uniform(rng, 0, 1);
    auto value = [&](int x, int y, int z) { return g.density_unchecked(x, y, z); };
    EXPECT_NEAR(sample_density(g, {1.25, 2.5, 0.75}), cvt::trilinear_oracle(value, 4, 4, 4, 1.25, 2.5, 0.75),
                1e-12);
}

TEST(Trilinear, ClampsOutsideAndRejectsNonFinite) {
    const PartSet set = small_set(16);
    const FusedVolume fused = fuse(set, MappingFn::gaussian(1.0), 4);
    EXPECT_EQ(sample_density(fused, {-5.0, 1.5, 9.0}), sample_density(fused, {0.0, 1.5, 3.0}));
    EXPECT_THROW(sample_density(fused, {std::nan(""), 0.0, 0.0}), DomainError);
    EXPECT_THROW(sample_trilinear(fused, {0.0, std::numeric_limits<double>::infinity(), 0.0}), DomainError);
}

TEST(Trilinear, FusedSamplerMatchesSeparatePaths) {
    std::mt19937_64 rng(17);
    const PartSet set = random_part_set(rng, 4, 9, 3, 5.0);
    FusedVolume fused = fuse(set, MappingFn::gaussian(2.0), 6, {0, 2, 3});
    FusedSampler sampler(fused);
    for (int i = 0; i < 500; ++i) {
        const GridPoint p{uniform(rng, -1, 9), uniform(rng, -1, 9), uniform(rng, -1, 6)};
        const auto& s = sampler.sample(p);
        const auto ref = sample_trilinear(fused, p);
        EXPECT_EQ(s.density, ref.density);
        EXPECT_EQ(s.feature, ref.feature);
        EXPECT_EQ(s.part_density[1], 0.0);  // inactive
        EXPECT_EQ(s.part_density[2], sample_density(fused.parts()[2], p));
    }
}
