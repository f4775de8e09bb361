// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "compvol/frame.hpp"
#include "compvol/maskrender.hpp"
#include "test_support.hpp"

using namespace compvol;
using compvol::testing::uniform;

namespace {

WeightProfile flat_profile(std::vector<double> w) {
    WeightProfile p;
    p.T.assign(w.size(), 1.0);
    p.w = std::move(w);
    return p;
}

MaskGrid grid(int w, int h, int k, std::vector<double> values) {
    MaskGrid g(w, h, k);
    g.values = std::move(values);
    return g;
}

}  // namespace

TEST(InitMask, Examples) {
    const auto prof = flat_profile({0.1, 0.2, 0.3, 0.4});
    const std::vector<std::vector<double>> zeros(3, std::vector<double>(4, 0.0));
    EXPECT_EQ(init_mask_pixel(zeros, prof, MaskWeightMode::NerfWeights), (std::vector<double>{0, 0, 0}));

    const std::vector<std::vector<double>> half{{0.5, 0.5, 0.5, 0.5}, {0, 0, 0, 0}};
    EXPECT_EQ(init_mask_pixel(half, prof, MaskWeightMode::Uniform)[0], 2.0);
    EXPECT_DOUBLE_EQ(init_mask_pixel(half, prof, MaskWeightMode::NerfWeights)[0], 0.5);
}

TEST(InitMask, LengthMismatch) {
    const auto prof = flat_profile({0.5, 0.5});
    EXPECT_THROW(init_mask_pixel(std::vector<std::vector<double>>{{1, 2, 3}}, prof, MaskWeightMode::Uniform),
                 UsageError);
    EXPECT_THROW(init_mask_pixel(std::vector<double>{1, 2, 3}, 2, prof, MaskWeightMode::Uniform), UsageError);
}

TEST(InitMask, OpaqueFrontOccludesRear) {
    OcclusionScene sc;
    sc.front_density = 10.0;  // fully opaque occluder
    const PartSet set = occlusion_part_set(sc);
    CameraConfig cam;
    cam.image_w = cam.image_h = 9;
    const auto frame = render_frame(set, CameraPose::frontal(), cam);
    const double front = frame.mask_init.at(4, 4, 2), rear = frame.mask_init.at(4, 4, 1);
    EXPECT_GT(front, 0.0);
    EXPECT_LT(rear, 1e-3 * front);
}

// ---------------------------------------------------------------------------

TEST(Softmax, Examples) {
    const auto u = softmax_mask(std::vector<double>(13, 0.7));
    for (double v : u) EXPECT_DOUBLE_EQ(v, 1.0 / 13.0);
    const auto two = softmax_mask(std::vector<double>{std::log(2.0), 0.0});
    EXPECT_NEAR(two[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(two[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvariantAndStable) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> m(13), shifted(13);
        const double c = uniform(rng, -500, 500);
        for (int k = 0; k < 13; ++k) {
            m[k] = uniform(rng, 0, 20);
            shifted[k] = m[k] + c;
        }
        const auto a = softmax_mask(m), b = softmax_mask(shifted);
        double sum = 0.0;
        for (int k = 0; k < 13; ++k) {
            EXPECT_NEAR(a[k], b[k], 1e-12);
            sum += a[k];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    const auto huge = softmax_mask(std::vector<double>{1e6, 1e6 - 1.0});
    EXPECT_TRUE(std::isfinite(huge[0]) && std::isfinite(huge[1]));
    EXPECT_THROW(softmax_mask(std::vector<double>{1.0, std::nan("")}), NumericError);
}

// ---------------------------------------------------------------------------

TEST(Upsample, Examples) {
    const MaskGrid m = grid(2, 2, 1, {0, 1, 0, 1});
    const auto up = upsample_bilinear(m, 2);
    ASSERT_EQ(up.width, 4);
    ASSERT_EQ(up.height, 4);
    for (int y = 0; y < 4; ++y) {
        EXPECT_EQ(up.at(0, y, 0), 0.0);
        EXPECT_EQ(up.at(1, y, 0), 0.25);
        EXPECT_EQ(up.at(2, y, 0), 0.75);
        EXPECT_EQ(up.at(3, y, 0), 1.0);
    }
    EXPECT_EQ(upsample_bilinear(m, 1).values, m.values);
    const auto c = upsample_bilinear(MaskGrid(3, 2, 4, 0.3), 3);
    for (double v : c.values) EXPECT_NEAR(v, 0.3, 1e-15);
    EXPECT_THROW(upsample_bilinear(m, 0), UsageError);
}

TEST(ComposeHiRes, Examples) {
    const MaskStack m{grid(2, 2, 1, {0, 1, 0, 1}), MaskWeightMode::NerfWeights};
    const auto zero = compose_hires_mask(m, MaskGrid(4, 4, 1, 0.0), 2);
    EXPECT_EQ(zero.m_hr.values, upsample_bilinear(m.m, 2).values);
    EXPECT_EQ(zero.scale, 2);

    MaskGrid delta(2, 2, 1, 0.0);
    delta.values = {0.1, -0.2, 0.3, 0.4};
    const auto s1 = compose_hires_mask(m, delta, 1);
    EXPECT_EQ(s1.m_hr.values, (std::vector<double>{0.1, 0.8, 0.3, 1.4}));

    const MaskStack p4{MaskGrid(1, 1, 1, 0.4), MaskWeightMode::Uniform};
    EXPECT_NEAR(compose_hires_mask(p4, MaskGrid(1, 1, 1, -0.1), 1).m_hr.values[0], 0.3, 1e-15);
    EXPECT_THROW(compose_hires_mask(m, MaskGrid(3, 4, 1), 2), UsageError);
    EXPECT_THROW(compose_hires_mask(m, MaskGrid(4, 4, 2), 2), UsageError);
}

TEST(ComposeHiRes, ZeroResidualKeepsSumToOne) {
    SynthConfig sc;
    sc.height = sc.width = 32;
    sc.channels = 2;
    const PartSet set = synth_part_set(sc);
    CameraConfig cam;
    cam.image_w = cam.image_h = 12;
    const auto frame = render_frame(set, CameraPose{1.8, 1.5}, cam);
    const auto hr = compose_hires_mask(frame.mask, MaskGrid(48, 48, 13, 0.0), 4);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            double s = 0.0;
            for (double v : hr.m_hr.pixel(x, y)) s += v;
            EXPECT_NEAR(s, 1.0, 1e-6);
        }
}

TEST(Argmax, Examples) {
    MaskGrid onehot(2, 2, 5, 0.0);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) onehot.at(x, y, 3) = 1.0;
    for (int l : argmax_labels(onehot)) EXPECT_EQ(l, 3);

    MaskGrid tie(1, 1, 9, 0.05);
    tie.at(0, 0, 3) = tie.at(0, 0, 7) = 0.3;
    EXPECT_EQ(argmax_labels(tie)[0], 3);

    for (int l : argmax_labels(MaskGrid(3, 3, 13, 1.0 / 13))) EXPECT_EQ(l, 0);
}

// ---------------------------------------------------------------------------

TEST(MaskFrame, TransparentSceneModesAgree) {
    SynthConfig sc;
    sc.height = sc.width = 32;
    sc.channels = 2;
    PartSet set = synth_part_set(sc);
    for (auto& p : set.parts)
        for (auto& d : p.density) d *= 1e-9f;
    CameraConfig cam;
    cam.image_w = cam.image_h = 10;
    RenderOptions nerf, uni;
    uni.mask_mode = MaskWeightMode::Uniform;
    const auto a = render_frame(set, CameraPose::frontal(), cam, nerf);
    const auto b = render_frame(set, CameraPose::frontal(), cam, uni);
    for (std::size_t i = 0; i < a.mask.m.values.size(); ++i) {
        EXPECT_NEAR(a.mask.m.values[i], 1.0 / 13, 1e-4);
        EXPECT_NEAR(b.mask.m.values[i], 1.0 / 13, 1e-4);
    }
}

TEST(MaskFrame, NormalizedInBothModes) {
    const PartSet set = synth_part_set({});
    CameraConfig cam;
    cam.image_w = cam.image_h = 16;
    NormalStream s(2);
    for (int i = 0; i < 3; ++i) {
        const auto pose = sample_pose(s);
        for (auto mode : {MaskWeightMode::NerfWeights, MaskWeightMode::Uniform})
            for (const auto& mapping : {MappingFn::gaussian(1.0), MappingFn::inverse_proportional(1.0)}) {
                RenderOptions o;
                o.mask_mode = mode;
                o.mapping = mapping;
                const auto f = render_frame(set, pose, cam, o);
                EXPECT_EQ(f.mask.mode, mode);
                for (int y = 0; y < 16; ++y)
                    for (int x = 0; x < 16; ++x) {
                        double sum = 0.0;
                        for (double v : f.mask.m.pixel(x, y)) {
                            EXPECT_GT(v, 0.0);
                            EXPECT_LT(v, 1.0);
                            sum += v;
                        }
                        EXPECT_NEAR(sum, 1.0, 1e-6);
                    }
            }
    }
}

TEST(MaskFrame, UniformModeRaisesOccludedPart) {
    const PartSet set = occlusion_part_set();
    CameraConfig cam;
    cam.image_w = cam.image_h = 9;
    RenderOptions uni;
    uni.mask_mode = MaskWeightMode::Uniform;
    for (double yaw : {std::numbers::pi / 2, std::numbers::pi / 2 + 0.3}) {
        const auto a = render_frame(set, CameraPose{yaw, std::numbers::pi / 2}, cam);
        const auto b = render_frame(set, CameraPose{yaw, std::numbers::pi / 2}, cam, uni);
        EXPECT_EQ(argmax_labels(a.mask.m)[4 * 9 + 4], 2);
        EXPECT_GT(b.mask_init.at(4, 4, 1), a.mask_init.at(4, 4, 1));
    }
}
