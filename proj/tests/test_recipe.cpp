#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "sfkit/recipe.hpp"
#include "sfkit/synthworld.hpp"
#include "test_util.hpp"

using namespace sfkit;
using namespace sfkit::testutil;

namespace {

/// Zero flow, equal depths, identity pose, complete masks.
SampleRecord static_sample(int h, int w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    SampleRecord s;
    s.d1 = random_grid(rng, h, w, 1, 0.5, 6.0);
    s.d2 = s.d1;
    s.flow_fwd = FieldGrid(h, w, 2, 0.0f);
    s.flow_bwd = FieldGrid(h, w, 2, 0.0f);
    s.m_d1 = ValidityMask(h, w);
    s.m_d2 = ValidityMask(h, w);
    s.m_flow_fwd = ValidityMask(h, w);
    s.m_flow_bwd = ValidityMask(h, w);
    s.intrinsics = random_intrinsics(rng, h, w);
    s.metric = true;
    return s;
}

} // namespace

TEST_CASE("static scene: scene flow is exactly zero and everywhere valid") {
    const SampleRecord s = static_sample(9, 11, 3);
    const UpliftResult r = uplift(s);
    CHECK(r.mask_sf.count_valid() == r.mask_sf.bits.size());
    for (float v : r.sf.data) CHECK(v == 0.0f);
    CHECK_FALSE(r.cyc_skipped);
}

TEST_CASE("flow leaving the image invalidates the pixel") {
    SampleRecord s = static_sample(6, 6, 4);
    s.flow_fwd.at(2, 3, 0) = 100.0f;
    const UpliftResult r = uplift(s);
    CHECK_FALSE(r.mask_sf.valid(2, 3));
    CHECK(r.mask_sf.valid(2, 2));
}

TEST_CASE("missing forward flow is a hard error at read level") {
    // flow_fwd is a required container field; the record type cannot even
    // represent its absence, so absence surfaces when loading (covered in
    // the container tests). Here: absent backward flow only skips the
    // consistency check.
    SampleRecord s = static_sample(5, 5, 5);
    s.flow_bwd.reset();
    s.m_flow_bwd.reset();
    const UpliftResult r = uplift(s);
    CHECK(r.cyc_skipped);
    CHECK(r.occlusion.count_valid() == r.occlusion.bits.size());
}

TEST_CASE("cycle check: perfect inverse flows pass everywhere in bounds") {
    const int h = 8, w = 8;
    FieldGrid fwd(h, w, 2), bwd(h, w, 2);
    SUBCASE("zero flow: every pixel passes") {
        const ValidityMask m = cycle_check(fwd, bwd, ValidityMask(h, w));
        CHECK(m.count_valid() == m.bits.size());
    }
    SUBCASE("constant translation with exact inverse") {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                fwd.at(y, x, 0) = 1.25f;
                bwd.at(y, x, 0) = -1.25f;
            }
        const ValidityMask m = cycle_check(fwd, bwd, ValidityMask(h, w));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                // The last two columns warp off the sampling lattice.
                if (x + 1.25 <= w - 1)
                    CHECK(m.valid(y, x));
                else
                    CHECK_FALSE(m.valid(y, x));
            }
    }
}

TEST_CASE("cycle check: inconsistent flow fails the frozen inequality") {
    // |mu_f + mu_b|^2 = 100 against 0.01 * (100 + 0) + 0.5 = 1.5.
    const int h = 4, w = 16;
    FieldGrid fwd(h, w, 2), bwd(h, w, 2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) fwd.at(y, x, 0) = 10.0f;
    const ValidityMask m = cycle_check(fwd, bwd, ValidityMask(h, w));
    CHECK(m.count_valid() == 0);
}

TEST_CASE("cycle check constants are adjustable") {
    const int h = 2, w = 12;
    FieldGrid fwd(h, w, 2), bwd(h, w, 2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            fwd.at(y, x, 0) = 2.0f;
            bwd.at(y, x, 0) = -1.0f; // residual 1, |f|^2+|b|^2 = 5
        }
    RecipeOptions strict;
    strict.alpha1 = 0.01;
    strict.alpha2 = 0.5; // 1 > 0.05 + 0.5: fail
    RecipeOptions loose;
    loose.alpha1 = 0.01;
    loose.alpha2 = 2.0; // 1 < 0.05 + 2.0: pass
    const ValidityMask ms = cycle_check(fwd, bwd, ValidityMask(h, w), strict);
    const ValidityMask ml = cycle_check(fwd, bwd, ValidityMask(h, w), loose);
    CHECK(ms.count_valid() == 0);
    CHECK(ml.valid(0, 0));
}

TEST_CASE("compose_validity equals brute-force AND on exhaustive bytes") {
    // Every combination of the four mask bits appears on the 16-pixel grid.
    ValidityMask a(4, 4), b(4, 4), c(4, 4), d(4, 4);
    for (int i = 0; i < 16; ++i) {
        a.bits[i] = (i >> 0) & 1;
        b.bits[i] = (i >> 1) & 1;
        c.bits[i] = (i >> 2) & 1;
        d.bits[i] = (i >> 3) & 1;
    }
    const ValidityMask out = compose_validity(a, b, c, d);
    for (int i = 0; i < 16; ++i)
        CHECK(out.bits[i] == (a.bits[i] && b.bits[i] && c.bits[i] && d.bits[i]
                                  ? 1
                                  : 0));
}

TEST_CASE("gt_pointmaps: identity and pure-translation poses") {
    SampleRecord s = static_sample(5, 7, 8);
    SUBCASE("identity pose") {
        auto [x1, x2] = gt_pointmaps(s);
        const FieldGrid direct = unproject(s.d2, s.intrinsics);
        for (size_t i = 0; i < x2.data.size(); ++i)
            CHECK(x2.data[i] == doctest::Approx(direct.data[i]));
    }
    SUBCASE("pure translation (1,0,0)") {
        s.pose_1_to_2.translation = {1, 0, 0};
        auto [x1, x2] = gt_pointmaps(s);
        const FieldGrid direct = unproject(s.d2, s.intrinsics);
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 7; ++x) {
                CHECK(x2.at(y, x, 0) ==
                      doctest::Approx(direct.at(y, x, 0) - 1.0));
                CHECK(x2.at(y, x, 1) == doctest::Approx(direct.at(y, x, 1)));
                CHECK(x2.at(y, x, 2) == doctest::Approx(direct.at(y, x, 2)));
            }
    }
}

TEST_CASE("gt_pointmaps match the analytic surfaces") {
    const RenderResult r = render(random_scene(1234));
    auto [x1, x2] = gt_pointmaps(r.sample);
    double worst = 0.0;
    for (size_t i = 0; i < x1.data.size(); ++i) {
        worst = std::max(worst,
                         std::fabs(static_cast<double>(x1.data[i]) -
                                   r.gt.x1.data[i]));
        worst = std::max(worst,
                         std::fabs(static_cast<double>(x2.data[i]) -
                                   r.gt.x2.data[i]));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("reframing: static scene under camera translation") {
    SceneSpec spec;
    spec.height = spec.width = 24;
    spec.intrinsics = {22, 22, 11.5, 11.5};
    spec.background = {{0.0, 0.0, -1.0}, -2.5, {}};
    // Camera moves by c; camera-2 coordinates subtract c.
    const Vec3 c{0.3, -0.2, 0.1};
    spec.camera_motion.translation = {-c.x, -c.y, -c.z};
    const RenderResult r = render(spec);
    const UpliftResult up = uplift(r.sample);

    SUBCASE("camera-2 frame flow is minus the camera motion") {
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                if (!up.mask_sf.valid(y, x)) continue;
                CHECK(std::fabs(up.sf.at(y, x, 0) + c.x) < 1e-5);
                CHECK(std::fabs(up.sf.at(y, x, 1) + c.y) < 1e-5);
                CHECK(std::fabs(up.sf.at(y, x, 2) + c.z) < 1e-5);
            }
    }
    SUBCASE("camera-1 frame flow vanishes for the static scene") {
        const FieldGrid c1 =
            reframe_sceneflow(up, r.sample.pose_1_to_2, ReferenceFrame::Camera1);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                if (!up.mask_sf.valid(y, x)) continue;
                for (int ch = 0; ch < 3; ++ch)
                    CHECK(std::fabs(c1.at(y, x, ch)) < 1e-5);
            }
    }
    SUBCASE("camera-2 target returns the native field unchanged") {
        const FieldGrid same =
            reframe_sceneflow(up, r.sample.pose_1_to_2, ReferenceFrame::Camera2);
        CHECK(same.data == up.sf.data);
    }
    SUBCASE("world target requires a world pose") {
        CHECK_THROWS_AS(reframe_sceneflow(up, r.sample.pose_1_to_2,
                                          ReferenceFrame::World),
                        std::invalid_argument);
    }
}

TEST_CASE("identity pose: all three reference frames agree") {
    SampleRecord s = static_sample(6, 6, 21);
    // give it some motion: nonzero flow via moving content is overkill;
    // reframing under an identity pose is frame-independent even for
    // arbitrary flow fields, so perturb depths instead.
    std::mt19937_64 rng(5);
    s.d2 = random_grid(rng, 6, 6, 1, 0.5, 6.0);
    const UpliftResult up = uplift(s);
    const FieldGrid c1 =
        reframe_sceneflow(up, s.pose_1_to_2, ReferenceFrame::Camera1);
    const FieldGrid wd = reframe_sceneflow(up, s.pose_1_to_2,
                                           ReferenceFrame::World,
                                           RelativePose::identity());
    for (size_t i = 0; i < up.sf.data.size(); ++i) {
        CHECK(std::fabs(c1.data[i] - up.sf.data[i]) < 1e-6);
        CHECK(std::fabs(wd.data[i] - up.sf.data[i]) < 1e-6);
    }
}

TEST_CASE("end points agree across reframings on a random corpus") {
    for (uint64_t seed = 40; seed < 44; ++seed) {
        const RenderResult r = render(random_scene(seed));
        const UpliftResult up = uplift(r.sample);
        const RelativePose& pose = r.sample.pose_1_to_2;
        const FieldGrid c1 = reframe_sceneflow(up, pose, ReferenceFrame::Camera1);
        for (int y = 0; y < up.sf.height; ++y)
            for (int x = 0; x < up.sf.width; ++x) {
                if (!up.mask_sf.valid(y, x)) continue;
                const Vec3 start{up.x1.at(y, x, 0), up.x1.at(y, x, 1),
                                 up.x1.at(y, x, 2)};
                const Vec3 end1 = start + Vec3{c1.at(y, x, 0), c1.at(y, x, 1),
                                               c1.at(y, x, 2)};
                const Vec3 end2 = start + Vec3{up.sf.at(y, x, 0),
                                               up.sf.at(y, x, 1),
                                               up.sf.at(y, x, 2)};
                const Vec3 mapped = pose.apply(end1);
                CHECK(std::fabs(mapped.x - end2.x) < 1e-5);
                CHECK(std::fabs(mapped.y - end2.y) < 1e-5);
                CHECK(std::fabs(mapped.z - end2.z) < 1e-5);
            }
    }
}

TEST_CASE("world reframing rotates the camera-1 flow") {
    const RenderResult r = render(random_scene(91));
    const UpliftResult up = uplift(r.sample);
    std::mt19937_64 rng(6);
    const RelativePose world = random_pose(rng);
    const FieldGrid c1 =
        reframe_sceneflow(up, r.sample.pose_1_to_2, ReferenceFrame::Camera1);
    const FieldGrid wd = reframe_sceneflow(up, r.sample.pose_1_to_2,
                                           ReferenceFrame::World, world);
    for (int y = 0; y < up.sf.height; ++y)
        for (int x = 0; x < up.sf.width; ++x) {
            const Vec3 f{c1.at(y, x, 0), c1.at(y, x, 1), c1.at(y, x, 2)};
            const Vec3 rf = world.rotation * f;
            CHECK(std::fabs(wd.at(y, x, 0) - rf.x) < 1e-5);
            CHECK(std::fabs(wd.at(y, x, 1) - rf.y) < 1e-5);
            CHECK(std::fabs(wd.at(y, x, 2) - rf.z) < 1e-5);
        }
}

TEST_CASE("mask monotonicity: invalidating inputs never validates outputs") {
    std::mt19937_64 rng(314);
    const RenderResult r = render(random_scene(2024));
    const UpliftResult base = uplift(r.sample);

    SampleRecord degraded = r.sample;
    std::uniform_int_distribution<int> py(0, degraded.height() - 1);
    std::uniform_int_distribution<int> px(0, degraded.width() - 1);
    for (int i = 0; i < 200; ++i) {
        degraded.m_d1.at(py(rng), px(rng)) = 0;
        degraded.m_d2.at(py(rng), px(rng)) = 0;
        degraded.m_flow_fwd.at(py(rng), px(rng)) = 0;
    }
    const UpliftResult after = uplift(degraded);
    for (size_t i = 0; i < base.mask_sf.bits.size(); ++i)
        CHECK(after.mask_sf.bits[i] <= base.mask_sf.bits[i]);
}
