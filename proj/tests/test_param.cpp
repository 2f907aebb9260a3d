#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "sfkit/param.hpp"
#include "sfkit/recipe.hpp"
#include "sfkit/synthworld.hpp"
#include "test_util.hpp"

using namespace sfkit;
using namespace sfkit::testutil;

TEST_CASE("offset/end-point conversion is elementwise and exact") {
    std::mt19937_64 rng(8);
    const FieldGrid sf = random_grid(rng, 5, 6, 3, -2.0, 2.0);
    const FieldGrid x1 = random_grid(rng, 5, 6, 3, -2.0, 2.0);

    const FieldGrid ep = cso_to_ep(sf, x1);
    for (size_t i = 0; i < ep.data.size(); ++i)
        CHECK(ep.data[i] == x1.data[i] + sf.data[i]); // float add oracle

    const FieldGrid back = ep_to_cso(ep, x1);
    for (size_t i = 0; i < back.data.size(); ++i)
        CHECK(std::fabs(back.data[i] - sf.data[i]) <= 1e-6);

    SUBCASE("zero offsets give the pointmap itself") {
        const FieldGrid zero(5, 6, 3, 0.0f);
        CHECK(cso_to_ep(zero, x1).data == x1.data);
        CHECK(ep_to_cso(x1, x1).data == zero.data);
    }
}

TEST_CASE("cso_to_ddof: zero offset and axial motion") {
    const CameraIntrinsics k{50, 50, 3.0, 3.0};
    FieldGrid d(7, 7, 1, 2.0f);
    const FieldGrid x1 = unproject(d, k);
    const ValidityMask all(7, 7);

    SUBCASE("zero scene flow gives zero flow and zero depth change") {
        const DdofFields f = cso_to_ddof(FieldGrid(7, 7, 3, 0.0f), x1, k, all);
        CHECK(f.valid.count_valid() == 49);
        for (float v : f.mu.data) CHECK(std::fabs(v) < 1e-6);
        for (float v : f.dd.data) CHECK(std::fabs(v) < 1e-6);
    }
    SUBCASE("pure z offset at the principal point") {
        FieldGrid sf(7, 7, 3, 0.0f);
        sf.at(3, 3, 2) = 1.0f; // principal point is pixel (3,3)
        const DdofFields f = cso_to_ddof(sf, x1, k, all);
        CHECK(f.mu.at(3, 3, 0) == doctest::Approx(0.0));
        CHECK(f.mu.at(3, 3, 1) == doctest::Approx(0.0));
        CHECK(f.dd.at(3, 3) == doctest::Approx(1.0));
    }
    SUBCASE("negative end depth invalidates") {
        FieldGrid sf(7, 7, 3, 0.0f);
        sf.at(2, 2, 2) = -5.0f;
        const DdofFields f = cso_to_ddof(sf, x1, k, all);
        CHECK_FALSE(f.valid.valid(2, 2));
        CHECK(f.valid.valid(2, 3));
    }
}

TEST_CASE("integer uniform shift: exact depth-change round trip") {
    // Every pixel maps to the pixel (2,1) away at a new constant depth,
    // so the flow is integer and the composed field must reproduce the
    // offsets wherever the warp stays on the grid.
    const int h = 10, w = 12;
    const CameraIntrinsics k{30, 30, (w - 1) / 2.0, (h - 1) / 2.0};
    const double d1 = 2.0, d2 = 2.5;
    const int mu_x = 2, mu_y = 1;

    FieldGrid depth(h, w, 1, static_cast<float>(d1));
    const FieldGrid x1 = unproject(depth, k);
    FieldGrid sf(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec3 end = point_on_ray(x + mu_x, y + mu_y, d2, k);
            sf.at(y, x, 0) = static_cast<float>(end.x) - x1.at(y, x, 0);
            sf.at(y, x, 1) = static_cast<float>(end.y) - x1.at(y, x, 1);
            sf.at(y, x, 2) = static_cast<float>(end.z) - x1.at(y, x, 2);
        }
    const ValidityMask all(h, w);

    const DdofFields f = cso_to_ddof(sf, x1, k, all);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            CHECK(std::fabs(f.mu.at(y, x, 0) - mu_x) < 1e-4);
            CHECK(std::fabs(f.mu.at(y, x, 1) - mu_y) < 1e-4);
            CHECK(std::fabs(f.dd.at(y, x) - (d2 - d1)) < 1e-5);
        }

    auto [back, valid] = ddof_to_cso(f.mu, f.dd, x1, k, all);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool in = x + mu_x <= w - 1 && y + mu_y <= h - 1;
            CHECK(valid.valid(y, x) == in);
            if (!in) continue;
            for (int c = 0; c < 3; ++c)
                CHECK(std::fabs(back.at(y, x, c) - sf.at(y, x, c)) <= 1e-5);
        }
}

TEST_CASE("integer-flow scene: offsets survive the depth-change round trip") {
    // Fronto-parallel plane sliding sideways by an exact pixel multiple:
    // the rendered flow is integer everywhere and end depths are uniform.
    SceneSpec spec;
    spec.height = spec.width = 24;
    const double f = 24.0, z = 2.0;
    spec.intrinsics = {f, f, 11.5, 11.5};
    spec.background = {{0.0, 0.0, -1.0}, -z, {}};
    spec.background.motion.translation = {3.0 * z / f, 0.0, 0.0}; // 3 px
    const RenderResult r = render(spec);
    const UpliftResult up = uplift(r.sample);

    const DdofFields dd = cso_to_ddof(up.sf, up.x1, spec.intrinsics, up.mask_sf);
    CHECK(std::fabs(dd.mu.at(12, 5, 0) - 3.0) < 1e-4);
    auto [back, valid] =
        ddof_to_cso(dd.mu, dd.dd, up.x1, spec.intrinsics, dd.valid);
    size_t checked = 0;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            if (!valid.valid(y, x) || !up.mask_sf.valid(y, x)) continue;
            ++checked;
            for (int c = 0; c < 3; ++c)
                CHECK(std::fabs(back.at(y, x, c) - up.sf.at(y, x, c)) <= 1e-5);
        }
    CHECK(checked > 300);
}

TEST_CASE("ddof_to_cso masks pixels warped off the image") {
    const CameraIntrinsics k{20, 20, 2.5, 2.5};
    FieldGrid depth(6, 6, 1, 1.0f);
    const FieldGrid x1 = unproject(depth, k);
    FieldGrid mu(6, 6, 2, 0.0f);
    mu.at(1, 1, 0) = 50.0f;
    const FieldGrid dd(6, 6, 1, 0.0f);
    auto [sf, valid] = ddof_to_cso(mu, dd, x1, k, ValidityMask(6, 6));
    CHECK_FALSE(valid.valid(1, 1));
    CHECK(valid.valid(0, 0));
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(sf.at(0, 0, c)) < 1e-6);
}

TEST_CASE("conversions reject mismatched shapes") {
    const FieldGrid a(2, 2, 3), b(3, 2, 3);
    CHECK_THROWS_AS(cso_to_ep(a, b), std::invalid_argument);
}
