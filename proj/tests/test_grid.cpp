#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "sfkit/grid.hpp"

using namespace sfkit;

TEST_CASE("grid indexing is row-major channel-last") {
    FieldGrid g(2, 3, 2);
    g.at(1, 2, 1) = 7.0f;
    CHECK(g.data[(1 * 3 + 2) * 2 + 1] == 7.0f);
    CHECK(g.size() == 12);
}

TEST_CASE("validate_grid rejects shape and value violations") {
    FieldGrid g(2, 2, 1);
    CHECK_NOTHROW(validate_grid(g, "d1"));

    g.data.pop_back();
    CHECK_THROWS_WITH_AS(validate_grid(g, "d1"),
                         doctest::Contains("d1"), std::invalid_argument);

    FieldGrid nan_grid(2, 2, 1);
    nan_grid.at(0, 1) = std::nanf("");
    CHECK_THROWS_WITH_AS(validate_grid(nan_grid, "flow_fwd"),
                         doctest::Contains("flow_fwd"), std::invalid_argument);

    FieldGrid inf_grid(1, 1, 1);
    inf_grid.at(0, 0) = INFINITY;
    CHECK_THROWS_AS(validate_grid(inf_grid, "d2"), std::invalid_argument);

    FieldGrid bad_c(1, 1, 3);
    bad_c.channels = 4;
    bad_c.data.push_back(0.0f);
    CHECK_THROWS_AS(validate_grid(bad_c, "x"), std::invalid_argument);
}

TEST_CASE("validate_mask rejects non-binary bytes") {
    ValidityMask m(2, 2);
    CHECK_NOTHROW(validate_mask(m, "m_d1"));
    m.at(0, 0) = 2;
    CHECK_THROWS_AS(validate_mask(m, "m_d1"), std::invalid_argument);
}

TEST_CASE("mask_and is elementwise") {
    ValidityMask a(1, 4), b(1, 4);
    a.bits = {1, 1, 0, 0};
    b.bits = {1, 0, 1, 0};
    const ValidityMask c = mask_and(a, b);
    CHECK(c.bits == std::vector<uint8_t>{1, 0, 0, 0});
    CHECK(c.count_valid() == 1);
}
