#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "lfrr/light_field.hpp"

using namespace lfrr;

TEST_SUITE("light_field") {

TEST_CASE("single-sample field stores its value") {
    LightField lf(1, 1, 1, 1, 1, {0.5});
    CHECK(lf.size() == 1);
    CHECK(lf.at(0, 0, 0, 0, 0) == 0.5);
}

TEST_CASE("flat layout is u-outermost, c-innermost") {
    std::vector<double> data(108);
    std::iota(data.begin(), data.end(), 0.0);
    for (auto& v : data) v /= 107.0;  // keep the validating ctor happy
    LightField lf(2, 2, 3, 3, 3, data);

    // (((u*V + v)*X + x)*Y + y)*C + c
    CHECK(lf.index(1, 0, 2, 1, 0) == 75);
    CHECK(lf.at(1, 0, 2, 1, 0) == 75.0 / 107.0);
    CHECK(lf.index(0, 0, 0, 0, 0) == 0);
    CHECK(lf.index(1, 1, 2, 2, 2) == 107);
    for (std::int64_t u = 0; u < 2; ++u)
        for (std::int64_t v = 0; v < 2; ++v)
            for (std::int64_t x = 0; x < 3; ++x)
                CHECK(lf.index(u, v, x, 1, 2) == (((u * 2 + v) * 3 + x) * 3 + 1) * 3 + 2);
}

TEST_CASE("constructor validates length and range") {
    CHECK_THROWS_AS(LightField(2, 2, 3, 3, 3, std::vector<double>(107, 0.5)),
                    DimensionMismatch);
    CHECK_THROWS_AS(LightField(1, 1, 2, 2, 1, {0.0, 0.5, 1.5, 1.0}), ValueOutOfRange);
    CHECK_THROWS_AS(LightField(1, 1, 2, 2, 1, {0.0, 0.5, std::nan(""), 1.0}),
                    ValueOutOfRange);
    // unchecked admits signed data but still checks the length
    LightField r = LightField::unchecked(1, 1, 2, 2, 1, {-0.25, 0.5, 1.5, 0.0});
    CHECK(r.at(0, 0, 1, 0, 0) == 1.5);
    CHECK_THROWS_AS(LightField::unchecked(1, 1, 2, 2, 1, {0.0}), DimensionMismatch);
}

TEST_CASE("subaperture view copies one (u,v) slice") {
    Rng rng(3, 0x11);
    LightField lf = testutil::random_lf(2, 3, 4, 5, 3, rng);
    std::vector<double> view = lf.subaperture_view(1, 2);
    REQUIRE(view.size() == 4u * 5u * 3u);
    for (std::int64_t x = 0; x < 4; ++x)
        for (std::int64_t y = 0; y < 5; ++y)
            for (std::int64_t c = 0; c < 3; ++c)
                CHECK(view[static_cast<std::size_t>((x * 5 + y) * 3 + c)] == lf.at(1, 2, x, y, c));
    CHECK_THROWS_AS(lf.subaperture_view(2, 0), IndexOutOfRange);
    CHECK_THROWS_AS(lf.subaperture_view(0, 3), IndexOutOfRange);
    CHECK_THROWS_AS(lf.subaperture_view(-1, 0), IndexOutOfRange);
}

TEST_CASE("luma uses BT.601 weights") {
    LightField red(1, 1, 1, 1, 3, {1.0, 0.0, 0.0});
    LightField y = rgb_to_luma(red);
    CHECK(y.C() == 1);
    CHECK(y.at(0, 0, 0, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));
    LightField green(1, 1, 1, 1, 3, {0.0, 1.0, 0.0});
    CHECK(rgb_to_luma(green).at(0, 0, 0, 0, 0) == doctest::Approx(0.587).epsilon(1e-12));
    LightField blue(1, 1, 1, 1, 3, {0.0, 0.0, 1.0});
    CHECK(rgb_to_luma(blue).at(0, 0, 0, 0, 0) == doctest::Approx(0.114).epsilon(1e-12));
    CHECK_THROWS_AS(rgb_to_luma(LightField(1, 1, 1, 1, 2, {0.1, 0.2})), ChannelMismatch);
}

TEST_CASE("dihedral transforms compose back to the identity") {
    Rng rng(5, 0x12);
    LightField lf = testutil::random_lf(2, 2, 4, 4, 3, rng);

    LfTransform fx{true, false, 0};
    LightField once = apply_transform(lf, fx);
    LightField twice = apply_transform(once, fx);
    CHECK(twice.data() == lf.data());

    LfTransform fy{false, true, 0};
    CHECK(apply_transform(apply_transform(lf, fy), fy).data() == lf.data());

    LfTransform rot{false, false, 1};
    LightField r = lf;
    for (int i = 0; i < 4; ++i) r = apply_transform(r, rot);
    CHECK(r.data() == lf.data());

    // one quarter turn actually moves content
    CHECK(apply_transform(lf, rot).data() != lf.data());
}

TEST_CASE("flips swap the paired angular axis") {
    // flip_x must mirror x and u together so EPI slopes keep their sign
    Rng rng(6, 0x13);
    LightField lf = testutil::random_lf(3, 2, 4, 5, 1, rng);
    LightField f = apply_transform(lf, LfTransform{true, false, 0});
    for (std::int64_t u = 0; u < 3; ++u)
        for (std::int64_t v = 0; v < 2; ++v)
            for (std::int64_t x = 0; x < 4; ++x)
                for (std::int64_t y = 0; y < 5; ++y)
                    CHECK(f.at(u, v, x, y, 0) == lf.at(2 - u, v, 3 - x, y, 0));
}

TEST_CASE("crop keeps the angular grid and cuts a spatial window") {
    Rng rng(7, 0x14);
    LightField lf = testutil::random_lf(2, 2, 10, 8, 3, rng);
    LightField c = crop_patch(lf, 3, 2, 4, 5);
    CHECK(c.U() == 2);
    CHECK(c.V() == 2);
    CHECK(c.X() == 4);
    CHECK(c.Y() == 5);
    CHECK(c.C() == 3);
    for (std::int64_t u = 0; u < 2; ++u)
        for (std::int64_t x = 0; x < 4; ++x)
            for (std::int64_t y = 0; y < 5; ++y)
                CHECK(c.at(u, 1, x, y, 2) == lf.at(u, 1, 3 + x, 2 + y, 2));
    CHECK_THROWS_AS(crop_patch(lf, 7, 0, 4, 5), IndexOutOfRange);

    LightField big = testutil::random_lf(1, 1, 120, 100, 1, rng);
    LightField p = crop_patch(big, 10, 2, 96, 96);
    CHECK(p.X() == 96);
    CHECK(p.Y() == 96);
}

TEST_CASE("tensor round trip shares nothing and keeps values") {
    Rng rng(8, 0x15);
    LightField lf = testutil::random_lf(2, 2, 3, 3, 2, rng);
    Tensor t = lf.to_tensor();
    CHECK(t.shape == Shape{2, 2, 3, 3, 2});
    LightField back = LightField::from_tensor(t);
    CHECK(back.data() == lf.data());

    Tensor bad(Shape{1, 1, 1, 2, 1}, {0.25, 1.75});
    CHECK_NOTHROW(LightField::from_tensor(bad));  // residuals are signed
    CHECK_THROWS_AS(LightField::from_tensor(bad, true), ValueOutOfRange);
}

TEST_CASE("epi slices address the documented axes") {
    Rng rng(9, 0x16);
    LightField lf = testutil::random_lf(3, 2, 4, 5, 2, rng);

    EPI h = extract_epi(lf, EPI::Orientation::Horizontal, 1, 3);  // fixed v=1, y=3
    CHECK(h.A == 3);
    CHECK(h.B == 4);
    CHECK(h.C == 2);
    for (std::int64_t u = 0; u < 3; ++u)
        for (std::int64_t x = 0; x < 4; ++x)
            for (std::int64_t c = 0; c < 2; ++c)
                CHECK(h.at(u, x, c) == lf.at(u, 1, x, 3, c));

    EPI v = extract_epi(lf, EPI::Orientation::Vertical, 2, 1);  // fixed u=2, x=1
    CHECK(v.A == 2);
    CHECK(v.B == 5);
    for (std::int64_t vv = 0; vv < 2; ++vv)
        for (std::int64_t y = 0; y < 5; ++y)
            CHECK(v.at(vv, y, 0) == lf.at(2, vv, 1, y, 0));

    CHECK_THROWS_AS(extract_epi(lf, EPI::Orientation::Horizontal, 2, 0), IndexOutOfRange);
}

}  // TEST_SUITE
