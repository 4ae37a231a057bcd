#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "lfrr/resample.hpp"
#include "lfrr/rng.hpp"
#include "lfrr/verify.hpp"

using namespace lfrr;

namespace {

// 16-neighbor reference: per-axis cell weights multiplied out directly.
LightField interp_oracle(const LightField& I, const Tensor& P) {
    const std::int64_t U = I.U(), V = I.V(), X = I.X(), Y = I.Y(), C = I.C();
    LightField out = LightField::zeros(U, V, X, Y, C);
    auto cell = [](double p, std::int64_t dim, std::int64_t& lo, double& t) {
        lo = static_cast<std::int64_t>(std::floor(p));
        if (lo > dim - 2) lo = dim - 2;  // reuse the top cell at p = dim-1
        if (lo < 0) lo = 0;
        t = p - static_cast<double>(lo);
    };
    std::int64_t n = 0;
    for (std::int64_t u = 0; u < U; ++u)
        for (std::int64_t v = 0; v < V; ++v)
            for (std::int64_t x = 0; x < X; ++x)
                for (std::int64_t y = 0; y < Y; ++y, ++n) {
                    std::int64_t lo[4];
                    double t[4];
                    const std::int64_t dims[4] = {U, V, X, Y};
                    for (int a = 0; a < 4; ++a) cell(P[n * 4 + a], dims[a], lo[a], t[a]);
                    for (int m = 0; m < 16; ++m) {
                        const int du = m & 1, dv = (m >> 1) & 1, dx = (m >> 2) & 1,
                                  dy = (m >> 3) & 1;
                        const double w = (du ? t[0] : 1.0 - t[0]) * (dv ? t[1] : 1.0 - t[1]) *
                                         (dx ? t[2] : 1.0 - t[2]) * (dy ? t[3] : 1.0 - t[3]);
                        for (std::int64_t c = 0; c < C; ++c)
                            out.at(u, v, x, y, c) +=
                                w * I.at(lo[0] + du, lo[1] + dv, lo[2] + dx, lo[3] + dy, c);
                    }
                }
    return out;
}

Tensor random_positions(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
                        Rng& rng, double margin = 0.0) {
    Tensor P(Shape{U, V, X, Y, 4});
    const std::int64_t dims[4] = {U, V, X, Y};
    for (std::int64_t n = 0; n < U * V * X * Y; ++n)
        for (int a = 0; a < 4; ++a) {
            const auto hi = static_cast<double>(dims[a] - 1);
            double p = rng.uniform(0.0, hi);
            if (margin > 0.0 && dims[a] > 1) {
                const double f = std::floor(p);
                const double base = std::min(f, static_cast<double>(dims[a] - 2));
                p = base + rng.uniform(margin, 1.0 - margin);
            }
            P[n * 4 + a] = p;
        }
    return P;
}

}  // namespace

TEST_SUITE("resample") {

TEST_CASE("identity grid enumerates pixel coordinates") {
    Tensor P = init_positions(1, 1, 2, 2);
    CHECK(P.shape == Shape{1, 1, 2, 2, 4});
    const double want[16] = {0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 1};
    for (int i = 0; i < 16; ++i) CHECK(P[i] == want[i]);

    Tensor big = init_positions(7, 7, 400, 600);
    CHECK(big.shape == Shape{7, 7, 400, 600, 4});
    // spot-check the last entry: (6,6,399,599)
    const std::int64_t last = (7LL * 7 * 400 * 600 - 1) * 4;
    CHECK(big[last + 0] == 6.0);
    CHECK(big[last + 1] == 6.0);
    CHECK(big[last + 2] == 399.0);
    CHECK(big[last + 3] == 599.0);
}

TEST_CASE("clamp pins coordinates to the valid sampling range") {
    Tensor P = init_positions(7, 7, 400, 600);
    P[0] = -0.5;    // u
    P[2] = 399.2;   // x (max 399)
    P[6] = 398.7;   // x of the next pixel, already in range
    P[3] = 600.25;  // y (max 599)
    Tensor Q = clamp_positions(P, 7, 7, 400, 600);
    CHECK(Q[0] == 0.0);
    CHECK(Q[2] == 399.0);
    CHECK(Q[6] == 398.7);
    CHECK(Q[3] == 599.0);
    CHECK(Q[1] == P[1]);
}

TEST_CASE("interpolating at the identity grid returns the input bit for bit") {
    Rng rng(21, 0x40);
    LightField I = testutil::random_lf(2, 2, 5, 4, 3, rng);
    LightField out = interpolate_4d(I, init_positions(2, 2, 5, 4));
    CHECK(out.data() == I.data());
}

TEST_CASE("constant fields are reproduced at any clamped position") {
    Rng rng(22, 0x41);
    LightField I = LightField::unchecked(2, 2, 4, 4, 2,
                                         std::vector<double>(2 * 2 * 4 * 4 * 2, 0.5));
    Tensor P = random_positions(2, 2, 4, 4, rng);
    LightField out = interpolate_4d(I, P);
    for (double v : out.data()) CHECK(std::fabs(v - 0.5) <= 1e-12);
}

TEST_CASE("gather matches the 16-neighbor oracle") {
    Rng rng(23, 0x42);
    for (int rep = 0; rep < 4; ++rep) {
        LightField I = testutil::random_lf(2, 2, 3, 3, 3, rng);
        Tensor P = random_positions(2, 2, 3, 3, rng);
        LightField got = interpolate_4d(I, P);
        LightField want = interp_oracle(I, P);
        double worst = 0.0;
        for (std::size_t i = 0; i < got.data().size(); ++i)
            worst = std::max(worst, std::fabs(got.data()[i] - want.data()[i]));
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("angular and spatial stage orders agree") {
    Rng rng(24, 0x43);
    LightField I = testutil::random_lf(3, 2, 5, 4, 3, rng);
    Tensor P = random_positions(3, 2, 5, 4, rng);
    LightField a = interpolate_4d(I, P);
    LightField s1 = interpolate_4d_spatial_first(I, P);
    LightField s2 = interpolate_4d_angular_first(I, P);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::fabs(a.data()[i] - s1.data()[i]));
        worst = std::max(worst, std::fabs(s1.data()[i] - s2.data()[i]));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("identity positions route the seed straight to grad_I") {
    Rng rng(25, 0x44);
    LightField I = testutil::random_lf(2, 2, 4, 4, 2, rng);
    Tensor P = init_positions(2, 2, 4, 4);
    Tensor seed(Shape{2, 2, 4, 4, 2}, 1.0);
    auto [gi, gp] = interpolate_4d_backward(I, P, seed);
    for (std::int64_t i = 0; i < gi.numel(); ++i) CHECK(gi[i] == 1.0);
    CHECK(gi.shape == Shape{2, 2, 4, 4, 2});
    CHECK(gp.shape == Shape{2, 2, 4, 4, 4});
}

TEST_CASE("grad_P matches central differences away from cell boundaries") {
    Rng rng(26, 0x45);
    LightField I = testutil::random_lf(2, 2, 5, 5, 2, rng);
    Tensor P = random_positions(2, 2, 5, 5, rng, 0.2);
    Tensor seed(Shape{2, 2, 5, 5, 2},
                testutil::random_values(2 * 2 * 5 * 5 * 2, rng, 0.1, 1.0));
    auto [gi, gp] = interpolate_4d_backward(I, P, seed);

    auto weighted = [&](const Tensor& Q) {
        LightField o = interpolate_4d(I, Q);
        double s = 0.0;
        for (std::size_t i = 0; i < o.data().size(); ++i)
            s += o.data()[i] * (*seed.data)[i];
        return s;
    };

    const double h = 1e-6;
    double worst = 0.0;
    Rng pick(27, 0x46);
    for (int probe = 0; probe < 200; ++probe) {
        const auto i = static_cast<std::int64_t>(pick.below(static_cast<std::uint64_t>(gp.numel())));
        Tensor hi = P.clone(), lo = P.clone();
        hi[i] += h;
        lo[i] -= h;
        const double numeric = (weighted(hi) - weighted(lo)) / (2.0 * h);
        const double denom = std::max(1e-8, std::fabs(gp[i]) + std::fabs(numeric));
        worst = std::max(worst, std::fabs(gp[i] - numeric) / denom);
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("grad_I matches central differences everywhere probed") {
    Rng rng(28, 0x47);
    LightField I = testutil::random_lf(2, 2, 4, 4, 2, rng);
    Tensor P = random_positions(2, 2, 4, 4, rng, 0.1);
    Tensor seed(Shape{2, 2, 4, 4, 2},
                testutil::random_values(2 * 2 * 4 * 4 * 2, rng, 0.1, 1.0));
    auto [gi, gp] = interpolate_4d_backward(I, P, seed);

    auto weighted = [&](const LightField& J) {
        LightField o = interpolate_4d(J, P);
        double s = 0.0;
        for (std::size_t i = 0; i < o.data().size(); ++i)
            s += o.data()[i] * (*seed.data)[i];
        return s;
    };

    const double h = 1e-6;
    double worst = 0.0;
    Rng pick(29, 0x48);
    for (int probe = 0; probe < 120; ++probe) {
        const auto i = static_cast<std::size_t>(pick.below(I.data().size()));
        LightField hi = I, lo = I;
        hi.data()[i] += h;
        lo.data()[i] -= h;
        const double numeric = (weighted(hi) - weighted(lo)) / (2.0 * h);
        const double a = gi[static_cast<std::int64_t>(i)];
        const double denom = std::max(1e-8, std::fabs(a) + std::fabs(numeric));
        worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("planar warp offsets follow the disparity convention") {
    Tensor z = planar_warp_offsets(0.0, 1.0, 0.0, 2, 2, 3, 3);
    CHECK(z.shape == Shape{2, 2, 3, 3, 4});
    for (std::int64_t n = 0; n < 2 * 2 * 3 * 3; ++n) {
        CHECK(z[n * 4 + 0] == 1.0);
        CHECK(z[n * 4 + 1] == 0.0);
        CHECK(z[n * 4 + 2] == 0.0);  // background at infinity: no spatial shift
        CHECK(z[n * 4 + 3] == 0.0);
    }
    Tensor w = planar_warp_offsets(2.0, 1.0, 0.0, 2, 2, 4, 4);
    for (std::int64_t n = 0; n < 2 * 2 * 4 * 4; ++n) {
        CHECK(w[n * 4 + 0] == 1.0);
        CHECK(w[n * 4 + 1] == 0.0);
        CHECK(w[n * 4 + 2] == 2.0);
        CHECK(w[n * 4 + 3] == 0.0);
    }
}

TEST_CASE("planar scenes are invariant under their own warp") {
    PropertyResult r = check_planar_warp(31);
    CAPTURE(r.detail);
    CHECK(r.pass);
    CHECK(r.measured <= 1e-5);
}

TEST_CASE("interpolation positions outside the grid are rejected") {
    Rng rng(32, 0x49);
    LightField I = testutil::random_lf(2, 2, 3, 3, 1, rng);
    Tensor P = init_positions(2, 2, 3, 3);
    P[2] = 3.4;  // x beyond dim-1
    CHECK_THROWS_AS(interpolate_4d(I, P), PositionOutOfRange);
}

}  // TEST_SUITE
