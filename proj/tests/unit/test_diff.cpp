#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "lfrr/detail/kernels.hpp"
#include "lfrr/gradcheck.hpp"
#include "lfrr/rng.hpp"
#include "lfrr/tape.hpp"
#include "lfrr/verify.hpp"

using namespace lfrr;

namespace {

Tensor rnd(Shape s, Rng& rng, bool req = false, double lo = -1.0, double hi = 1.0) {
    const auto n = static_cast<std::size_t>(s.numel());
    return Tensor(std::move(s), testutil::random_values(n, rng, lo, hi), req);
}

// Direct tap-by-tap convolution over the two axes each plane selects.
Tensor conv_oracle(const Tensor& F, const Tensor& W, const Tensor& b, ConvPlane plane) {
    const auto& d = F.shape.dims();
    const std::int64_t U = d[0], V = d[1], X = d[2], Y = d[3], Cin = d[4];
    const std::int64_t k = W.shape[0], Cout = W.shape[3], h = k / 2;
    Tensor out(Shape{U, V, X, Y, Cout});
    auto idx = [&](std::int64_t u, std::int64_t v, std::int64_t x, std::int64_t y,
                   std::int64_t c, std::int64_t C) {
        return (((u * V + v) * X + x) * Y + y) * C + c;
    };
    for (std::int64_t u = 0; u < U; ++u)
        for (std::int64_t v = 0; v < V; ++v)
            for (std::int64_t x = 0; x < X; ++x)
                for (std::int64_t y = 0; y < Y; ++y)
                    for (std::int64_t co = 0; co < Cout; ++co) {
                        double acc = b[co];
                        for (std::int64_t dp = 0; dp < k; ++dp)
                            for (std::int64_t dq = 0; dq < k; ++dq) {
                                std::int64_t uu = u, vv = v, xx = x, yy = y;
                                switch (plane) {
                                    case ConvPlane::spatial: xx += dp - h; yy += dq - h; break;
                                    case ConvPlane::angular: uu += dp - h; vv += dq - h; break;
                                    case ConvPlane::epi_h: uu += dp - h; xx += dq - h; break;
                                    case ConvPlane::epi_v: vv += dp - h; yy += dq - h; break;
                                }
                                if (uu < 0 || uu >= U || vv < 0 || vv >= V || xx < 0 ||
                                    xx >= X || yy < 0 || yy >= Y)
                                    continue;
                                for (std::int64_t ci = 0; ci < Cin; ++ci)
                                    acc += F[idx(uu, vv, xx, yy, ci, Cin)] *
                                           W[((dp * k + dq) * Cin + ci) * Cout + co];
                            }
                        out[idx(u, v, x, y, co, Cout)] = acc;
                    }
    return out;
}

}  // namespace

TEST_SUITE("diff") {

TEST_CASE("1x1 identity weights reproduce the input on every plane") {
    Rng rng(11, 0x30);
    Tensor F = rnd(Shape{2, 2, 4, 5, 3}, rng);
    Tensor W(Shape{1, 1, 3, 3});
    for (std::int64_t c = 0; c < 3; ++c) W[c * 3 + c] = 1.0;
    Tensor b(Shape{3});
    for (ConvPlane plane : {ConvPlane::spatial, ConvPlane::angular, ConvPlane::epi_h,
                            ConvPlane::epi_v}) {
        Tape t;
        Var out = t.axis_conv(t.leaf(F), t.leaf(W), t.leaf(b), plane);
        CHECK(t.value(out) == *F.data);
    }
}

TEST_CASE("3x3 centered delta kernel is the identity") {
    Rng rng(12, 0x31);
    Tensor F = rnd(Shape{2, 2, 5, 4, 2}, rng);
    Tensor W(Shape{3, 3, 2, 2});
    for (std::int64_t c = 0; c < 2; ++c) W[((1 * 3 + 1) * 2 + c) * 2 + c] = 1.0;
    Tensor b(Shape{2});
    Tape t;
    Var out = t.axis_conv(t.leaf(F), t.leaf(W), t.leaf(b), ConvPlane::spatial);
    CHECK(t.value(out) == *F.data);
}

TEST_CASE("3x3 box kernel counts reachable taps under zero padding") {
    Tensor F(Shape{2, 2, 3, 3, 1}, 1.0);
    Tensor W(Shape{3, 3, 1, 1}, 1.0);
    Tensor b(Shape{1});
    Tape t;
    Var out = t.axis_conv(t.leaf(F), t.leaf(W), t.leaf(b), ConvPlane::spatial);
    const auto& o = t.value(out);
    auto at = [&](std::int64_t u, std::int64_t v, std::int64_t x, std::int64_t y) {
        return o[static_cast<std::size_t>((((u * 2 + v) * 3 + x) * 3 + y))];
    };
    CHECK(at(0, 0, 1, 1) == 9.0);  // interior: full 3x3 support
    CHECK(at(0, 0, 0, 0) == 4.0);  // corner: 2x2 survives
    CHECK(at(1, 1, 2, 2) == 4.0);
    CHECK(at(0, 1, 0, 1) == 6.0);  // edge: 2x3
}

TEST_CASE("axis_conv matches the direct oracle on all four planes") {
    Rng rng(13, 0x32);
    Tensor F = rnd(Shape{2, 3, 4, 5, 3}, rng);
    Tensor W = rnd(Shape{3, 3, 3, 2}, rng);
    Tensor b = rnd(Shape{2}, rng);
    for (ConvPlane plane : {ConvPlane::spatial, ConvPlane::angular, ConvPlane::epi_h,
                            ConvPlane::epi_v}) {
        CAPTURE(plane_name(plane));
        Tape t;
        Var out = t.axis_conv(t.leaf(F), t.leaf(W), t.leaf(b), plane);
        Tensor want = conv_oracle(F, W, b, plane);
        const auto& got = t.value(out);
        double worst = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i)
            worst = std::max(worst, std::fabs(got[i] - want[static_cast<std::int64_t>(i)]));
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("specialized conv kernels agree with the generic reference") {
    using namespace lfrr::kern;
    Rng rng(7, 0xE0);
    auto fill = [&](std::vector<double>& v) {
        for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
    };
    double worst = 0.0;
    int cases = 0;
    const std::int64_t couts[] = {1, 3, 4, 8, 16, 32, 64, 5};  // 5 exercises the fallback
    struct Dim { std::int64_t U, V, X, Y; };
    const Dim dims[] = {{3, 3, 17, 13}, {5, 5, 9, 9}, {1, 1, 23, 7}, {3, 3, 8, 48}};
    for (const Dim& d : dims)
        for (int which = 0; which < 4; ++which)
            for (int k : {1, 3})
                for (std::int64_t cin : {3LL, 4LL, 16LL})
                    for (std::int64_t cout : couts)
                        for (int accum = 0; accum < 2; ++accum) {
                            const Plane pi = plane_view(which, d.U, d.V, d.X, d.Y, cin);
                            const Plane po = plane_view(which, d.U, d.V, d.X, d.Y, cout);
                            const std::int64_t n = d.U * d.V * d.X * d.Y;
                            std::vector<double> in(static_cast<std::size_t>(n * cin)),
                                W(static_cast<std::size_t>(k * k * cin * cout)),
                                b(static_cast<std::size_t>(cout)),
                                o1(static_cast<std::size_t>(n * cout)), o2;
                            fill(in);
                            fill(W);
                            fill(b);
                            fill(o1);
                            o2 = o1;
                            const double* bias = (cases % 3 == 0) ? nullptr : b.data();
                            conv_plane(in.data(), pi, cin, W.data(), bias, cout, o1.data(),
                                       po, k, accum != 0);
                            detail::conv_plane_generic(in.data(), pi, cin, W.data(), bias,
                                                       cout, o2.data(), po, k, accum != 0);
                            for (std::int64_t i = 0; i < n * cout; ++i)
                                worst = std::max(worst, std::fabs(o1[static_cast<std::size_t>(i)] -
                                                                  o2[static_cast<std::size_t>(i)]));
                            ++cases;
                        }
    CHECK(cases == 1536);
    CHECK(worst <= 1e-11);
}

TEST_CASE("mean loss sends 1/N to every input") {
    Rng rng(14, 0x33);
    Tensor x = rnd(Shape{2, 2, 3, 3, 4}, rng, true);
    Tape t;
    Var loss = t.reduce_mean(t.leaf(x));
    t.backward(loss);
    const double n = static_cast<double>(x.numel());
    for (std::int64_t i = 0; i < x.numel(); ++i)
        CHECK((*x.grad)[static_cast<std::size_t>(i)] == doctest::Approx(1.0 / n).epsilon(1e-14));
}

TEST_CASE("mean of the square sends 2x/N") {
    Rng rng(15, 0x34);
    Tensor x = rnd(Shape{2, 2, 3, 3, 2}, rng, true);
    Tape t;
    Var vx = t.leaf(x);
    t.backward(t.reduce_mean(t.mul(vx, vx)));
    const double n = static_cast<double>(x.numel());
    for (std::int64_t i = 0; i < x.numel(); ++i)
        CHECK((*x.grad)[static_cast<std::size_t>(i)] ==
              doctest::Approx(2.0 * x[i] / n).epsilon(1e-12));
}

TEST_CASE("sigmoid value and derivative at zero") {
    Tensor x(Shape{1}, {0.0}, true);
    Tape t;
    Var s = t.pointwise(t.leaf(x), Pointwise::sigmoid);
    CHECK(t.value(s)[0] == 0.5);
    t.backward(t.reduce_mean(s));
    CHECK(std::fabs((*x.grad)[0] - 0.25) / 0.25 <= 1e-9);
}

TEST_CASE("leaky relu uses slope 0.1 on the negative side") {
    Tensor x(Shape{2}, {-2.0, 3.0}, true);
    Tape t;
    Var y = t.pointwise(t.leaf(x), Pointwise::leaky_relu);
    CHECK(t.value(y)[0] == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(t.value(y)[1] == 3.0);
    t.backward(t.reduce_mean(y));
    CHECK((*x.grad)[0] == doctest::Approx(0.05).epsilon(1e-14));  // 0.1 / 2
    CHECK((*x.grad)[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("a sabotaged adjoint is caught by the finite-difference check") {
    auto graph = [](Tape& t, const std::vector<Var>& in) {
        return t.reduce_mean(t.pointwise(in[0], Pointwise::sigmoid));
    };
    Rng rng(16, 0x35);
    std::vector<Tensor> inputs{rnd(Shape{2, 2, 3, 3, 2}, rng, true)};

    GradCheckReport healthy = grad_check(graph, inputs, 1e-5);
    CHECK(healthy.pass);
    CHECK(healthy.coords_skipped == 0);

    testhook::bad_adjoint = true;
    GradCheckReport broken = grad_check(graph, inputs, 1e-5);
    testhook::bad_adjoint = false;
    CHECK_FALSE(broken.pass);
    CHECK(broken.max_rel_err > 0.1);

    GradCheckReport again = grad_check(graph, inputs, 1e-5);
    CHECK(again.pass);
}

TEST_CASE("finite-difference harness rejects non-finite graphs") {
    auto graph = [](Tape& t, const std::vector<Var>& in) { return t.reduce_mean(in[0]); };
    Tensor x(Shape{3}, {0.5, std::numeric_limits<double>::quiet_NaN(), 0.25}, true);
    CHECK_THROWS_AS(grad_check(graph, {x}, 1e-5), NonFiniteGradient);
}

TEST_CASE("broadcast patterns of the elementwise ops") {
    Rng rng(17, 0x36);
    Tensor a = rnd(Shape{2, 2, 3, 3, 4}, rng);

    Tape t;
    Var va = t.leaf(a);

    Tensor s(Shape{}, {2.5});
    Var vs = t.mul(va, t.leaf(s));
    for (std::int64_t i = 0; i < a.numel(); ++i)
        CHECK(t.value(vs)[static_cast<std::size_t>(i)] == a[i] * 2.5);

    Tensor gate = rnd(Shape{2, 2, 3, 3, 1}, rng);
    Var vg = t.mul(va, t.leaf(gate));
    CHECK(t.shape(vg) == a.shape);
    for (std::int64_t i = 0; i < a.numel(); ++i)
        CHECK(t.value(vg)[static_cast<std::size_t>(i)] == a[i] * gate[i / 4]);

    Tensor view = rnd(Shape{2, 2, 4}, rng);
    Var vv = t.mul(va, t.leaf(view));
    CHECK(t.shape(vv) == a.shape);
    for (std::int64_t u = 0; u < 2; ++u)
        for (std::int64_t x = 0; x < 3; ++x)
            for (std::int64_t f = 0; f < 4; ++f) {
                std::int64_t i = (((u * 2 + 1) * 3 + x) * 3 + 2) * 4 + f;
                CHECK(t.value(vv)[static_cast<std::size_t>(i)] == a[i] * view[(u * 2 + 1) * 4 + f]);
            }

    CHECK_THROWS_AS(t.mul(va, t.leaf(rnd(Shape{2, 2, 3, 3, 3}, rng))), ShapeMismatch);
    CHECK_THROWS_AS(t.add(va, t.leaf(rnd(Shape{3, 4}, rng))), ShapeMismatch);
}

TEST_CASE("concat, pooling, affine and scale shape and value contracts") {
    Rng rng(18, 0x37);
    Tensor a = rnd(Shape{2, 2, 3, 3, 2}, rng);
    Tensor b = rnd(Shape{2, 2, 3, 3, 3}, rng);
    Tape t;
    Var va = t.leaf(a), vb = t.leaf(b);

    Var cat = t.concat_channels(va, vb);
    CHECK(t.shape(cat) == Shape{2, 2, 3, 3, 5});
    const auto& cv = t.value(cat);
    for (std::int64_t px = 0; px < 2 * 2 * 3 * 3; ++px) {
        for (std::int64_t c = 0; c < 2; ++c)
            CHECK(cv[static_cast<std::size_t>(px * 5 + c)] == a[px * 2 + c]);
        for (std::int64_t c = 0; c < 3; ++c)
            CHECK(cv[static_cast<std::size_t>(px * 5 + 2 + c)] == b[px * 3 + c]);
    }

    Var pool = t.global_avg_pool_spatial(vb);
    CHECK(t.shape(pool) == Shape{2, 2, 3});
    for (std::int64_t u = 0; u < 2; ++u)
        for (std::int64_t v = 0; v < 2; ++v)
            for (std::int64_t c = 0; c < 3; ++c) {
                double sum = 0.0;
                for (std::int64_t x = 0; x < 3; ++x)
                    for (std::int64_t y = 0; y < 3; ++y)
                        sum += b[(((u * 2 + v) * 3 + x) * 3 + y) * 3 + c];
                CHECK(t.value(pool)[static_cast<std::size_t>((u * 2 + v) * 3 + c)] ==
                      doctest::Approx(sum / 9.0).epsilon(1e-14));
            }

    Tensor W = rnd(Shape{3, 2}, rng);
    Tensor bias = rnd(Shape{2}, rng);
    Var aff = t.affine(pool, t.leaf(W), t.leaf(bias));
    CHECK(t.shape(aff) == Shape{2, 2, 2});
    for (std::int64_t uv = 0; uv < 4; ++uv)
        for (std::int64_t g = 0; g < 2; ++g) {
            double want = bias[g];
            for (std::int64_t f = 0; f < 3; ++f)
                want += t.value(pool)[static_cast<std::size_t>(uv * 3 + f)] * W[f * 2 + g];
            CHECK(t.value(aff)[static_cast<std::size_t>(uv * 2 + g)] ==
                  doctest::Approx(want).epsilon(1e-14));
        }

    Var sc = t.scale(va, -0.5);
    for (std::int64_t i = 0; i < a.numel(); ++i)
        CHECK(t.value(sc)[static_cast<std::size_t>(i)] == a[i] * -0.5);

    Var diff = t.sub(va, va);
    for (double v : t.value(diff)) CHECK(v == 0.0);
}

TEST_CASE("operator gradients pass a two-seed finite-difference sweep") {
    auto checks = gradcheck_suite(1e-5, 2, 77);
    CHECK(checks.size() >= 20);
    for (const auto& c : checks) {
        CAPTURE(c.name);
        CHECK(c.report.pass);
    }
}

TEST_CASE("well-conditioned elementary graphs skip no coordinates") {
    for (const auto& c : gradcheck_suite(1e-5, 1, 5)) {
        if (c.name == "dgeb" || c.name == "model_end_to_end") continue;  // deep FD floors
        CAPTURE(c.name);
        CHECK(c.report.coords_skipped == 0);
    }
}

}  // TEST_SUITE
