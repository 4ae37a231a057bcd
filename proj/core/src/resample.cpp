#include "lfrr/resample.hpp"

#include <array>
#include <cmath>

namespace lfrr {

namespace {

struct AxisCell {
    std::int64_t i0, i1;
    double w0, w1;
};

// Floor cell with the top cell reused at p = dim-1, so i1 is always valid
// and the weight pair stays (1-t, t) with derivative (-1, +1). At integer
// positions this picks the right-sided cell, which keeps the position
// gradient alive at the zero-offset initialization.
inline AxisCell axis_cell(double p, std::int64_t dim) {
    std::int64_t i0 = static_cast<std::int64_t>(std::floor(p));
    if (i0 > dim - 2) i0 = dim - 2;
    if (i0 < 0) i0 = 0;  // dim == 1
    const std::int64_t i1 = i0 + 1 < dim ? i0 + 1 : dim - 1;
    const double t = p - static_cast<double>(i0);
    return {i0, i1, 1.0 - t, t};
}

inline void check_coord(double p, std::int64_t dim, const char* axis) {
    if (!(p >= 0.0 && p <= static_cast<double>(dim - 1)))
        throw PositionOutOfRange(std::string("position ") + axis + "=" + std::to_string(p) +
                                 " outside [0," + std::to_string(dim - 1) +
                                 "]; clamp positions first");
}

void check_grid(const LightField& I, const Tensor& P) {
    const Shape want{I.U(), I.V(), I.X(), I.Y(), 4};
    if (P.shape != want)
        throw ShapeMismatch("position grid shape " + P.shape.str() + " does not match " +
                            want.str());
}

}  // namespace

Tensor init_positions(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y) {
    Tensor P(Shape{U, V, X, Y, 4});
    double* p = P.ptr();
    for (std::int64_t u = 0; u < U; ++u)
        for (std::int64_t v = 0; v < V; ++v)
            for (std::int64_t x = 0; x < X; ++x)
                for (std::int64_t y = 0; y < Y; ++y) {
                    *p++ = static_cast<double>(u);
                    *p++ = static_cast<double>(v);
                    *p++ = static_cast<double>(x);
                    *p++ = static_cast<double>(y);
                }
    return P;
}

Tensor clamp_positions(const Tensor& P, std::int64_t U, std::int64_t V, std::int64_t X,
                       std::int64_t Y) {
    if (P.shape.rank() != 5 || P.shape[4] != 4)
        throw ShapeMismatch("position grid must be [U,V,X,Y,4], got " + P.shape.str());
    const double hi[4] = {static_cast<double>(U - 1), static_cast<double>(V - 1),
                          static_cast<double>(X - 1), static_cast<double>(Y - 1)};
    Tensor out(P.shape);
    const double* src = P.ptr();
    double* dst = out.ptr();
    const std::int64_t n = P.numel() / 4;
    for (std::int64_t i = 0; i < n; ++i)
        for (int a = 0; a < 4; ++a) {
            double v = src[i * 4 + a];
            if (v < 0.0) v = 0.0;
            if (v > hi[a]) v = hi[a];
            dst[i * 4 + a] = v;
        }
    return out;
}

namespace {

void interp_forward(const double* I, std::int64_t U, std::int64_t V, std::int64_t X,
                    std::int64_t Y, std::int64_t C, const double* P, double* out) {
    const std::int64_t n = U * V * X * Y;
    const std::int64_t sU = V * X * Y * C, sV = X * Y * C, sX = Y * C;
    for (std::int64_t i = 0; i < n; ++i) {
        const double* pos = P + i * 4;
        check_coord(pos[0], U, "u");
        check_coord(pos[1], V, "v");
        check_coord(pos[2], X, "x");
        check_coord(pos[3], Y, "y");
        const AxisCell cu = axis_cell(pos[0], U);
        const AxisCell cv = axis_cell(pos[1], V);
        const AxisCell cx = axis_cell(pos[2], X);
        const AxisCell cy = axis_cell(pos[3], Y);
        double* dst = out + i * C;
        for (std::int64_t c = 0; c < C; ++c) dst[c] = 0.0;
        for (int a = 0; a < 2; ++a) {
            const double wu = a ? cu.w1 : cu.w0;
            if (wu == 0.0) continue;
            const std::int64_t ou = (a ? cu.i1 : cu.i0) * sU;
            for (int b = 0; b < 2; ++b) {
                const double wv = wu * (b ? cv.w1 : cv.w0);
                if (wv == 0.0) continue;
                const std::int64_t ov = ou + (b ? cv.i1 : cv.i0) * sV;
                for (int e = 0; e < 2; ++e) {
                    const double wx = wv * (e ? cx.w1 : cx.w0);
                    if (wx == 0.0) continue;
                    const std::int64_t ox = ov + (e ? cx.i1 : cx.i0) * sX;
                    for (int f = 0; f < 2; ++f) {
                        const double w = wx * (f ? cy.w1 : cy.w0);
                        if (w == 0.0) continue;
                        const double* src = I + ox + (f ? cy.i1 : cy.i0) * C;
                        for (std::int64_t c = 0; c < C; ++c) dst[c] += w * src[c];
                    }
                }
            }
        }
    }
}

// gI and gP may be null when the respective gradient is not needed; both
// are accumulated into.
void interp_backward(const double* I, std::int64_t U, std::int64_t V, std::int64_t X,
                     std::int64_t Y, std::int64_t C, const double* P,
                     const double* seed, double* gI, double* gP) {
    const std::int64_t n = U * V * X * Y;
    const std::int64_t sU = V * X * Y * C, sV = X * Y * C, sX = Y * C;
    for (std::int64_t i = 0; i < n; ++i) {
        const double* pos = P + i * 4;
        check_coord(pos[0], U, "u");
        check_coord(pos[1], V, "v");
        check_coord(pos[2], X, "x");
        check_coord(pos[3], Y, "y");
        const AxisCell cells[4] = {axis_cell(pos[0], U), axis_cell(pos[1], V),
                                   axis_cell(pos[2], X), axis_cell(pos[3], Y)};
        const std::int64_t strides[4] = {sU, sV, sX, static_cast<std::int64_t>(C)};
        const double* sd = seed + i * C;
        for (int m = 0; m < 16; ++m) {
            double w[4];
            std::int64_t off = 0;
            for (int a = 0; a < 4; ++a) {
                const bool hi = (m >> a) & 1;
                w[a] = hi ? cells[a].w1 : cells[a].w0;
                off += (hi ? cells[a].i1 : cells[a].i0) * strides[a];
            }
            const double wtot = w[0] * w[1] * w[2] * w[3];
            const double* src = I + off;
            if (gI && wtot != 0.0) {
                double* dst = gI + off;
                for (std::int64_t c = 0; c < C; ++c) dst[c] += wtot * sd[c];
            }
            if (gP) {
                double dot = 0.0;
                for (std::int64_t c = 0; c < C; ++c) dot += sd[c] * src[c];
                if (dot == 0.0) continue;
                // exclusive products of the other three axis weights
                double pre = 1.0;
                double prefix[4];
                for (int a = 0; a < 4; ++a) {
                    prefix[a] = pre;
                    pre *= w[a];
                }
                double suf = 1.0;
                for (int a = 3; a >= 0; --a) {
                    const double excl = prefix[a] * suf;
                    suf *= w[a];
                    if (excl == 0.0) continue;
                    const double dw = ((m >> a) & 1) ? 1.0 : -1.0;
                    gP[i * 4 + a] += dw * excl * dot;
                }
            }
        }
    }
}

}  // namespace

LightField interpolate_4d(const LightField& I, const Tensor& P) {
    check_grid(I, P);
    LightField out = LightField::zeros(I.U(), I.V(), I.X(), I.Y(), I.C());
    interp_forward(I.data().data(), I.U(), I.V(), I.X(), I.Y(), I.C(), P.ptr(),
                   out.data().data());
    return out;
}

LightField interpolate_4d_spatial_first(const LightField& I, const Tensor& P) {
    check_grid(I, P);
    const std::int64_t U = I.U(), V = I.V(), X = I.X(), Y = I.Y(), C = I.C();
    LightField out = LightField::zeros(U, V, X, Y, C);
    const std::int64_t n = U * V * X * Y;
    std::vector<double> stage(static_cast<std::size_t>(4 * C));
    for (std::int64_t i = 0; i < n; ++i) {
        const double* pos = P.ptr() + i * 4;
        check_coord(pos[0], U, "u");
        check_coord(pos[1], V, "v");
        check_coord(pos[2], X, "x");
        check_coord(pos[3], Y, "y");
        const AxisCell cu = axis_cell(pos[0], U);
        const AxisCell cv = axis_cell(pos[1], V);
        const AxisCell cx = axis_cell(pos[2], X);
        const AxisCell cy = axis_cell(pos[3], Y);
        // spatial blend inside each of the four corner views
        std::fill(stage.begin(), stage.end(), 0.0);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                double* s = stage.data() + (a * 2 + b) * C;
                const std::int64_t uu = a ? cu.i1 : cu.i0;
                const std::int64_t vv = b ? cv.i1 : cv.i0;
                for (int e = 0; e < 2; ++e)
                    for (int f = 0; f < 2; ++f) {
                        const double w = (e ? cx.w1 : cx.w0) * (f ? cy.w1 : cy.w0);
                        const std::int64_t xx = e ? cx.i1 : cx.i0;
                        const std::int64_t yy = f ? cy.i1 : cy.i0;
                        for (std::int64_t c = 0; c < C; ++c)
                            s[c] += w * I.at(uu, vv, xx, yy, c);
                    }
            }
        // then the angular blend of the four spatial results
        double* dst = out.data().data() + i * C;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double w = (a ? cu.w1 : cu.w0) * (b ? cv.w1 : cv.w0);
                const double* s = stage.data() + (a * 2 + b) * C;
                for (std::int64_t c = 0; c < C; ++c) dst[c] += w * s[c];
            }
    }
    return out;
}

LightField interpolate_4d_angular_first(const LightField& I, const Tensor& P) {
    check_grid(I, P);
    const std::int64_t U = I.U(), V = I.V(), X = I.X(), Y = I.Y(), C = I.C();
    LightField out = LightField::zeros(U, V, X, Y, C);
    const std::int64_t n = U * V * X * Y;
    std::vector<double> stage(static_cast<std::size_t>(4 * C));
    for (std::int64_t i = 0; i < n; ++i) {
        const double* pos = P.ptr() + i * 4;
        check_coord(pos[0], U, "u");
        check_coord(pos[1], V, "v");
        check_coord(pos[2], X, "x");
        check_coord(pos[3], Y, "y");
        const AxisCell cu = axis_cell(pos[0], U);
        const AxisCell cv = axis_cell(pos[1], V);
        const AxisCell cx = axis_cell(pos[2], X);
        const AxisCell cy = axis_cell(pos[3], Y);
        std::fill(stage.begin(), stage.end(), 0.0);
        for (int e = 0; e < 2; ++e)
            for (int f = 0; f < 2; ++f) {
                double* s = stage.data() + (e * 2 + f) * C;
                const std::int64_t xx = e ? cx.i1 : cx.i0;
                const std::int64_t yy = f ? cy.i1 : cy.i0;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        const double w = (a ? cu.w1 : cu.w0) * (b ? cv.w1 : cv.w0);
                        const std::int64_t uu = a ? cu.i1 : cu.i0;
                        const std::int64_t vv = b ? cv.i1 : cv.i0;
                        for (std::int64_t c = 0; c < C; ++c)
                            s[c] += w * I.at(uu, vv, xx, yy, c);
                    }
            }
        double* dst = out.data().data() + i * C;
        for (int e = 0; e < 2; ++e)
            for (int f = 0; f < 2; ++f) {
                const double w = (e ? cx.w1 : cx.w0) * (f ? cy.w1 : cy.w0);
                const double* s = stage.data() + (e * 2 + f) * C;
                for (std::int64_t c = 0; c < C; ++c) dst[c] += w * s[c];
            }
    }
    return out;
}

std::pair<Tensor, Tensor> interpolate_4d_backward(const LightField& I, const Tensor& P,
                                                  const Tensor& seed) {
    check_grid(I, P);
    const Shape want{I.U(), I.V(), I.X(), I.Y(), I.C()};
    if (seed.shape != want)
        throw ShapeMismatch("seed shape " + seed.shape.str() + " does not match " + want.str());
    Tensor gI(want);
    Tensor gP(P.shape);
    interp_backward(I.data().data(), I.U(), I.V(), I.X(), I.Y(), I.C(), P.ptr(),
                    seed.ptr(), gI.ptr(), gP.ptr());
    return {std::move(gI), std::move(gP)};
}

Tensor planar_warp_offsets(double d, double du, double dv, std::int64_t U,
                           std::int64_t V, std::int64_t X, std::int64_t Y) {
    Tensor out(Shape{U, V, X, Y, 4});
    double* p = out.ptr();
    const std::int64_t n = U * V * X * Y;
    for (std::int64_t i = 0; i < n; ++i) {
        p[i * 4 + 0] = du;
        p[i * 4 + 1] = dv;
        p[i * 4 + 2] = d * du;
        p[i * 4 + 3] = d * dv;
    }
    return out;
}

// ---- tape ops ----

Var Tape::clamp_positions(Var P, std::int64_t U, std::int64_t V, std::int64_t X,
                          std::int64_t Y) {
    const Shape& ps = shape(P);
    if (ps.rank() != 5 || ps[4] != 4)
        throw ShapeMismatch("position grid must be [U,V,X,Y,4], got " + ps.str());
    const double hi[4] = {static_cast<double>(U - 1), static_cast<double>(V - 1),
                          static_cast<double>(X - 1), static_cast<double>(Y - 1)};
    Var out = make_node(ps, needs_grad(P));
    const double* src = val_ptr(P);
    double* dst = val_ptr(out);
    const std::int64_t n = ps.numel() / 4;
    for (std::int64_t i = 0; i < n; ++i)
        for (int a = 0; a < 4; ++a) {
            double v = src[i * 4 + a];
            if (v < 0.0) v = 0.0;
            if (v > hi[a]) v = hi[a];
            dst[i * 4 + a] = v;
        }
    if (node(out).needs_grad)
        set_back(out, [this, P, out, hi0 = hi[0], hi1 = hi[1], hi2 = hi[2], hi3 = hi[3]]() {
            const double hi[4] = {hi0, hi1, hi2, hi3};
            const auto& g = node(out).grad;
            const double* src = val_ptr(P);
            double* gp = grad_acc(P);
            const std::int64_t n = static_cast<std::int64_t>(g.size()) / 4;
            for (std::int64_t i = 0; i < n; ++i)
                for (int a = 0; a < 4; ++a) {
                    const double v = src[i * 4 + a];
                    if (v >= 0.0 && v <= hi[a]) gp[i * 4 + a] += g[i * 4 + a];
                }
        });
    return out;
}

Var Tape::interpolate_4d(Var I, Var P) {
    const Shape& is = shape(I);
    const Shape& ps = shape(P);
    if (is.rank() != 5)
        throw ShapeMismatch("interpolate_4d source must be rank 5, got " + is.str());
    const Shape want{is[0], is[1], is[2], is[3], 4};
    if (ps != want)
        throw ShapeMismatch("position grid shape " + ps.str() + " does not match " + want.str());
    Var out = make_node(is, needs_grad(I) || needs_grad(P));
    interp_forward(val_ptr(I), is[0], is[1], is[2], is[3], is[4], val_ptr(P), val_ptr(out));
    if (node(out).needs_grad)
        set_back(out, [this, I, P, out]() {
            const Shape& is = shape(I);
            interp_backward(val_ptr(I), is[0], is[1], is[2], is[3], is[4], val_ptr(P),
                            node(out).grad.data(), needs_grad(I) ? grad_acc(I) : nullptr,
                            needs_grad(P) ? grad_acc(P) : nullptr);
        });
    return out;
}

}  // namespace lfrr
