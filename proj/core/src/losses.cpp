#include "lfrr/losses.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

namespace lfrr {

namespace {

constexpr int kHalf = kSsimWindow / 2;

const std::array<double, kSsimWindow>& gauss_kernel() {
    static const std::array<double, kSsimWindow> k = [] {
        std::array<double, kSsimWindow> g{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - kHalf;
            g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += g[i];
        }
        for (auto& v : g) v /= sum;
        return g;
    }();
    return k;
}

// Symmetric reflection: -1 maps to 0, n maps to n-1. Folds until in range so
// windows wider than the image still work.
inline std::int64_t reflect(std::int64_t i, std::int64_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Luma weights for C=3; C=1 is passed through.
void to_luma(const double* src, std::int64_t n_px, std::int64_t C, double* dst) {
    if (C == 1) {
        for (std::int64_t i = 0; i < n_px; ++i) dst[i] = src[i];
        return;
    }
    for (std::int64_t i = 0; i < n_px; ++i) {
        const double* p = src + i * 3;
        dst[i] = kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2];
    }
}

void check_luma_input(const Shape& s, const char* what) {
    if (s.rank() != 5)
        throw ShapeMismatch(std::string(what) + " input must be rank 5, got " + s.str());
    if (s[4] != 1 && s[4] != 3)
        throw ChannelMismatch(std::string(what) + " needs C=1 or C=3, got C=" +
                              std::to_string(s[4]));
}

// --- separable Gaussian blur over each [X,Y] view slice ---

void blur_y(const double* in, double* out, std::int64_t X, std::int64_t Y) {
    const auto& k = gauss_kernel();
    for (std::int64_t x = 0; x < X; ++x) {
        const double* row = in + x * Y;
        double* orow = out + x * Y;
        for (std::int64_t y = 0; y < Y; ++y) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t) acc += k[t] * row[reflect(y + t - kHalf, Y)];
            orow[y] = acc;
        }
    }
}

void blur_x(const double* in, double* out, std::int64_t X, std::int64_t Y) {
    const auto& k = gauss_kernel();
    for (std::int64_t x = 0; x < X; ++x) {
        double* orow = out + x * Y;
        for (std::int64_t y = 0; y < Y; ++y) orow[y] = 0.0;
        for (int t = 0; t < kSsimWindow; ++t) {
            const double* row = in + reflect(x + t - kHalf, X) * Y;
            const double kv = k[t];
            for (std::int64_t y = 0; y < Y; ++y) orow[y] += kv * row[y];
        }
    }
}

// Transposed passes: scatter with the same reflected index map.
void blur_y_t(const double* g, double* out, std::int64_t X, std::int64_t Y) {
    const auto& k = gauss_kernel();
    for (std::int64_t x = 0; x < X; ++x) {
        const double* grow = g + x * Y;
        double* orow = out + x * Y;
        for (std::int64_t y = 0; y < Y; ++y) orow[y] = 0.0;
        for (std::int64_t y = 0; y < Y; ++y) {
            const double gv = grow[y];
            for (int t = 0; t < kSsimWindow; ++t) orow[reflect(y + t - kHalf, Y)] += k[t] * gv;
        }
    }
}

void blur_x_t(const double* g, double* out, std::int64_t X, std::int64_t Y) {
    const auto& k = gauss_kernel();
    for (std::int64_t i = 0; i < X * Y; ++i) out[i] = 0.0;
    for (std::int64_t x = 0; x < X; ++x) {
        const double* grow = g + x * Y;
        for (int t = 0; t < kSsimWindow; ++t) {
            double* orow = out + reflect(x + t - kHalf, X) * Y;
            const double kv = k[t];
            for (std::int64_t y = 0; y < Y; ++y) orow[y] += kv * grow[y];
        }
    }
}

// blur = blur_x(blur_y(f)) per view; tmp must hold X*Y.
void blur_view(const double* in, double* out, double* tmp, std::int64_t X, std::int64_t Y) {
    blur_y(in, tmp, X, Y);
    blur_x(tmp, out, X, Y);
}

void blur_view_t(const double* g, double* out, double* tmp, std::int64_t X, std::int64_t Y) {
    blur_x_t(g, tmp, X, Y);
    blur_y_t(tmp, out, X, Y);
}

struct SsimSaved {
    std::int64_t UV, X, Y;
    std::vector<double> a, b;                      // luma fields
    std::vector<double> mua, mub, saa, sbb, sab;   // blurred statistics
    std::vector<double> smap;
};

void ssim_compute(const double* a, const double* b, std::int64_t UV, std::int64_t X,
                  std::int64_t Y, SsimSaved& s) {
    const std::int64_t n = UV * X * Y;
    const std::int64_t px = X * Y;
    s.mua.resize(n);
    s.mub.resize(n);
    s.saa.resize(n);
    s.sbb.resize(n);
    s.sab.resize(n);
    s.smap.resize(n);
    std::vector<double> prod(px), tmp(px);
    for (std::int64_t v = 0; v < UV; ++v) {
        const double* av = a + v * px;
        const double* bv = b + v * px;
        blur_view(av, s.mua.data() + v * px, tmp.data(), X, Y);
        blur_view(bv, s.mub.data() + v * px, tmp.data(), X, Y);
        for (std::int64_t i = 0; i < px; ++i) prod[i] = av[i] * av[i];
        blur_view(prod.data(), s.saa.data() + v * px, tmp.data(), X, Y);
        for (std::int64_t i = 0; i < px; ++i) prod[i] = bv[i] * bv[i];
        blur_view(prod.data(), s.sbb.data() + v * px, tmp.data(), X, Y);
        for (std::int64_t i = 0; i < px; ++i) prod[i] = av[i] * bv[i];
        blur_view(prod.data(), s.sab.data() + v * px, tmp.data(), X, Y);
    }
    for (std::int64_t i = 0; i < n; ++i) {
        const double ma = s.mua[i], mb = s.mub[i];
        const double a1 = 2.0 * ma * mb + kSsimC1;
        const double a2 = 2.0 * (s.sab[i] - ma * mb) + kSsimC2;
        const double b1 = ma * ma + mb * mb + kSsimC1;
        const double b2 = (s.saa[i] - ma * ma) + (s.sbb[i] - mb * mb) + kSsimC2;
        s.smap[i] = (a1 * a2) / (b1 * b2);
    }
}

}  // namespace

Var Tape::loss_mae(Var pred, Var gt) {
    const Shape& ps = shape(pred);
    if (ps != shape(gt))
        throw ShapeMismatch("loss_mae shapes differ: " + ps.str() + " vs " + shape(gt).str());
    const std::int64_t n = ps.numel();
    Var out = make_node(Shape{}, needs_grad(pred) || needs_grad(gt));
    const double* a = val_ptr(pred);
    const double* b = val_ptr(gt);
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += std::abs(a[i] - b[i]);
    (*node(out).val)[0] = acc / static_cast<double>(n);
    if (node(out).needs_grad)
        set_back(out, [this, pred, gt, out, n]() {
            const double g0 = node(out).grad[0] / static_cast<double>(n);
            const double* a = val_ptr(pred);
            const double* b = val_ptr(gt);
            double* gp = needs_grad(pred) ? grad_acc(pred) : nullptr;
            double* gg = needs_grad(gt) ? grad_acc(gt) : nullptr;
            for (std::int64_t i = 0; i < n; ++i) {
                const double d = a[i] - b[i];
                const double s = d > 0.0 ? g0 : (d < 0.0 ? -g0 : 0.0);
                if (gp) gp[i] += s;
                if (gg) gg[i] -= s;
            }
        });
    return out;
}

Var Tape::loss_ssim(Var pred, Var gt) {
    const Shape& ps = shape(pred);
    if (ps != shape(gt))
        throw ShapeMismatch("loss_ssim shapes differ: " + ps.str() + " vs " + shape(gt).str());
    check_luma_input(ps, "loss_ssim");
    const std::int64_t UV = ps[0] * ps[1], X = ps[2], Y = ps[3], C = ps[4];
    const std::int64_t n = UV * X * Y;

    auto saved = std::make_shared<SsimSaved>();
    saved->UV = UV;
    saved->X = X;
    saved->Y = Y;
    saved->a.resize(n);
    saved->b.resize(n);
    to_luma(val_ptr(pred), n, C, saved->a.data());
    to_luma(val_ptr(gt), n, C, saved->b.data());
    ssim_compute(saved->a.data(), saved->b.data(), UV, X, Y, *saved);

    Var out = make_node(Shape{}, needs_grad(pred) || needs_grad(gt));
    double acc = 0.0;
    for (double v : saved->smap) acc += v;
    (*node(out).val)[0] = 1.0 - acc / static_cast<double>(n);

    if (node(out).needs_grad)
        set_back(out, [this, pred, gt, out, saved, C]() {
            const SsimSaved& s = *saved;
            const std::int64_t X = s.X, Y = s.Y, px = X * Y, n = s.UV * px;
            const double gs = -node(out).grad[0] / static_cast<double>(n);
            const bool want_a = needs_grad(pred);
            const bool want_b = needs_grad(gt);

            // partials w.r.t. the five blurred statistic maps
            std::vector<double> dmua(n), dmub(n), dsaa(n), dsbb(n), dsab(n);
            for (std::int64_t i = 0; i < n; ++i) {
                const double ma = s.mua[i], mb = s.mub[i];
                const double a1 = 2.0 * ma * mb + kSsimC1;
                const double a2 = 2.0 * (s.sab[i] - ma * mb) + kSsimC2;
                const double b1 = ma * ma + mb * mb + kSsimC1;
                const double b2 = (s.saa[i] - ma * ma) + (s.sbb[i] - mb * mb) + kSsimC2;
                const double inv12 = 1.0 / (b1 * b2);
                const double sv = a1 * a2 * inv12;
                dmua[i] = gs * (2.0 * mb * (a2 - a1) * inv12 + 2.0 * ma * sv * (1.0 / b2 - 1.0 / b1));
                dmub[i] = gs * (2.0 * ma * (a2 - a1) * inv12 + 2.0 * mb * sv * (1.0 / b2 - 1.0 / b1));
                dsab[i] = gs * 2.0 * a1 * inv12;
                dsaa[i] = gs * -sv / b2;
                dsbb[i] = gs * -sv / b2;
            }

            std::vector<double> ga(want_a ? n : 0, 0.0), gb(want_b ? n : 0, 0.0);
            std::vector<double> t1(px), t2(px);
            for (std::int64_t v = 0; v < s.UV; ++v) {
                const double* av = s.a.data() + v * px;
                const double* bv = s.b.data() + v * px;
                // mean paths
                if (want_a) {
                    blur_view_t(dmua.data() + v * px, t1.data(), t2.data(), X, Y);
                    double* gav = ga.data() + v * px;
                    for (std::int64_t i = 0; i < px; ++i) gav[i] += t1[i];
                }
                if (want_b) {
                    blur_view_t(dmub.data() + v * px, t1.data(), t2.data(), X, Y);
                    double* gbv = gb.data() + v * px;
                    for (std::int64_t i = 0; i < px; ++i) gbv[i] += t1[i];
                }
                // second-moment paths
                if (want_a) {
                    blur_view_t(dsaa.data() + v * px, t1.data(), t2.data(), X, Y);
                    double* gav = ga.data() + v * px;
                    for (std::int64_t i = 0; i < px; ++i) gav[i] += 2.0 * av[i] * t1[i];
                }
                if (want_b) {
                    blur_view_t(dsbb.data() + v * px, t1.data(), t2.data(), X, Y);
                    double* gbv = gb.data() + v * px;
                    for (std::int64_t i = 0; i < px; ++i) gbv[i] += 2.0 * bv[i] * t1[i];
                }
                if (want_a || want_b) {
                    blur_view_t(dsab.data() + v * px, t1.data(), t2.data(), X, Y);
                    if (want_a) {
                        double* gav = ga.data() + v * px;
                        for (std::int64_t i = 0; i < px; ++i) gav[i] += bv[i] * t1[i];
                    }
                    if (want_b) {
                        double* gbv = gb.data() + v * px;
                        for (std::int64_t i = 0; i < px; ++i) gbv[i] += av[i] * t1[i];
                    }
                }
            }

            // chain through the luma weights
            const double lw[3] = {kLumaR, kLumaG, kLumaB};
            if (want_a) {
                double* gp = grad_acc(pred);
                if (C == 1)
                    for (std::int64_t i = 0; i < n; ++i) gp[i] += ga[i];
                else
                    for (std::int64_t i = 0; i < n; ++i)
                        for (int c = 0; c < 3; ++c) gp[i * 3 + c] += lw[c] * ga[i];
            }
            if (want_b) {
                double* gg = grad_acc(gt);
                if (C == 1)
                    for (std::int64_t i = 0; i < n; ++i) gg[i] += gb[i];
                else
                    for (std::int64_t i = 0; i < n; ++i)
                        for (int c = 0; c < 3; ++c) gg[i * 3 + c] += lw[c] * gb[i];
            }
        });
    return out;
}

namespace {

struct EpiSaved {
    std::int64_t U, V, X, Y;
    std::vector<double> a, b;  // luma fields
};

// Sums |(a[i+stride]-a[i]) - (b[i+stride]-b[i])| over all positions where the
// step stays inside the axis; the axis extents are walked via the shape.
double epi_diff_sum(const double* a, const double* b, std::int64_t U, std::int64_t V,
                    std::int64_t X, std::int64_t Y, int axis) {
    const std::int64_t dims[4] = {U, V, X, Y};
    const std::int64_t strides[4] = {V * X * Y, X * Y, Y, 1};
    const std::int64_t st = strides[axis];
    double acc = 0.0;
    for (std::int64_t u = 0; u < (axis == 0 ? U - 1 : U); ++u)
        for (std::int64_t v = 0; v < (axis == 1 ? V - 1 : V); ++v)
            for (std::int64_t x = 0; x < (axis == 2 ? X - 1 : X); ++x)
                for (std::int64_t y = 0; y < (axis == 3 ? Y - 1 : Y); ++y) {
                    const std::int64_t i = u * strides[0] + v * strides[1] + x * strides[2] + y;
                    acc += std::abs((a[i + st] - a[i]) - (b[i + st] - b[i]));
                }
    (void)dims;
    return acc;
}

void epi_diff_back(const double* a, const double* b, std::int64_t U, std::int64_t V,
                   std::int64_t X, std::int64_t Y, int axis, double w, double* ga,
                   double* gb) {
    const std::int64_t strides[4] = {V * X * Y, X * Y, Y, 1};
    const std::int64_t st = strides[axis];
    for (std::int64_t u = 0; u < (axis == 0 ? U - 1 : U); ++u)
        for (std::int64_t v = 0; v < (axis == 1 ? V - 1 : V); ++v)
            for (std::int64_t x = 0; x < (axis == 2 ? X - 1 : X); ++x)
                for (std::int64_t y = 0; y < (axis == 3 ? Y - 1 : Y); ++y) {
                    const std::int64_t i = u * strides[0] + v * strides[1] + x * strides[2] + y;
                    const double d = (a[i + st] - a[i]) - (b[i + st] - b[i]);
                    const double s = d > 0.0 ? w : (d < 0.0 ? -w : 0.0);
                    if (ga) {
                        ga[i + st] += s;
                        ga[i] -= s;
                    }
                    if (gb) {
                        gb[i + st] -= s;
                        gb[i] += s;
                    }
                }
}

}  // namespace

Var Tape::loss_epi(Var pred, Var gt) {
    const Shape& ps = shape(pred);
    if (ps != shape(gt))
        throw ShapeMismatch("loss_epi shapes differ: " + ps.str() + " vs " + shape(gt).str());
    check_luma_input(ps, "loss_epi");
    const std::int64_t U = ps[0], V = ps[1], X = ps[2], Y = ps[3], C = ps[4];
    const std::int64_t n = U * V * X * Y;

    auto saved = std::make_shared<EpiSaved>();
    saved->U = U;
    saved->V = V;
    saved->X = X;
    saved->Y = Y;
    saved->a.resize(n);
    saved->b.resize(n);
    to_luma(val_ptr(pred), n, C, saved->a.data());
    to_luma(val_ptr(gt), n, C, saved->b.data());

    // Horizontal EPIs mix (u,x); vertical EPIs mix (v,y). Each orientation's
    // term is the mean over its pooled difference entries; orientations are
    // averaged so U/V asymmetry cannot bias the loss.
    const std::int64_t cnt_h = (U - 1) * V * X * Y + U * V * (X - 1) * Y;
    const std::int64_t cnt_v = U * (V - 1) * X * Y + U * V * X * (Y - 1);
    const double* a = saved->a.data();
    const double* b = saved->b.data();
    double lh = 0.0, lv = 0.0;
    if (cnt_h > 0)
        lh = (epi_diff_sum(a, b, U, V, X, Y, 0) + epi_diff_sum(a, b, U, V, X, Y, 2)) /
             static_cast<double>(cnt_h);
    if (cnt_v > 0)
        lv = (epi_diff_sum(a, b, U, V, X, Y, 1) + epi_diff_sum(a, b, U, V, X, Y, 3)) /
             static_cast<double>(cnt_v);

    Var out = make_node(Shape{}, needs_grad(pred) || needs_grad(gt));
    (*node(out).val)[0] = 0.5 * (lh + lv);

    if (node(out).needs_grad)
        set_back(out, [this, pred, gt, out, saved, C, cnt_h, cnt_v]() {
            const EpiSaved& s = *saved;
            const std::int64_t n = s.U * s.V * s.X * s.Y;
            const double g0 = node(out).grad[0];
            const bool want_a = needs_grad(pred);
            const bool want_b = needs_grad(gt);
            std::vector<double> ga(want_a ? n : 0, 0.0), gb(want_b ? n : 0, 0.0);
            double* pa = want_a ? ga.data() : nullptr;
            double* pb = want_b ? gb.data() : nullptr;
            if (cnt_h > 0) {
                const double w = 0.5 * g0 / static_cast<double>(cnt_h);
                epi_diff_back(s.a.data(), s.b.data(), s.U, s.V, s.X, s.Y, 0, w, pa, pb);
                epi_diff_back(s.a.data(), s.b.data(), s.U, s.V, s.X, s.Y, 2, w, pa, pb);
            }
            if (cnt_v > 0) {
                const double w = 0.5 * g0 / static_cast<double>(cnt_v);
                epi_diff_back(s.a.data(), s.b.data(), s.U, s.V, s.X, s.Y, 1, w, pa, pb);
                epi_diff_back(s.a.data(), s.b.data(), s.U, s.V, s.X, s.Y, 3, w, pa, pb);
            }
            const double lw[3] = {kLumaR, kLumaG, kLumaB};
            if (want_a) {
                double* gp = grad_acc(pred);
                if (C == 1)
                    for (std::int64_t i = 0; i < n; ++i) gp[i] += ga[i];
                else
                    for (std::int64_t i = 0; i < n; ++i)
                        for (int c = 0; c < 3; ++c) gp[i * 3 + c] += lw[c] * ga[i];
            }
            if (want_b) {
                double* gg = grad_acc(gt);
                if (C == 1)
                    for (std::int64_t i = 0; i < n; ++i) gg[i] += gb[i];
                else
                    for (std::int64_t i = 0; i < n; ++i)
                        for (int c = 0; c < 3; ++c) gg[i * 3 + c] += lw[c] * gb[i];
            }
        });
    return out;
}

Var loss_combined(Tape& t, Var pred, Var gt, const LossWeights& w) {
    Var total = t.loss_mae(pred, gt);
    if (w.alpha != 0.0) total = t.add(total, t.scale(t.loss_ssim(pred, gt), w.alpha));
    if (w.beta != 0.0) total = t.add(total, t.scale(t.loss_epi(pred, gt), w.beta));
    return total;
}

Var loss_stage(Tape& t, int stage, Var o_i, Var o_f, Var gt, const LossWeights& w) {
    if (stage != 1 && stage != 2)
        throw ValueOutOfRange("training stage must be 1 or 2, got " + std::to_string(stage));
    Var total = loss_combined(t, o_f, gt, w);
    if (stage == 1 && w.lambda != 0.0)
        total = t.add(total, t.scale(loss_combined(t, o_i, gt, w), w.lambda));
    return total;
}

// ---- metrics ----

namespace {

LightField clamp01(const LightField& lf) {
    std::vector<double> d = lf.data();
    for (auto& v : d) {
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
    }
    return LightField::unchecked(lf.U(), lf.V(), lf.X(), lf.Y(), lf.C(), std::move(d));
}

LightField luma_of(const LightField& lf) { return lf.C() == 1 ? lf : rgb_to_luma(lf); }

}  // namespace

ViewStats psnr_y(const LightField& pred, const LightField& gt) {
    if (!pred.same_dims(gt))
        throw ShapeMismatch("psnr_y operands have different dimensions");
    const LightField a = luma_of(clamp01(pred));
    const LightField b = luma_of(gt);
    ViewStats r;
    const std::int64_t px = a.X() * a.Y();
    double mean = 0.0;
    for (std::int64_t u = 0; u < a.U(); ++u)
        for (std::int64_t v = 0; v < a.V(); ++v) {
            double mse = 0.0;
            for (std::int64_t x = 0; x < a.X(); ++x)
                for (std::int64_t y = 0; y < a.Y(); ++y) {
                    const double d = a.at(u, v, x, y, 0) - b.at(u, v, x, y, 0);
                    mse += d * d;
                }
            mse /= static_cast<double>(px);
            const double p = mse == 0.0 ? std::numeric_limits<double>::infinity()
                                        : 10.0 * std::log10(1.0 / mse);
            r.per_view.push_back(p);
            mean += p;
        }
    r.mean = mean / static_cast<double>(r.per_view.size());
    return r;
}

ViewStats ssim_y(const LightField& pred, const LightField& gt) {
    if (!pred.same_dims(gt))
        throw ShapeMismatch("ssim_y operands have different dimensions");
    const LightField a = luma_of(clamp01(pred));
    const LightField b = luma_of(gt);
    const std::int64_t UV = a.U() * a.V(), X = a.X(), Y = a.Y(), px = X * Y;
    SsimSaved maps;
    ssim_compute(a.data().data(), b.data().data(), UV, X, Y, maps);
    ViewStats r;
    double mean = 0.0;
    for (std::int64_t v = 0; v < UV; ++v) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < px; ++i) acc += maps.smap[v * px + i];
        const double m = acc / static_cast<double>(px);
        r.per_view.push_back(m);
        mean += m;
    }
    r.mean = mean / static_cast<double>(UV);
    return r;
}

double psnr_y_masked(const LightField& pred, const LightField& gt, const LightField& mask) {
    if (!pred.same_dims(gt))
        throw ShapeMismatch("psnr_y_masked operands have different dimensions");
    if (mask.C() != 1 || mask.U() != pred.U() || mask.V() != pred.V() ||
        mask.X() != pred.X() || mask.Y() != pred.Y())
        throw ShapeMismatch("mask must be a C=1 field matching the prediction");
    const LightField a = luma_of(clamp01(pred));
    const LightField b = luma_of(gt);
    double mse = 0.0;
    std::int64_t cnt = 0;
    for (std::int64_t u = 0; u < a.U(); ++u)
        for (std::int64_t v = 0; v < a.V(); ++v)
            for (std::int64_t x = 0; x < a.X(); ++x)
                for (std::int64_t y = 0; y < a.Y(); ++y)
                    if (mask.at(u, v, x, y, 0) > 0.5) {
                        const double d = a.at(u, v, x, y, 0) - b.at(u, v, x, y, 0);
                        mse += d * d;
                        ++cnt;
                    }
    if (cnt == 0 || mse == 0.0) return std::numeric_limits<double>::infinity();
    mse /= static_cast<double>(cnt);
    return 10.0 * std::log10(1.0 / mse);
}

double MetricReport::mean_psnr() const {
    if (scenes.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : scenes) acc += s.psnr.mean;
    return acc / static_cast<double>(scenes.size());
}

double MetricReport::mean_ssim() const {
    if (scenes.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : scenes) acc += s.ssim.mean;
    return acc / static_cast<double>(scenes.size());
}

std::string metric_report_text(const MetricReport& r) {
    auto fmt = [](double v) {
        if (std::isinf(v)) return std::string("inf");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    std::string out;
    for (const auto& s : r.scenes) {
        out += "scene " + s.name + " psnr_views ";
        for (std::size_t i = 0; i < s.psnr.per_view.size(); ++i) {
            if (i) out += ",";
            out += fmt(s.psnr.per_view[i]);
        }
        out += " psnr_mean " + fmt(s.psnr.mean);
        out += " ssim_mean " + fmt(s.ssim.mean);
        out += "\n";
    }
    return out;
}

}  // namespace lfrr
