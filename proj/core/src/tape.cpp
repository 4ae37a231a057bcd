#include "lfrr/tape.hpp"

#include <cmath>

#include "lfrr/detail/kernels.hpp"

namespace lfrr {

namespace testhook {
bool bad_adjoint = false;
}

Var Tape::leaf(const Tensor& t) {
    Node n;
    n.shape = t.shape;
    n.val = t.data;
    n.is_leaf = true;
    n.src = t;
    n.needs_grad = t.requires_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::make_node(Shape shape, bool needs) {
    Node n;
    n.val = std::make_shared<std::vector<double>>(static_cast<std::size_t>(shape.numel()), 0.0);
    n.shape = std::move(shape);
    n.needs_grad = needs;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) {
    if (!v.valid() || v.id >= static_cast<std::int32_t>(nodes_.size()))
        throw IndexOutOfRange("invalid tape handle");
    return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= static_cast<std::int32_t>(nodes_.size()))
        throw IndexOutOfRange("invalid tape handle");
    return nodes_[static_cast<std::size_t>(v.id)];
}

double* Tape::grad_acc(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad.assign(n.val->size(), 0.0);
    return n.grad.data();
}

double Tape::scalar(Var v) const {
    const Node& n = node(v);
    if (n.shape.numel() != 1)
        throw NotScalar("expected scalar, got shape " + n.shape.str());
    return (*n.val)[0];
}

Var Tape::axis_conv(Var F, Var W, Var b, ConvPlane plane) {
    const Shape& fs = shape(F);
    const Shape& ws = shape(W);
    const Shape& bs = shape(b);
    if (fs.rank() != 5)
        throw ShapeMismatch("axis_conv input must be rank 5, got " + fs.str());
    if (ws.rank() != 4 || ws[0] != ws[1])
        throw ShapeMismatch("axis_conv weights must be [k,k,Cin,Cout], got " + ws.str());
    const std::int64_t k = ws[0];
    if (k % 2 == 0) throw ShapeMismatch("kernel size must be odd, got " + std::to_string(k));
    const std::int64_t Cin = ws[2], Cout = ws[3];
    if (fs[4] != Cin)
        throw ShapeMismatch("axis_conv channel mismatch: input " + fs.str() +
                            " vs weights " + ws.str());
    if (bs.rank() != 1 || bs[0] != Cout)
        throw ShapeMismatch("axis_conv bias must be [Cout], got " + bs.str());

    const std::int64_t U = fs[0], V = fs[1], X = fs[2], Y = fs[3];
    const int which = static_cast<int>(plane);
    const kern::Plane pi = kern::plane_view(which, U, V, X, Y, Cin);
    const kern::Plane po = kern::plane_view(which, U, V, X, Y, Cout);

    Var out = make_node(Shape{U, V, X, Y, Cout},
                        needs_grad(F) || needs_grad(W) || needs_grad(b));
    kern::conv_plane(val_ptr(F), pi, Cin, val_ptr(W), val_ptr(b), Cout, val_ptr(out),
                     po, static_cast<int>(k), false);

    if (node(out).needs_grad)
        set_back(out, [this, F, W, b, out, pi, po, Cin, Cout, k]() {
            const double* g = node(out).grad.data();
            if (needs_grad(F))
                kern::conv_plane_grad_in(g, po, Cout, val_ptr(W), Cin, grad_acc(F), pi,
                                         static_cast<int>(k));
            if (needs_grad(W) || needs_grad(b)) {
                std::vector<double> scratch_w, scratch_b;
                double* gw = needs_grad(W) ? grad_acc(W) : nullptr;
                double* gb = needs_grad(b) ? grad_acc(b) : nullptr;
                if (!gw) {
                    scratch_w.assign(node(W).val->size(), 0.0);
                    gw = scratch_w.data();
                }
                if (!gb) {
                    scratch_b.assign(node(b).val->size(), 0.0);
                    gb = scratch_b.data();
                }
                kern::conv_plane_grad_w(val_ptr(F), pi, Cin, g, po, Cout,
                                        static_cast<int>(k), gw, gb);
            }
        });
    return out;
}

Var Tape::pointwise(Var F, Pointwise kind) {
    if (kind == Pointwise::identity) {
        // Still a real node so gradcheck can probe it.
        Var out = make_node(shape(F), needs_grad(F));
        *node(out).val = value(F);
        if (node(out).needs_grad)
            set_back(out, [this, F, out]() {
                const auto& g = node(out).grad;
                double* gf = grad_acc(F);
                for (std::size_t i = 0; i < g.size(); ++i) gf[i] += g[i];
            });
        return out;
    }

    Var out = make_node(shape(F), needs_grad(F));
    const double* x = val_ptr(F);
    double* y = val_ptr(out);
    const std::size_t n = node(F).val->size();
    if (kind == Pointwise::leaky_relu)
        for (std::size_t i = 0; i < n; ++i) y[i] = kern::leaky_relu(x[i]);
    else
        for (std::size_t i = 0; i < n; ++i) y[i] = kern::sigmoid(x[i]);

    if (node(out).needs_grad)
        set_back(out, [this, F, out, kind]() {
            const auto& g = node(out).grad;
            double* gf = grad_acc(F);
            if (kind == Pointwise::leaky_relu) {
                const double* x = val_ptr(F);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gf[i] += g[i] * kern::leaky_relu_dx(x[i]);
            } else {
                const double* y = val_ptr(out);
                const double flip = testhook::bad_adjoint ? -1.0 : 1.0;
                for (std::size_t i = 0; i < g.size(); ++i)
                    gf[i] += flip * g[i] * y[i] * (1.0 - y[i]);
            }
        });
    return out;
}

namespace {

// Pinned broadcast patterns; the second operand is the broadcast one.
enum class Bcast { same, scalar, chan1, view };

Bcast classify(const Shape& a, const Shape& b) {
    if (a == b) return Bcast::same;
    if (b.rank() == 0) return Bcast::scalar;
    if (a.rank() == 5 && b.rank() == 5 && b[4] == 1 && a[0] == b[0] && a[1] == b[1] &&
        a[2] == b[2] && a[3] == b[3])
        return Bcast::chan1;
    if (a.rank() == 5 && b.rank() == 3 && a[0] == b[0] && a[1] == b[1] && a[4] == b[2])
        return Bcast::view;
    throw ShapeMismatch("no supported broadcast between " + a.str() + " and " + b.str());
}

}  // namespace

Var Tape::add(Var a, Var b) {
    const Shape& as = shape(a);
    const Bcast bc = classify(as, shape(b));
    Var out = make_node(as, needs_grad(a) || needs_grad(b));
    const double* pa = val_ptr(a);
    const double* pb = val_ptr(b);
    double* po = val_ptr(out);
    const std::int64_t n = as.numel();

    switch (bc) {
        case Bcast::same:
            for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
            break;
        case Bcast::scalar:
            for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[0];
            break;
        case Bcast::chan1: {
            const std::int64_t F = as[4], m = n / F;
            for (std::int64_t j = 0; j < m; ++j)
                for (std::int64_t f = 0; f < F; ++f) po[j * F + f] = pa[j * F + f] + pb[j];
            break;
        }
        case Bcast::view: {
            const std::int64_t F = as[4], XY = as[2] * as[3], UV = as[0] * as[1];
            for (std::int64_t uv = 0; uv < UV; ++uv)
                for (std::int64_t t = 0; t < XY; ++t)
                    for (std::int64_t f = 0; f < F; ++f)
                        po[(uv * XY + t) * F + f] = pa[(uv * XY + t) * F + f] + pb[uv * F + f];
            break;
        }
    }

    if (node(out).needs_grad)
        set_back(out, [this, a, b, out, bc]() {
            const auto& g = node(out).grad;
            if (needs_grad(a)) {
                double* ga = grad_acc(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (needs_grad(b)) reduce_into(b, static_cast<int>(bc), g.data(), shape(out), +1.0, nullptr);
        });
    return out;
}

Var Tape::sub(Var a, Var b) {
    const Shape& as = shape(a);
    const Bcast bc = classify(as, shape(b));
    Var out = make_node(as, needs_grad(a) || needs_grad(b));
    const double* pa = val_ptr(a);
    const double* pb = val_ptr(b);
    double* po = val_ptr(out);
    const std::int64_t n = as.numel();

    switch (bc) {
        case Bcast::same:
            for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
            break;
        case Bcast::scalar:
            for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[0];
            break;
        case Bcast::chan1: {
            const std::int64_t F = as[4], m = n / F;
            for (std::int64_t j = 0; j < m; ++j)
                for (std::int64_t f = 0; f < F; ++f) po[j * F + f] = pa[j * F + f] - pb[j];
            break;
        }
        case Bcast::view: {
            const std::int64_t F = as[4], XY = as[2] * as[3], UV = as[0] * as[1];
            for (std::int64_t uv = 0; uv < UV; ++uv)
                for (std::int64_t t = 0; t < XY; ++t)
                    for (std::int64_t f = 0; f < F; ++f)
                        po[(uv * XY + t) * F + f] = pa[(uv * XY + t) * F + f] - pb[uv * F + f];
            break;
        }
    }

    if (node(out).needs_grad)
        set_back(out, [this, a, b, out, bc]() {
            const auto& g = node(out).grad;
            if (needs_grad(a)) {
                double* ga = grad_acc(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (needs_grad(b)) reduce_into(b, static_cast<int>(bc), g.data(), shape(out), -1.0, nullptr);
        });
    return out;
}

Var Tape::mul(Var a, Var b) {
    const Shape& as = shape(a);
    const Bcast bc = classify(as, shape(b));
    Var out = make_node(as, needs_grad(a) || needs_grad(b));
    const double* pa = val_ptr(a);
    const double* pb = val_ptr(b);
    double* po = val_ptr(out);
    const std::int64_t n = as.numel();

    switch (bc) {
        case Bcast::same:
            for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
            break;
        case Bcast::scalar:
            for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[0];
            break;
        case Bcast::chan1: {
            const std::int64_t F = as[4], m = n / F;
            for (std::int64_t j = 0; j < m; ++j)
                for (std::int64_t f = 0; f < F; ++f) po[j * F + f] = pa[j * F + f] * pb[j];
            break;
        }
        case Bcast::view: {
            const std::int64_t F = as[4], XY = as[2] * as[3], UV = as[0] * as[1];
            for (std::int64_t uv = 0; uv < UV; ++uv)
                for (std::int64_t t = 0; t < XY; ++t)
                    for (std::int64_t f = 0; f < F; ++f)
                        po[(uv * XY + t) * F + f] = pa[(uv * XY + t) * F + f] * pb[uv * F + f];
            break;
        }
    }

    if (node(out).needs_grad)
        set_back(out, [this, a, b, out, bc]() {
            const auto& g = node(out).grad;
            const Shape& os = shape(out);
            if (needs_grad(a)) {
                // grad_a = g * broadcast(b)
                double* ga = grad_acc(a);
                const double* pb = val_ptr(b);
                const std::int64_t n = os.numel();
                switch (bc) {
                    case Bcast::same:
                        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * pb[i];
                        break;
                    case Bcast::scalar:
                        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * pb[0];
                        break;
                    case Bcast::chan1: {
                        const std::int64_t F = os[4], m = n / F;
                        for (std::int64_t j = 0; j < m; ++j)
                            for (std::int64_t f = 0; f < F; ++f)
                                ga[j * F + f] += g[j * F + f] * pb[j];
                        break;
                    }
                    case Bcast::view: {
                        const std::int64_t F = os[4], XY = os[2] * os[3], UV = os[0] * os[1];
                        for (std::int64_t uv = 0; uv < UV; ++uv)
                            for (std::int64_t t = 0; t < XY; ++t)
                                for (std::int64_t f = 0; f < F; ++f)
                                    ga[(uv * XY + t) * F + f] +=
                                        g[(uv * XY + t) * F + f] * pb[uv * F + f];
                        break;
                    }
                }
            }
            if (needs_grad(b)) reduce_into(b, static_cast<int>(bc), g.data(), os, +1.0, val_ptr(a));
        });
    return out;
}

// Accumulates sign * (g ⊙ weight) reduced over the broadcast axes into b's
// gradient; weight == nullptr means all-ones (add/sub case).
void Tape::reduce_into(Var b, int bcast_kind, const double* g, const Shape& os, double sign,
                       const double* weight) {
    const Bcast bc = static_cast<Bcast>(bcast_kind);
    double* gb = grad_acc(b);
    const std::int64_t n = os.numel();
    switch (bc) {
        case Bcast::same:
            if (weight)
                for (std::int64_t i = 0; i < n; ++i) gb[i] += sign * g[i] * weight[i];
            else
                for (std::int64_t i = 0; i < n; ++i) gb[i] += sign * g[i];
            break;
        case Bcast::scalar: {
            double acc = 0.0;
            if (weight)
                for (std::int64_t i = 0; i < n; ++i) acc += g[i] * weight[i];
            else
                for (std::int64_t i = 0; i < n; ++i) acc += g[i];
            gb[0] += sign * acc;
            break;
        }
        case Bcast::chan1: {
            const std::int64_t F = os[4], m = n / F;
            for (std::int64_t j = 0; j < m; ++j) {
                double acc = 0.0;
                if (weight)
                    for (std::int64_t f = 0; f < F; ++f) acc += g[j * F + f] * weight[j * F + f];
                else
                    for (std::int64_t f = 0; f < F; ++f) acc += g[j * F + f];
                gb[j] += sign * acc;
            }
            break;
        }
        case Bcast::view: {
            const std::int64_t F = os[4], XY = os[2] * os[3], UV = os[0] * os[1];
            for (std::int64_t uv = 0; uv < UV; ++uv)
                for (std::int64_t t = 0; t < XY; ++t)
                    for (std::int64_t f = 0; f < F; ++f) {
                        const std::int64_t i = (uv * XY + t) * F + f;
                        gb[uv * F + f] += sign * g[i] * (weight ? weight[i] : 1.0);
                    }
            break;
        }
    }
}

Var Tape::scale(Var a, double s) {
    Var out = make_node(shape(a), needs_grad(a));
    const double* pa = val_ptr(a);
    double* po = val_ptr(out);
    const std::int64_t n = shape(a).numel();
    for (std::int64_t i = 0; i < n; ++i) po[i] = s * pa[i];
    if (node(out).needs_grad)
        set_back(out, [this, a, out, s]() {
            const auto& g = node(out).grad;
            double* ga = grad_acc(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
        });
    return out;
}

Var Tape::reduce_mean(Var a) {
    const std::int64_t n = shape(a).numel();
    Var out = make_node(Shape{}, needs_grad(a));
    const double* pa = val_ptr(a);
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += pa[i];
    (*node(out).val)[0] = acc / static_cast<double>(n);
    if (node(out).needs_grad)
        set_back(out, [this, a, out, n]() {
            const double s = node(out).grad[0] / static_cast<double>(n);
            double* ga = grad_acc(a);
            for (std::int64_t i = 0; i < n; ++i) ga[i] += s;
        });
    return out;
}

Var Tape::concat_channels(Var a, Var b) {
    const Shape& as = shape(a);
    const Shape& bs = shape(b);
    if (as.rank() != 5 || bs.rank() != 5 || as[0] != bs[0] || as[1] != bs[1] ||
        as[2] != bs[2] || as[3] != bs[3])
        throw ShapeMismatch("concat_channels needs matching field axes: " + as.str() +
                            " vs " + bs.str());
    const std::int64_t Fa = as[4], Fb = bs[4];
    const std::int64_t m = as.numel() / Fa;
    Var out = make_node(Shape{as[0], as[1], as[2], as[3], Fa + Fb},
                        needs_grad(a) || needs_grad(b));
    const double* pa = val_ptr(a);
    const double* pb = val_ptr(b);
    double* po = val_ptr(out);
    for (std::int64_t j = 0; j < m; ++j) {
        for (std::int64_t f = 0; f < Fa; ++f) po[j * (Fa + Fb) + f] = pa[j * Fa + f];
        for (std::int64_t f = 0; f < Fb; ++f) po[j * (Fa + Fb) + Fa + f] = pb[j * Fb + f];
    }
    if (node(out).needs_grad)
        set_back(out, [this, a, b, out, Fa, Fb, m]() {
            const auto& g = node(out).grad;
            if (needs_grad(a)) {
                double* ga = grad_acc(a);
                for (std::int64_t j = 0; j < m; ++j)
                    for (std::int64_t f = 0; f < Fa; ++f)
                        ga[j * Fa + f] += g[static_cast<std::size_t>(j * (Fa + Fb) + f)];
            }
            if (needs_grad(b)) {
                double* gb = grad_acc(b);
                for (std::int64_t j = 0; j < m; ++j)
                    for (std::int64_t f = 0; f < Fb; ++f)
                        gb[j * Fb + f] += g[static_cast<std::size_t>(j * (Fa + Fb) + Fa + f)];
            }
        });
    return out;
}

Var Tape::global_avg_pool_spatial(Var F) {
    const Shape& fs = shape(F);
    if (fs.rank() != 5)
        throw ShapeMismatch("global_avg_pool_spatial input must be rank 5, got " + fs.str());
    const std::int64_t UV = fs[0] * fs[1], XY = fs[2] * fs[3], C = fs[4];
    Var out = make_node(Shape{fs[0], fs[1], fs[4]}, needs_grad(F));
    const double* pf = val_ptr(F);
    double* po = val_ptr(out);
    for (std::int64_t uv = 0; uv < UV; ++uv)
        for (std::int64_t f = 0; f < C; ++f) {
            double acc = 0.0;
            for (std::int64_t t = 0; t < XY; ++t) acc += pf[(uv * XY + t) * C + f];
            po[uv * C + f] = acc / static_cast<double>(XY);
        }
    if (node(out).needs_grad)
        set_back(out, [this, F, out, UV, XY, C]() {
            const auto& g = node(out).grad;
            double* gf = grad_acc(F);
            const double inv = 1.0 / static_cast<double>(XY);
            for (std::int64_t uv = 0; uv < UV; ++uv)
                for (std::int64_t t = 0; t < XY; ++t)
                    for (std::int64_t f = 0; f < C; ++f)
                        gf[(uv * XY + t) * C + f] += g[static_cast<std::size_t>(uv * C + f)] * inv;
        });
    return out;
}

Var Tape::affine(Var x, Var W, Var b) {
    const Shape& xs = shape(x);
    const Shape& ws = shape(W);
    const Shape& bs = shape(b);
    if (xs.rank() != 3)
        throw ShapeMismatch("affine input must be [U,V,F], got " + xs.str());
    if (ws.rank() != 2 || ws[0] != xs[2])
        throw ShapeMismatch("affine weights must be [F,G] with F=" + std::to_string(xs[2]) +
                            ", got " + ws.str());
    if (bs.rank() != 1 || bs[0] != ws[1])
        throw ShapeMismatch("affine bias must be [G], got " + bs.str());
    const std::int64_t UV = xs[0] * xs[1], Fd = ws[0], G = ws[1];
    Var out = make_node(Shape{xs[0], xs[1], G}, needs_grad(x) || needs_grad(W) || needs_grad(b));
    const double* px = val_ptr(x);
    const double* pw = val_ptr(W);
    const double* pb = val_ptr(b);
    double* po = val_ptr(out);
    for (std::int64_t uv = 0; uv < UV; ++uv) {
        double* dst = po + uv * G;
        for (std::int64_t g = 0; g < G; ++g) dst[g] = pb[g];
        const double* src = px + uv * Fd;
        for (std::int64_t f = 0; f < Fd; ++f) {
            const double v = src[f];
            const double* wrow = pw + f * G;
            for (std::int64_t g = 0; g < G; ++g) dst[g] += v * wrow[g];
        }
    }
    if (node(out).needs_grad)
        set_back(out, [this, x, W, b, out, UV, Fd, G]() {
            const auto& g = node(out).grad;
            const double* px = val_ptr(x);
            const double* pw = val_ptr(W);
            if (needs_grad(x)) {
                double* gx = grad_acc(x);
                for (std::int64_t uv = 0; uv < UV; ++uv)
                    for (std::int64_t f = 0; f < Fd; ++f) {
                        double acc = 0.0;
                        const double* wrow = pw + f * G;
                        const double* grow = g.data() + uv * G;
                        for (std::int64_t j = 0; j < G; ++j) acc += grow[j] * wrow[j];
                        gx[uv * Fd + f] += acc;
                    }
            }
            if (needs_grad(W)) {
                double* gw = grad_acc(W);
                for (std::int64_t uv = 0; uv < UV; ++uv)
                    for (std::int64_t f = 0; f < Fd; ++f) {
                        const double v = px[uv * Fd + f];
                        const double* grow = g.data() + uv * G;
                        double* gwrow = gw + f * G;
                        for (std::int64_t j = 0; j < G; ++j) gwrow[j] += v * grow[j];
                    }
            }
            if (needs_grad(b)) {
                double* gb = grad_acc(b);
                for (std::int64_t uv = 0; uv < UV; ++uv)
                    for (std::int64_t j = 0; j < G; ++j) gb[j] += g[static_cast<std::size_t>(uv * G + j)];
            }
        });
    return out;
}

void Tape::backward(Var loss) {
    Node& ln = node(loss);
    if (ln.shape.numel() != 1)
        throw NotScalar("backward needs a scalar loss, got shape " + ln.shape.str());
    for (auto& n : nodes_) n.grad.clear();
    ln.grad.assign(1, 1.0);
    for (std::int32_t i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (n.is_leaf) {
            if (n.src.requires_grad) {
                if (!n.src.grad)
                    n.src.grad = std::make_shared<std::vector<double>>(n.val->size(), 0.0);
                auto& dst = *n.src.grad;
                for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += n.grad[j];
            }
        } else if (n.back) {
            n.back();
        }
    }
}

}  // namespace lfrr
