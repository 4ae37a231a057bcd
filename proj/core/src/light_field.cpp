#include "lfrr/light_field.hpp"

#include <cmath>
#include <utility>

namespace lfrr {

namespace {

void check_dims(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
                std::int64_t C) {
    if (U < 1 || V < 1 || X < 1 || Y < 1 || C < 1)
        throw ValueOutOfRange("light field dims must be >= 1, got (" +
                              std::to_string(U) + "," + std::to_string(V) + "," +
                              std::to_string(X) + "," + std::to_string(Y) + "," +
                              std::to_string(C) + ")");
}

void check_length(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
                  std::int64_t C, std::size_t n) {
    const auto want = static_cast<std::size_t>(U) * static_cast<std::size_t>(V) *
                      static_cast<std::size_t>(X) * static_cast<std::size_t>(Y) *
                      static_cast<std::size_t>(C);
    if (n != want)
        throw DimensionMismatch("light field data length " + std::to_string(n) +
                                " does not match U*V*X*Y*C = " + std::to_string(want));
}

}  // namespace

LightField::LightField(std::int64_t U, std::int64_t V, std::int64_t X,
                       std::int64_t Y, std::int64_t C, std::vector<double> data)
    : U_(U), V_(V), X_(X), Y_(Y), C_(C), data_(std::move(data)) {
    check_dims(U, V, X, Y, C);
    check_length(U, V, X, Y, C, data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const double v = data_[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw ValueOutOfRange("light field value at flat index " + std::to_string(i) +
                                  " is " + std::to_string(v) + ", expected finite in [0,1]");
    }
}

LightField LightField::unchecked(std::int64_t U, std::int64_t V, std::int64_t X,
                                 std::int64_t Y, std::int64_t C,
                                 std::vector<double> data) {
    check_dims(U, V, X, Y, C);
    check_length(U, V, X, Y, C, data.size());
    LightField lf;
    lf.U_ = U;
    lf.V_ = V;
    lf.X_ = X;
    lf.Y_ = Y;
    lf.C_ = C;
    lf.data_ = std::move(data);
    return lf;
}

std::vector<double> LightField::subaperture_view(std::int64_t u, std::int64_t v) const {
    if (u < 0 || u >= U_ || v < 0 || v >= V_)
        throw IndexOutOfRange("view (" + std::to_string(u) + "," + std::to_string(v) +
                              ") outside angular grid " + std::to_string(U_) + "x" +
                              std::to_string(V_));
    const std::int64_t n = X_ * Y_ * C_;
    const auto* src = data_.data() + index(u, v, 0, 0, 0);
    return std::vector<double>(src, src + n);
}

LightField LightField::from_tensor(const Tensor& t, bool validate_range) {
    if (t.shape.rank() != 5)
        throw ShapeMismatch("light field tensor must be rank 5, got " + t.shape.str());
    const auto& d = t.shape.dims();
    if (validate_range)
        return LightField(d[0], d[1], d[2], d[3], d[4], *t.data);
    return unchecked(d[0], d[1], d[2], d[3], d[4], *t.data);
}

LightField lf_new(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
                  std::int64_t C, std::vector<double> data) {
    return LightField(U, V, X, Y, C, std::move(data));
}

EPI extract_epi(const LightField& lf, EPI::Orientation orientation,
                std::int64_t fixed_a, std::int64_t fixed_b) {
    EPI epi;
    epi.orientation = orientation;
    epi.C = lf.C();
    if (orientation == EPI::Orientation::Horizontal) {
        // fixed v and y; plane axes (u, x)
        if (fixed_a < 0 || fixed_a >= lf.V() || fixed_b < 0 || fixed_b >= lf.Y())
            throw IndexOutOfRange("horizontal EPI at (v=" + std::to_string(fixed_a) +
                                  ",y=" + std::to_string(fixed_b) + ") out of bounds");
        epi.A = lf.U();
        epi.B = lf.X();
        epi.plane.resize(static_cast<std::size_t>(epi.A * epi.B * epi.C));
        std::size_t o = 0;
        for (std::int64_t u = 0; u < lf.U(); ++u)
            for (std::int64_t x = 0; x < lf.X(); ++x)
                for (std::int64_t c = 0; c < lf.C(); ++c)
                    epi.plane[o++] = lf.at(u, fixed_a, x, fixed_b, c);
    } else {
        // fixed u and x; plane axes (v, y)
        if (fixed_a < 0 || fixed_a >= lf.U() || fixed_b < 0 || fixed_b >= lf.X())
            throw IndexOutOfRange("vertical EPI at (u=" + std::to_string(fixed_a) +
                                  ",x=" + std::to_string(fixed_b) + ") out of bounds");
        epi.A = lf.V();
        epi.B = lf.Y();
        epi.plane.resize(static_cast<std::size_t>(epi.A * epi.B * epi.C));
        std::size_t o = 0;
        for (std::int64_t v = 0; v < lf.V(); ++v)
            for (std::int64_t y = 0; y < lf.Y(); ++y)
                for (std::int64_t c = 0; c < lf.C(); ++c)
                    epi.plane[o++] = lf.at(fixed_a, v, fixed_b, y, c);
    }
    return epi;
}

LightField rgb_to_luma(const LightField& lf) {
    if (lf.C() != 3)
        throw ChannelMismatch("luma conversion needs C=3, got C=" + std::to_string(lf.C()));
    std::vector<double> out(static_cast<std::size_t>(lf.U() * lf.V() * lf.X() * lf.Y()));
    const double* src = lf.data().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double* p = src + 3 * i;
        double y = kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2];
        if (y < 0.0) y = 0.0;
        if (y > 1.0) y = 1.0;
        out[i] = y;
    }
    return LightField::unchecked(lf.U(), lf.V(), lf.X(), lf.Y(), 1, std::move(out));
}

LightField apply_transform(const LightField& lf, const LfTransform& t) {
    // Flips first. Flipping x reverses both the x and u axes so EPI slopes
    // stay consistent; likewise y with v.
    LightField cur = lf;
    if (t.flip_x) {
        LightField out = LightField::zeros(cur.U(), cur.V(), cur.X(), cur.Y(), cur.C());
        for (std::int64_t u = 0; u < cur.U(); ++u)
            for (std::int64_t v = 0; v < cur.V(); ++v)
                for (std::int64_t x = 0; x < cur.X(); ++x)
                    for (std::int64_t y = 0; y < cur.Y(); ++y)
                        for (std::int64_t c = 0; c < cur.C(); ++c)
                            out.at(cur.U() - 1 - u, v, cur.X() - 1 - x, y, c) =
                                cur.at(u, v, x, y, c);
        cur = std::move(out);
    }
    if (t.flip_y) {
        LightField out = LightField::zeros(cur.U(), cur.V(), cur.X(), cur.Y(), cur.C());
        for (std::int64_t u = 0; u < cur.U(); ++u)
            for (std::int64_t v = 0; v < cur.V(); ++v)
                for (std::int64_t x = 0; x < cur.X(); ++x)
                    for (std::int64_t y = 0; y < cur.Y(); ++y)
                        for (std::int64_t c = 0; c < cur.C(); ++c)
                            out.at(u, cur.V() - 1 - v, x, cur.Y() - 1 - y, c) =
                                cur.at(u, v, x, y, c);
        cur = std::move(out);
    }
    const int r = ((t.rotate90 % 4) + 4) % 4;
    for (int i = 0; i < r; ++i) {
        // One counterclockwise quarter turn: (x,y) -> (Y-1-y, x), applied to
        // (u,v) as well so the angular parallax axes track the spatial ones.
        LightField out = LightField::zeros(cur.V(), cur.U(), cur.Y(), cur.X(), cur.C());
        for (std::int64_t u = 0; u < cur.U(); ++u)
            for (std::int64_t v = 0; v < cur.V(); ++v)
                for (std::int64_t x = 0; x < cur.X(); ++x)
                    for (std::int64_t y = 0; y < cur.Y(); ++y)
                        for (std::int64_t c = 0; c < cur.C(); ++c)
                            out.at(cur.V() - 1 - v, u, cur.Y() - 1 - y, x, c) =
                                cur.at(u, v, x, y, c);
        cur = std::move(out);
    }
    return cur;
}

LightField crop_patch(const LightField& lf, std::int64_t x0, std::int64_t y0,
                      std::int64_t w, std::int64_t h) {
    if (w < 1 || h < 1)
        throw IndexOutOfRange("crop size must be positive, got " + std::to_string(w) +
                              "x" + std::to_string(h));
    if (x0 < 0 || y0 < 0 || x0 + w > lf.X() || y0 + h > lf.Y())
        throw IndexOutOfRange("crop window [" + std::to_string(x0) + "," +
                              std::to_string(x0 + w) + ")x[" + std::to_string(y0) + "," +
                              std::to_string(y0 + h) + ") outside " +
                              std::to_string(lf.X()) + "x" + std::to_string(lf.Y()));
    LightField out = LightField::zeros(lf.U(), lf.V(), w, h, lf.C());
    for (std::int64_t u = 0; u < lf.U(); ++u)
        for (std::int64_t v = 0; v < lf.V(); ++v)
            for (std::int64_t x = 0; x < w; ++x)
                for (std::int64_t y = 0; y < h; ++y)
                    for (std::int64_t c = 0; c < lf.C(); ++c)
                        out.at(u, v, x, y, c) = lf.at(u, v, x0 + x, y0 + y, c);
    return out;
}

}  // namespace lfrr
