#pragma once

#include <cstdint>
#include <vector>

#include "lfrr/errors.hpp"
#include "lfrr/tensor.hpp"

namespace lfrr {

// 4D light field with a channel axis: values laid out u-outermost, c-innermost,
// flat index u*(V*X*Y*C) + v*(X*Y*C) + x*(Y*C) + y*C + c. (u,v) are angular
// view coordinates, (x,y) spatial pixel coordinates. Values live in [0,1];
// signed grids (residuals, gradients) use the `unchecked` constructor.
class LightField {
public:
    LightField() = default;

    // Validating constructor: data length must match, all values finite and
    // inside [0,1].
    LightField(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
               std::int64_t C, std::vector<double> data);

    // Skips the range check (residual maps are signed). Length still checked.
    static LightField unchecked(std::int64_t U, std::int64_t V, std::int64_t X,
                                std::int64_t Y, std::int64_t C,
                                std::vector<double> data);

    static LightField zeros(std::int64_t U, std::int64_t V, std::int64_t X,
                            std::int64_t Y, std::int64_t C) {
        return unchecked(U, V, X, Y, C,
                         std::vector<double>(static_cast<std::size_t>(U * V * X * Y * C), 0.0));
    }

    std::int64_t U() const { return U_; }
    std::int64_t V() const { return V_; }
    std::int64_t X() const { return X_; }
    std::int64_t Y() const { return Y_; }
    std::int64_t C() const { return C_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    std::int64_t index(std::int64_t u, std::int64_t v, std::int64_t x,
                       std::int64_t y, std::int64_t c) const {
        return (((u * V_ + v) * X_ + x) * Y_ + y) * C_ + c;
    }

    double at(std::int64_t u, std::int64_t v, std::int64_t x, std::int64_t y,
              std::int64_t c) const {
        return data_[static_cast<std::size_t>(index(u, v, x, y, c))];
    }
    double& at(std::int64_t u, std::int64_t v, std::int64_t x, std::int64_t y,
               std::int64_t c) {
        return data_[static_cast<std::size_t>(index(u, v, x, y, c))];
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_dims(const LightField& o) const {
        return U_ == o.U_ && V_ == o.V_ && X_ == o.X_ && Y_ == o.Y_ && C_ == o.C_;
    }

    // View of shape [X,Y,C] copied out of the (u,v) sub-aperture.
    std::vector<double> subaperture_view(std::int64_t u, std::int64_t v) const;

    Tensor to_tensor(bool requires_grad = false) const {
        return Tensor(Shape{U_, V_, X_, Y_, C_}, data_, requires_grad);
    }

    static LightField from_tensor(const Tensor& t, bool validate_range = false);

private:
    std::int64_t U_ = 0, V_ = 0, X_ = 0, Y_ = 0, C_ = 0;
    std::vector<double> data_;
};

// 2D epipolar-plane slice. Horizontal EPIs mix (u,x) at fixed (v,y); vertical
// EPIs mix (v,y) at fixed (u,x). plane is laid out [A,B,C] with the angular
// axis A outermost.
struct EPI {
    enum class Orientation { Horizontal, Vertical };
    Orientation orientation;
    std::int64_t A = 0;  // u (horizontal) or v (vertical)
    std::int64_t B = 0;  // x (horizontal) or y (vertical)
    std::int64_t C = 0;
    std::vector<double> plane;

    double at(std::int64_t a, std::int64_t b, std::int64_t c) const {
        return plane[static_cast<std::size_t>((a * B + b) * C + c)];
    }
};

// Dihedral-group element acting on a light field: flips are applied first
// (x with u, y with v), then `rotate90` quarter-turns counterclockwise that
// co-rotate (x,y) and (u,v). Composition stays inside the dihedral group of
// the square.
struct LfTransform {
    bool flip_x = false;
    bool flip_y = false;
    int rotate90 = 0;  // 0..3 quarter turns
};

LightField lf_new(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
                  std::int64_t C, std::vector<double> data);

EPI extract_epi(const LightField& lf, EPI::Orientation orientation,
                std::int64_t fixed_a, std::int64_t fixed_b);

// BT.601 full-range luma on [0,1] values: Y = 0.299 R + 0.587 G + 0.114 B.
LightField rgb_to_luma(const LightField& lf);

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

LightField apply_transform(const LightField& lf, const LfTransform& t);

LightField crop_patch(const LightField& lf, std::int64_t x0, std::int64_t y0,
                      std::int64_t w, std::int64_t h);

}  // namespace lfrr
