#pragma once

// Inner loops shared by the tape operators and the eager executor. The
// convolution treats a 5-axis field [U,V,X,Y,C] (C stride 1, innermost) as a
// 2D image over one of four axis pairs, with the remaining two axes batched:
//   spatial (x,y) | angular (u,v) | epi_h (u,x) | epi_v (v,y)
// Weights are stored [k,k,Cin,Cout] with Cout innermost so the hot loop is a
// broadcast-multiply-accumulate over a short contiguous run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace lfrr::kern {

struct Plane {
    std::int64_t P = 0, sP = 0;  // first convolved axis: extent, stride
    std::int64_t Q = 0, sQ = 0;  // second convolved axis
    std::int64_t R = 1, sR = 0;  // batch axes
    std::int64_t S = 1, sS = 0;
};

// which: 0 = spatial, 1 = angular, 2 = epi_h, 3 = epi_v.
inline Plane plane_view(int which, std::int64_t U, std::int64_t V, std::int64_t X,
                        std::int64_t Y, std::int64_t C) {
    const std::int64_t sY = C;
    const std::int64_t sX = Y * C;
    const std::int64_t sV = X * sX;
    const std::int64_t sU = V * sV;
    Plane pl;
    switch (which) {
        case 0: pl = {X, sX, Y, sY, U, sU, V, sV}; break;
        case 1: pl = {U, sU, V, sV, X, sX, Y, sY}; break;
        case 2: pl = {U, sU, X, sX, V, sV, Y, sY}; break;
        default: pl = {V, sV, Y, sY, U, sU, X, sX}; break;
    }
    return pl;
}

namespace detail {

template <int COUT>
void conv_plane_fixed(const double* in, const Plane& pi, std::int64_t Cin,
                      const double* W, const double* bias, double* out,
                      const Plane& po, int k, bool accumulate) {
    const int h = k / 2;
    for (std::int64_t r = 0; r < pi.R; ++r)
        for (std::int64_t s = 0; s < pi.S; ++s) {
            const std::int64_t bi = r * pi.sR + s * pi.sS;
            const std::int64_t bo = r * po.sR + s * po.sS;
            for (std::int64_t p = 0; p < pi.P; ++p) {
                const std::int64_t dp0 = h - p > 0 ? h - p : 0;
                const std::int64_t dp1 = std::min<std::int64_t>(k - 1, pi.P - 1 - p + h);
                for (std::int64_t q = 0; q < pi.Q; ++q) {
                    const std::int64_t dq0 = h - q > 0 ? h - q : 0;
                    const std::int64_t dq1 = std::min<std::int64_t>(k - 1, pi.Q - 1 - q + h);
                    double acc[COUT];
                    if (bias)
                        for (int co = 0; co < COUT; ++co) acc[co] = bias[co];
                    else
                        for (int co = 0; co < COUT; ++co) acc[co] = 0.0;
                    for (std::int64_t dp = dp0; dp <= dp1; ++dp) {
                        const double* row = in + bi + (p + dp - h) * pi.sP;
                        const double* wrow = W + (dp * k + dq0) * Cin * COUT;
                        for (std::int64_t dq = dq0; dq <= dq1; ++dq) {
                            const double* src = row + (q + dq - h) * pi.sQ;
                            const double* w = wrow;
                            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                                const double v = src[ci];
                                for (int co = 0; co < COUT; ++co) acc[co] += v * w[co];
                                w += COUT;
                            }
                            wrow += Cin * COUT;
                        }
                    }
                    double* dst = out + bo + p * po.sP + q * po.sQ;
                    if (accumulate)
                        for (int co = 0; co < COUT; ++co) dst[co] += acc[co];
                    else
                        for (int co = 0; co < COUT; ++co) dst[co] = acc[co];
                }
            }
        }
}

void conv_plane_generic(const double* in, const Plane& pi, std::int64_t Cin,
                        const double* W, const double* bias, std::int64_t Cout,
                        double* out, const Plane& po, int k, bool accumulate);

}  // namespace detail

// out[r,s,p,q,co] = bias[co] + sum_{dp,dq,ci} W[dp,dq,ci,co] * in[r,s,p+dp-h,q+dq-h,ci]
// with zero padding h = k/2 and stride 1. bias may be null. accumulate adds
// into out instead of overwriting (used for the transposed pass).
void conv_plane(const double* in, const Plane& pi, std::int64_t Cin, const double* W,
                const double* bias, std::int64_t Cout, double* out, const Plane& po,
                int k, bool accumulate);

// Gradient w.r.t. weights and bias, accumulated into gW [k,k,Cin,Cout] and
// gb [Cout] (caller zeroes them first when accumulation is unwanted).
void conv_plane_grad_w(const double* in, const Plane& pi, std::int64_t Cin,
                       const double* gout, const Plane& po, std::int64_t Cout, int k,
                       double* gW, double* gb);

// W'[dp,dq,co,ci] = W[k-1-dp, k-1-dq, ci, co]: convolving the output gradient
// with this kernel yields the input gradient.
std::vector<double> flip_transpose_w(const double* W, int k, std::int64_t Cin,
                                     std::int64_t Cout);

// Gradient w.r.t. the convolution input, accumulated into gin.
void conv_plane_grad_in(const double* gout, const Plane& po, std::int64_t Cout,
                        const double* W, std::int64_t Cin, double* gin,
                        const Plane& pi, int k);

inline constexpr double kLeakySlope = 0.1;

inline double leaky_relu(double x) { return x >= 0.0 ? x : kLeakySlope * x; }
inline double leaky_relu_dx(double x) { return x >= 0.0 ? 1.0 : kLeakySlope; }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace lfrr::kern
