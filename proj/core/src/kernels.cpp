#include "lfrr/detail/kernels.hpp"

namespace lfrr::kern {

namespace detail {

void conv_plane_generic(const double* in, const Plane& pi, std::int64_t Cin,
                        const double* W, const double* bias, std::int64_t Cout,
                        double* out, const Plane& po, int k, bool accumulate) {
    const int h = k / 2;
    std::vector<double> acc(static_cast<std::size_t>(Cout));
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
                    if (bias)
                        for (std::int64_t co = 0; co < Cout; ++co) acc[co] = bias[co];
                    else
                        std::fill(acc.begin(), acc.end(), 0.0);
                    for (std::int64_t dp = dp0; dp <= dp1; ++dp) {
                        const double* row = in + bi + (p + dp - h) * pi.sP;
                        for (std::int64_t dq = dq0; dq <= dq1; ++dq) {
                            const double* src = row + (q + dq - h) * pi.sQ;
                            const double* w = W + ((dp * k + dq) * Cin) * Cout;
                            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                                const double v = src[ci];
                                for (std::int64_t co = 0; co < Cout; ++co) acc[co] += v * w[co];
                                w += Cout;
                            }
                        }
                    }
                    double* dst = out + bo + p * po.sP + q * po.sQ;
                    if (accumulate)
                        for (std::int64_t co = 0; co < Cout; ++co) dst[co] += acc[co];
                    else
                        for (std::int64_t co = 0; co < Cout; ++co) dst[co] = acc[co];
                }
            }
        }
}

namespace {

// True when the four axes tile the buffer contiguously with C innermost, so
// the plane can be walked as a flat [n_px, C] array in memory order.
bool plane_compact(const Plane& pl, std::int64_t C) {
    struct Axis {
        std::int64_t stride, extent;
    } a[4] = {{pl.sP, pl.P}, {pl.sQ, pl.Q}, {pl.sR, pl.R}, {pl.sS, pl.S}};
    std::sort(a, a + 4, [](const Axis& x, const Axis& y) { return x.stride < y.stride; });
    return a[0].stride == C && a[1].stride == a[0].stride * a[0].extent &&
           a[2].stride == a[1].stride * a[1].extent &&
           a[3].stride == a[2].stride * a[2].extent;
}

// One output position, full bounds handling. Shared scalar body for the
// boundary/tail pixels of the blocked kernels.
template <int COUT>
inline void conv_one_px(const double* in, std::int64_t bi, std::int64_t bo,
                        std::int64_t p, std::int64_t q, const Plane& pi, const Plane& po,
                        std::int64_t Cin, const double* W, const double* bias,
                        double* out, int k, bool accumulate) {
    const int h = k / 2;
    const std::int64_t dp0 = h - p > 0 ? h - p : 0;
    const std::int64_t dp1 = std::min<std::int64_t>(k - 1, pi.P - 1 - p + h);
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

// 1x1 kernels on compact planes reduce to a per-pixel matrix product over a
// flat [n, Cin] walk; blocking pixels gives the FMA units independent
// accumulator chains.
template <int COUT>
void conv1x1_flat(const double* __restrict in, std::int64_t n, std::int64_t Cin,
                  const double* __restrict W, const double* __restrict bias,
                  double* __restrict out, bool accumulate) {
    constexpr int PB = 4;
    std::int64_t i = 0;
    for (; i + PB <= n; i += PB) {
        double acc[PB][COUT];
        for (int b = 0; b < PB; ++b)
            for (int co = 0; co < COUT; ++co) acc[b][co] = bias ? bias[co] : 0.0;
        const double* src = in + i * Cin;
        const double* w = W;
        for (std::int64_t ci = 0; ci < Cin; ++ci) {
            for (int b = 0; b < PB; ++b) {
                const double v = src[b * Cin + ci];
                for (int co = 0; co < COUT; ++co) acc[b][co] += v * w[co];
            }
            w += COUT;
        }
        for (int b = 0; b < PB; ++b) {
            double* dst = out + (i + b) * COUT;
            if (accumulate)
                for (int co = 0; co < COUT; ++co) dst[co] += acc[b][co];
            else
                for (int co = 0; co < COUT; ++co) dst[co] = acc[b][co];
        }
    }
    for (; i < n; ++i) {
        double acc[COUT];
        for (int co = 0; co < COUT; ++co) acc[co] = bias ? bias[co] : 0.0;
        const double* src = in + i * Cin;
        const double* w = W;
        for (std::int64_t ci = 0; ci < Cin; ++ci) {
            const double v = src[ci];
            for (int co = 0; co < COUT; ++co) acc[co] += v * w[co];
            w += COUT;
        }
        double* dst = out + i * COUT;
        if (accumulate)
            for (int co = 0; co < COUT; ++co) dst[co] += acc[co];
        else
            for (int co = 0; co < COUT; ++co) dst[co] = acc[co];
    }
}

// Batch-axis blocking: SB positions along S share the whole tap geometry, so
// one weight walk feeds SB independent accumulator sets. Per-output
// accumulation order matches the scalar path exactly.
template <int COUT, int SB>
void conv_sblock(const double* __restrict in, const Plane& pi, std::int64_t Cin,
                 const double* __restrict W, const double* __restrict bias,
                 double* __restrict out, const Plane& po, int k, bool accumulate) {
    const int h = k / 2;
    for (std::int64_t r = 0; r < pi.R; ++r) {
        std::int64_t s = 0;
        for (; s + SB <= pi.S; s += SB) {
            const std::int64_t bi = r * pi.sR + s * pi.sS;
            const std::int64_t bo = r * po.sR + s * po.sS;
            for (std::int64_t p = 0; p < pi.P; ++p) {
                const std::int64_t dp0 = h - p > 0 ? h - p : 0;
                const std::int64_t dp1 = std::min<std::int64_t>(k - 1, pi.P - 1 - p + h);
                for (std::int64_t q = 0; q < pi.Q; ++q) {
                    const std::int64_t dq0 = h - q > 0 ? h - q : 0;
                    const std::int64_t dq1 = std::min<std::int64_t>(k - 1, pi.Q - 1 - q + h);
                    double acc[SB][COUT];
                    for (int b = 0; b < SB; ++b)
                        for (int co = 0; co < COUT; ++co) acc[b][co] = bias ? bias[co] : 0.0;
                    for (std::int64_t dp = dp0; dp <= dp1; ++dp) {
                        const double* row = in + bi + (p + dp - h) * pi.sP;
                        const double* wrow = W + (dp * k + dq0) * Cin * COUT;
                        for (std::int64_t dq = dq0; dq <= dq1; ++dq) {
                            const double* src = row + (q + dq - h) * pi.sQ;
                            const double* w = wrow;
                            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                                for (int b = 0; b < SB; ++b) {
                                    const double v = src[b * pi.sS + ci];
                                    for (int co = 0; co < COUT; ++co) acc[b][co] += v * w[co];
                                }
                                w += COUT;
                            }
                            wrow += Cin * COUT;
                        }
                    }
                    for (int b = 0; b < SB; ++b) {
                        double* dst = out + bo + b * po.sS + p * po.sP + q * po.sQ;
                        if (accumulate)
                            for (int co = 0; co < COUT; ++co) dst[co] += acc[b][co];
                        else
                            for (int co = 0; co < COUT; ++co) dst[co] = acc[b][co];
                    }
                }
            }
        }
        for (; s < pi.S; ++s) {
            const std::int64_t bi = r * pi.sR + s * pi.sS;
            const std::int64_t bo = r * po.sR + s * po.sS;
            for (std::int64_t p = 0; p < pi.P; ++p)
                for (std::int64_t q = 0; q < pi.Q; ++q)
                    conv_one_px<COUT>(in, bi, bo, p, q, pi, po, Cin, W, bias, out, k,
                                      accumulate);
        }
    }
}

// Output-axis blocking along Q for planes whose batch axes are too small to
// block: QB interior positions share full tap ranges. Boundary columns go
// through the scalar body.
template <int COUT, int QB>
void conv_qblock(const double* __restrict in, const Plane& pi, std::int64_t Cin,
                 const double* __restrict W, const double* __restrict bias,
                 double* __restrict out, const Plane& po, int k, bool accumulate) {
    const int h = k / 2;
    for (std::int64_t r = 0; r < pi.R; ++r)
        for (std::int64_t s = 0; s < pi.S; ++s) {
            const std::int64_t bi = r * pi.sR + s * pi.sS;
            const std::int64_t bo = r * po.sR + s * po.sS;
            for (std::int64_t p = 0; p < pi.P; ++p) {
                const std::int64_t dp0 = h - p > 0 ? h - p : 0;
                const std::int64_t dp1 = std::min<std::int64_t>(k - 1, pi.P - 1 - p + h);
                std::int64_t q = 0;
                for (; q < h && q < pi.Q; ++q)
                    conv_one_px<COUT>(in, bi, bo, p, q, pi, po, Cin, W, bias, out, k,
                                      accumulate);
                while (q + QB - 1 + h < pi.Q) {
                    double acc[QB][COUT];
                    for (int b = 0; b < QB; ++b)
                        for (int co = 0; co < COUT; ++co) acc[b][co] = bias ? bias[co] : 0.0;
                    for (std::int64_t dp = dp0; dp <= dp1; ++dp) {
                        const double* row = in + bi + (p + dp - h) * pi.sP;
                        const double* w = W + (dp * k) * Cin * COUT;
                        for (std::int64_t dq = 0; dq < k; ++dq) {
                            const double* src = row + (q + dq - h) * pi.sQ;
                            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                                for (int b = 0; b < QB; ++b) {
                                    const double v = src[b * pi.sQ + ci];
                                    for (int co = 0; co < COUT; ++co) acc[b][co] += v * w[co];
                                }
                                w += COUT;
                            }
                        }
                    }
                    for (int b = 0; b < QB; ++b) {
                        double* dst = out + bo + p * po.sP + (q + b) * po.sQ;
                        if (accumulate)
                            for (int co = 0; co < COUT; ++co) dst[co] += acc[b][co];
                        else
                            for (int co = 0; co < COUT; ++co) dst[co] = acc[b][co];
                    }
                    q += QB;
                }
                for (; q < pi.Q; ++q)
                    conv_one_px<COUT>(in, bi, bo, p, q, pi, po, Cin, W, bias, out, k,
                                      accumulate);
            }
        }
}

template <int COUT>
void conv_dispatch(const double* in, const Plane& pi, std::int64_t Cin, const double* W,
                   const double* bias, double* out, const Plane& po, int k,
                   bool accumulate) {
    constexpr int SB = COUT <= 16 ? 8 : (COUT <= 32 ? 4 : 2);
    if (k == 1 && plane_compact(pi, Cin) && plane_compact(po, COUT)) {
        conv1x1_flat<COUT>(in, pi.P * pi.Q * pi.R * pi.S, Cin, W, bias, out, accumulate);
    } else if (pi.S >= SB) {
        conv_sblock<COUT, SB>(in, pi, Cin, W, bias, out, po, k, accumulate);
    } else if (pi.Q >= 2 * SB) {
        conv_qblock<COUT, SB>(in, pi, Cin, W, bias, out, po, k, accumulate);
    } else {
        conv_plane_fixed<COUT>(in, pi, Cin, W, bias, out, po, k, accumulate);
    }
}

}  // namespace

template <int COUT>
void grad_w_fixed(const double* in, const Plane& pi, std::int64_t Cin,
                  const double* gout, const Plane& po, int k, double* gW, double* gb) {
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
                    const double* g = gout + bo + p * po.sP + q * po.sQ;
                    for (int co = 0; co < COUT; ++co) gb[co] += g[co];
                    for (std::int64_t dp = dp0; dp <= dp1; ++dp) {
                        const double* row = in + bi + (p + dp - h) * pi.sP;
                        for (std::int64_t dq = dq0; dq <= dq1; ++dq) {
                            const double* src = row + (q + dq - h) * pi.sQ;
                            double* gw = gW + ((dp * k + dq) * Cin) * COUT;
                            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                                const double v = src[ci];
                                for (int co = 0; co < COUT; ++co) gw[co] += v * g[co];
                                gw += COUT;
                            }
                        }
                    }
                }
            }
        }
}

void grad_w_generic(const double* in, const Plane& pi, std::int64_t Cin,
                    const double* gout, const Plane& po, std::int64_t Cout, int k,
                    double* gW, double* gb) {
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
                    const double* g = gout + bo + p * po.sP + q * po.sQ;
                    for (std::int64_t co = 0; co < Cout; ++co) gb[co] += g[co];
                    for (std::int64_t dp = dp0; dp <= dp1; ++dp) {
                        const double* row = in + bi + (p + dp - h) * pi.sP;
                        for (std::int64_t dq = dq0; dq <= dq1; ++dq) {
                            const double* src = row + (q + dq - h) * pi.sQ;
                            double* gw = gW + ((dp * k + dq) * Cin) * Cout;
                            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                                const double v = src[ci];
                                for (std::int64_t co = 0; co < Cout; ++co) gw[co] += v * g[co];
                                gw += Cout;
                            }
                        }
                    }
                }
            }
        }
}

}  // namespace detail

void conv_plane(const double* in, const Plane& pi, std::int64_t Cin, const double* W,
                const double* bias, std::int64_t Cout, double* out, const Plane& po,
                int k, bool accumulate) {
    using namespace detail;
    switch (Cout) {
        case 1: conv_dispatch<1>(in, pi, Cin, W, bias, out, po, k, accumulate); break;
        case 3: conv_dispatch<3>(in, pi, Cin, W, bias, out, po, k, accumulate); break;
        case 4: conv_dispatch<4>(in, pi, Cin, W, bias, out, po, k, accumulate); break;
        case 8: conv_dispatch<8>(in, pi, Cin, W, bias, out, po, k, accumulate); break;
        case 16: conv_dispatch<16>(in, pi, Cin, W, bias, out, po, k, accumulate); break;
        case 32: conv_dispatch<32>(in, pi, Cin, W, bias, out, po, k, accumulate); break;
        case 64: conv_dispatch<64>(in, pi, Cin, W, bias, out, po, k, accumulate); break;
        default: conv_plane_generic(in, pi, Cin, W, bias, Cout, out, po, k, accumulate);
    }
}

void conv_plane_grad_w(const double* in, const Plane& pi, std::int64_t Cin,
                       const double* gout, const Plane& po, std::int64_t Cout, int k,
                       double* gW, double* gb) {
    using namespace detail;
    switch (Cout) {
        case 1: grad_w_fixed<1>(in, pi, Cin, gout, po, k, gW, gb); break;
        case 3: grad_w_fixed<3>(in, pi, Cin, gout, po, k, gW, gb); break;
        case 4: grad_w_fixed<4>(in, pi, Cin, gout, po, k, gW, gb); break;
        case 8: grad_w_fixed<8>(in, pi, Cin, gout, po, k, gW, gb); break;
        case 16: grad_w_fixed<16>(in, pi, Cin, gout, po, k, gW, gb); break;
        case 32: grad_w_fixed<32>(in, pi, Cin, gout, po, k, gW, gb); break;
        case 64: grad_w_fixed<64>(in, pi, Cin, gout, po, k, gW, gb); break;
        default: grad_w_generic(in, pi, Cin, gout, po, Cout, k, gW, gb);
    }
}

std::vector<double> flip_transpose_w(const double* W, int k, std::int64_t Cin,
                                     std::int64_t Cout) {
    std::vector<double> out(static_cast<std::size_t>(k) * k * Cin * Cout);
    for (int dp = 0; dp < k; ++dp)
        for (int dq = 0; dq < k; ++dq)
            for (std::int64_t ci = 0; ci < Cin; ++ci)
                for (std::int64_t co = 0; co < Cout; ++co)
                    out[(((dp * k + dq) * Cout + co) * Cin) + ci] =
                        W[(((k - 1 - dp) * k + (k - 1 - dq)) * Cin + ci) * Cout + co];
    return out;
}

void conv_plane_grad_in(const double* gout, const Plane& po, std::int64_t Cout,
                        const double* W, std::int64_t Cin, double* gin,
                        const Plane& pi, int k) {
    const std::vector<double> wt = flip_transpose_w(W, k, Cin, Cout);
    conv_plane(gout, po, Cout, wt.data(), nullptr, Cin, gin, pi, k, true);
}

}  // namespace lfrr::kern
