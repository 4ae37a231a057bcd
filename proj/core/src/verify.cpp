#include "lfrr/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "lfrr/blocks.hpp"
#include "lfrr/light_field.hpp"
#include "lfrr/losses.hpp"
#include "lfrr/resample.hpp"
#include "lfrr/rng.hpp"
#include "lfrr/synth.hpp"

namespace lfrr {

namespace {

Tensor rnd_tensor(Shape s, Rng& rng, double lo, double hi) {
    Tensor t(std::move(s));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

LightField rnd_lf(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
                  std::int64_t C, Rng& rng, double lo = 0.02, double hi = 0.98) {
    std::vector<double> d(static_cast<std::size_t>(U * V * X * Y * C));
    for (auto& x : d) x = rng.uniform(lo, hi);
    return LightField(U, V, X, Y, C, std::move(d));
}

// In-range positions whose fractional parts stay at least `margin` from the
// cell boundaries, so finite differences never straddle an interpolation
// kink.
Tensor rnd_positions(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y,
                     Rng& rng, double margin = 0.15) {
    Tensor P(Shape{U, V, X, Y, 4});
    const std::int64_t dims[4] = {U, V, X, Y};
    std::int64_t i = 0;
    for (std::int64_t n = 0; n < U * V * X * Y; ++n)
        for (int a = 0; a < 4; ++a) {
            const std::int64_t cells = dims[a] - 1;
            if (cells == 0) {
                P[i++] = 0.0;
            } else {
                const std::int64_t cell = static_cast<std::int64_t>(rng.below(cells));
                P[i++] = static_cast<double>(cell) +
                         rng.uniform(margin, 1.0 - margin);
            }
        }
    return P;
}

// Keeps elementwise inputs away from the leaky-relu kink and the mae sign
// flip: magnitudes at least `gap`.
Tensor rnd_away_from_zero(Shape s, Rng& rng, double gap, double hi) {
    Tensor t(std::move(s));
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        const double m = rng.uniform(gap, hi);
        t[i] = rng.coin() ? m : -m;
    }
    return t;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

PropertyResult check_interp_identity(int n_fields, std::uint64_t seed) {
    Rng rng(seed, 0x1D);
    PropertyResult r{"interp_identity", 0.0, 0.0, true, ""};
    int exact = 0;
    for (int i = 0; i < n_fields; ++i) {
        const std::int64_t U = 1 + static_cast<std::int64_t>(rng.below(3));
        const std::int64_t V = 1 + static_cast<std::int64_t>(rng.below(3));
        const std::int64_t X = 4 + static_cast<std::int64_t>(rng.below(21));
        const std::int64_t Y = 4 + static_cast<std::int64_t>(rng.below(21));
        const std::int64_t C = rng.coin() ? 3 : 1;
        const LightField I = rnd_lf(U, V, X, Y, C, rng, 0.0, 1.0);
        const Tensor P0 = init_positions(U, V, X, Y);
        const LightField out = interpolate_4d(I, P0);
        const bool same = out.data().size() == I.data().size() &&
                          std::memcmp(out.data().data(), I.data().data(),
                                      I.data().size() * sizeof(double)) == 0;
        if (same) ++exact;
        r.measured = std::max(r.measured, max_abs_diff(out.data(), I.data()));
        r.pass = r.pass && same;
    }
    r.detail = std::to_string(exact) + "/" + std::to_string(n_fields) + " bit-exact";
    return r;
}

PropertyResult check_order_invariance(int n_cases, std::uint64_t seed) {
    Rng rng(seed, 0x0E);
    PropertyResult r{"order_invariance", 0.0, 1e-12, true, ""};
    for (int i = 0; i < n_cases; ++i) {
        const std::int64_t U = 2 + static_cast<std::int64_t>(rng.below(2));
        const std::int64_t V = 2 + static_cast<std::int64_t>(rng.below(2));
        const std::int64_t X = 6 + static_cast<std::int64_t>(rng.below(11));
        const std::int64_t Y = 6 + static_cast<std::int64_t>(rng.below(11));
        const LightField I = rnd_lf(U, V, X, Y, 3, rng, 0.0, 1.0);
        Tensor P(Shape{U, V, X, Y, 4});
        const std::int64_t dims[4] = {U, V, X, Y};
        for (std::int64_t n = 0; n < P.numel(); ++n)
            P[n] = rng.uniform(-1.0, static_cast<double>(dims[n % 4]));
        P = clamp_positions(P, U, V, X, Y);
        const LightField a = interpolate_4d(I, P);
        const LightField sp = interpolate_4d_spatial_first(I, P);
        const LightField an = interpolate_4d_angular_first(I, P);
        r.measured = std::max(r.measured, max_abs_diff(sp.data(), an.data()));
        r.measured = std::max(r.measured, max_abs_diff(a.data(), sp.data()));
        r.measured = std::max(r.measured, max_abs_diff(a.data(), an.data()));
    }
    r.pass = r.measured <= r.bound;
    r.detail = std::to_string(n_cases) + " fields";
    return r;
}

PropertyResult check_partition_of_unity(std::int64_t min_positions, std::uint64_t seed) {
    Rng rng(seed, 0x9A);
    PropertyResult r{"partition_of_unity", 0.0, 1e-12, true, ""};
    const std::int64_t U = 3, V = 3;
    std::int64_t XY = (min_positions + U * V - 1) / (U * V);
    std::int64_t X = 1;
    while (X * X < XY) ++X;
    const std::int64_t Y = (XY + X - 1) / X;
    const LightField ones(U, V, X, Y, 1,
                          std::vector<double>(static_cast<std::size_t>(U * V * X * Y), 1.0));
    Tensor P(Shape{U, V, X, Y, 4});
    const std::int64_t dims[4] = {U, V, X, Y};
    for (std::int64_t n = 0; n < P.numel(); ++n)
        P[n] = rng.uniform(-1.0, static_cast<double>(dims[n % 4]));
    P = clamp_positions(P, U, V, X, Y);
    const LightField out = interpolate_4d(ones, P);
    for (double v : out.data()) r.measured = std::max(r.measured, std::fabs(v - 1.0));
    r.pass = r.measured <= r.bound;
    r.detail = std::to_string(U * V * X * Y) + " positions";
    return r;
}

PropertyResult check_planar_warp(std::uint64_t seed) {
    PropertyResult r{"planar_warp", 0.0, 1e-5, true, ""};
    const std::int64_t U = 3, V = 3, X = 32, Y = 32;
    const double cases[][3] = {
        {0.4, 0.5, 0.25}, {1.0, -0.6, 0.35}, {1.7, 1.0, -0.5}, {0.8, -0.45, -0.8},
    };
    int idx = 0;
    for (const auto& cs : cases) {
        const double d = cs[0], du = cs[1], dv = cs[2];
        SceneSpec spec;
        spec.seed = seed + idx;
        spec.U = U; spec.V = V; spec.X = X; spec.Y = Y;
        PlaneSpec plane;
        plane.d_bg = d;
        plane.texture.kind = TextureKind::ramp;
        plane.texture.color_a = {0.45, 0.5, 0.4};
        plane.texture.grad_x = {0.004, -0.003, 0.002};
        plane.texture.grad_y = {-0.002, 0.0035, 0.0045};
        spec.background.push_back(plane);
        const LightField I = synth_background(spec);
        const Tensor off = planar_warp_offsets(d, du, dv, U, V, X, Y);
        Tensor P = init_positions(U, V, X, Y);
        for (std::int64_t i = 0; i < P.numel(); ++i) P[i] += off[i];
        P = clamp_positions(P, U, V, X, Y);
        const LightField out = interpolate_4d(I, P);
        const auto lo = [](double delta) {
            return static_cast<std::int64_t>(std::ceil(std::max(0.0, -delta)));
        };
        const std::int64_t u0 = lo(du), u1 = U - 1 - lo(-du);
        const std::int64_t v0 = lo(dv), v1 = V - 1 - lo(-dv);
        const std::int64_t x0 = lo(d * du), x1 = X - 1 - lo(-d * du);
        const std::int64_t y0 = lo(d * dv), y1 = Y - 1 - lo(-d * dv);
        for (std::int64_t u = u0; u <= u1; ++u)
            for (std::int64_t v = v0; v <= v1; ++v)
                for (std::int64_t x = x0; x <= x1; ++x)
                    for (std::int64_t y = y0; y <= y1; ++y)
                        for (std::int64_t c = 0; c < 3; ++c)
                            r.measured = std::max(
                                r.measured,
                                std::fabs(out.at(u, v, x, y, c) - I.at(u, v, x, y, c)));
        ++idx;
    }
    r.pass = r.measured <= r.bound;
    r.detail = std::to_string(idx) + " warps";
    return r;
}

PropertyResult check_oracle_recovery(int n_scenes, std::uint64_t seed) {
    PropertyResult r{"oracle_recovery", 0.0, 2.0 / 255.0, true, ""};
    const auto pairs = make_dataset(n_scenes, 3, 3, 48, 48, seed);
    double err_sum = 0.0;
    std::int64_t err_n = 0;
    std::int64_t skipped = 0;
    for (const auto& pair : pairs) {
        const OracleOffsets oracle = oracle_offsets(pair);
        const std::int64_t U = pair.clean.U(), V = pair.clean.V();
        const std::int64_t X = pair.clean.X(), Y = pair.clean.Y();
        Tensor P = init_positions(U, V, X, Y);
        for (std::int64_t i = 0; i < P.numel(); ++i) P[i] += oracle.offsets[i];
        P = clamp_positions(P, U, V, X, Y);
        const LightField rec = interpolate_4d(pair.degraded, P);
        double blur = 0.0;
        for (const auto& drop : pair.spec.raindrops) blur = std::max(blur, drop.blur);
        // stay one blur width inside the mask edge, where the 0.5 threshold
        // is unambiguous
        const std::int64_t er = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::ceil(blur)));
        for (std::int64_t u = 0; u < U; ++u)
            for (std::int64_t v = 0; v < V; ++v)
                for (std::int64_t x = 0; x < X; ++x)
                    for (std::int64_t y = 0; y < Y; ++y) {
                        if (pair.mask.at(u, v, x, y, 0) < 0.5) continue;
                        if (oracle.unreachable[static_cast<std::size_t>(
                                ((u * V + v) * X + x) * Y + y)]) {
                            ++skipped;
                            continue;
                        }
                        bool interior = x >= er && x + er < X && y >= er && y + er < Y;
                        for (std::int64_t dx = -er; interior && dx <= er; ++dx)
                            for (std::int64_t dy = -er; interior && dy <= er; ++dy)
                                if (pair.mask.at(u, v, x + dx, y + dy, 0) < 0.5)
                                    interior = false;
                        if (!interior) continue;
                        for (std::int64_t c = 0; c < 3; ++c) {
                            err_sum += std::fabs(rec.at(u, v, x, y, c) -
                                                 pair.clean.at(u, v, x, y, c));
                            ++err_n;
                        }
                    }
    }
    r.measured = err_n > 0 ? err_sum / static_cast<double>(err_n) : 0.0;
    r.pass = err_n > 0 && r.measured <= r.bound;
    r.detail = std::to_string(err_n / 3) + " px, " + std::to_string(skipped) +
               " unreachable";
    return r;
}

namespace {

struct SuiteItem {
    std::string name;
    double tol_scale = 1.0;
    std::int64_t probes = 24;
    // builds inputs for one draw and the graph over them
    std::function<std::vector<Tensor>(Rng&)> inputs;
    GraphFn graph;
};

// Mirrors visit_params order for an M=N=1 model: lift, branch x4, fuse,
// head.c1, head.c2 | init, branch x4, fuse, attn_i, attn_o, squeeze, excite,
// head1, head2 (weight then bias each).
std::vector<Tensor> collect_params(ModelParams& p) {
    std::vector<Tensor> out;
    visit_params(p, [&](const std::string&, Tensor& t) { out.push_back(t); });
    return out;
}

RsmVars rsm_vars_from(const std::vector<Var>& v, std::size_t& i) {
    RsmVars r;
    r.lift = {v[i], v[i + 1]}; i += 2;
    MdfbVars m;
    for (int br = 0; br < 4; ++br) { m.branch[br] = {v[i], v[i + 1]}; i += 2; }
    m.fuse = {v[i], v[i + 1]}; i += 2;
    r.mdfbs.push_back(m);
    r.head.c1 = {v[i], v[i + 1]}; i += 2;
    r.head.c2 = {v[i], v[i + 1]}; i += 2;
    r.head.mid_act = true;
    return r;
}

RmVars rm_vars_from(const std::vector<Var>& v, std::size_t& i) {
    RmVars r;
    r.init = {v[i], v[i + 1]}; i += 2;
    DgebVars d;
    for (int br = 0; br < 4; ++br) { d.h.branch[br] = {v[i], v[i + 1]}; i += 2; }
    d.h.fuse = {v[i], v[i + 1]}; i += 2;
    d.attn_i = {v[i], v[i + 1]}; i += 2;
    d.attn_o = {v[i], v[i + 1]}; i += 2;
    r.dgebs.push_back(d);
    r.seb.squeeze = {v[i], v[i + 1]}; i += 2;
    r.seb.excite = {v[i], v[i + 1]}; i += 2;
    r.head1 = {v[i], v[i + 1]}; i += 2;
    r.head2 = {v[i], v[i + 1]}; i += 2;
    return r;
}

std::vector<SuiteItem> build_suite() {
    std::vector<SuiteItem> items;
    const ModelConfig tiny{4, 1, 1, 2, true};

    for (int plane = 0; plane < 4; ++plane) {
        items.push_back(
            {std::string("conv_") + plane_name(static_cast<ConvPlane>(plane)), 1.0, 24,
             [](Rng& rng) {
                 return std::vector<Tensor>{rnd_tensor(Shape{2, 3, 4, 5, 3}, rng, -1, 1),
                                            rnd_tensor(Shape{3, 3, 3, 2}, rng, -0.5, 0.5),
                                            rnd_tensor(Shape{2}, rng, -0.1, 0.1)};
             },
             [plane](Tape& t, const std::vector<Var>& v) {
                 return t.reduce_mean(
                     t.axis_conv(v[0], v[1], v[2], static_cast<ConvPlane>(plane)));
             }});
    }

    items.push_back({"pointwise_leaky_relu", 1.0, 32,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_away_from_zero(Shape{2, 2, 4, 4, 3}, rng, 0.05, 1.0)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.pointwise(v[0], Pointwise::leaky_relu));
                     }});
    items.push_back({"pointwise_sigmoid", 1.0, 32,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 4, 4, 3}, rng, -2, 2)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.pointwise(v[0], Pointwise::sigmoid));
                     }});
    items.push_back({"pointwise_identity", 1.0, 16,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 4, 4, 3}, rng, -2, 2)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.pointwise(v[0], Pointwise::identity));
                     }});

    const Shape ew{2, 2, 3, 3, 4};
    items.push_back({"add", 1.0, 24,
                     [ew](Rng& rng) {
                         return std::vector<Tensor>{rnd_tensor(ew, rng, -1, 1),
                                                    rnd_tensor(ew, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.add(v[0], v[1]));
                     }});
    items.push_back({"sub", 1.0, 24,
                     [ew](Rng& rng) {
                         return std::vector<Tensor>{rnd_tensor(ew, rng, -1, 1),
                                                    rnd_tensor(ew, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.sub(v[0], v[1]));
                     }});
    items.push_back({"mul", 1.0, 24,
                     [ew](Rng& rng) {
                         return std::vector<Tensor>{rnd_tensor(ew, rng, -1, 1),
                                                    rnd_tensor(ew, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.mul(v[0], v[1]));
                     }});
    items.push_back({"mul_channel_gate", 1.0, 24,
                     [ew](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(ew, rng, -1, 1),
                             rnd_tensor(Shape{2, 2, 3, 3, 1}, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.mul(v[0], v[1]));
                     }});
    items.push_back({"mul_view_gain", 1.0, 24,
                     [ew](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(ew, rng, -1, 1),
                             rnd_tensor(Shape{2, 2, 4}, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.mul(v[0], v[1]));
                     }});
    items.push_back({"scale", 1.0, 24,
                     [ew](Rng& rng) {
                         return std::vector<Tensor>{rnd_tensor(ew, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.scale(v[0], -0.7));
                     }});
    items.push_back({"reduce_mean", 1.0, 24,
                     [ew](Rng& rng) {
                         return std::vector<Tensor>{rnd_tensor(ew, rng, -2, 2)};
                     },
                     [](Tape& t, const std::vector<Var>& v) { return t.reduce_mean(v[0]); }});
    items.push_back({"concat_channels", 1.0, 24,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 3, 3, 2}, rng, -1, 1),
                             rnd_tensor(Shape{2, 2, 3, 3, 3}, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.concat_channels(v[0], v[1]));
                     }});
    items.push_back({"global_avg_pool", 1.0, 24,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 4, 4, 3}, rng, -1, 1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.global_avg_pool_spatial(v[0]));
                     }});
    items.push_back({"affine", 1.0, 24,
                     [](Rng& rng) {
                         return std::vector<Tensor>{rnd_tensor(Shape{2, 2, 5}, rng, -1, 1),
                                                    rnd_tensor(Shape{5, 3}, rng, -0.6, 0.6),
                                                    rnd_tensor(Shape{3}, rng, -0.1, 0.1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.affine(v[0], v[1], v[2]));
                     }});
    items.push_back({"clamp_positions", 1.0, 24,
                     [](Rng& rng) {
                         return std::vector<Tensor>{rnd_positions(2, 2, 4, 4, rng)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.clamp_positions(v[0], 2, 2, 4, 4));
                     }});
    // one graph, both adjoints: v[0] checks grad_I, v[1] checks grad_P
    items.push_back({"interp_4d", 1.0, 32,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 5, 5, 2}, rng, 0.0, 1.0),
                             rnd_positions(2, 2, 5, 5, rng)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.reduce_mean(t.interpolate_4d(v[0], v[1]));
                     }});

    items.push_back({"loss_mae", 1.0, 24,
                     [](Rng& rng) {
                         Tensor gt = rnd_tensor(Shape{2, 2, 6, 6, 3}, rng, 0.1, 0.9);
                         Tensor delta = rnd_away_from_zero(Shape{2, 2, 6, 6, 3}, rng,
                                                           0.02, 0.08);
                         Tensor pred = gt;
                         pred.data = std::make_shared<std::vector<double>>(*gt.data);
                         for (std::int64_t i = 0; i < pred.numel(); ++i)
                             pred[i] += delta[i];
                         return std::vector<Tensor>{pred, gt};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.loss_mae(v[0], v[1]);
                     }});
    items.push_back({"loss_ssim", 10.0, 16,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 12, 12, 3}, rng, 0.05, 0.95),
                             rnd_tensor(Shape{2, 2, 12, 12, 3}, rng, 0.05, 0.95)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.loss_ssim(v[0], v[1]);
                     }});
    items.push_back({"loss_epi", 1.0, 24,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 8, 8, 3}, rng, 0.05, 0.95),
                             rnd_tensor(Shape{2, 2, 8, 8, 3}, rng, 0.05, 0.95)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         return t.loss_epi(v[0], v[1]);
                     }});

    items.push_back(
        {"mdfb", 1.0, 16,
         [tiny](Rng& rng) {
             ModelParams p = init_model_params(tiny, rng.below(1u << 30));
             std::vector<Tensor> in{rnd_tensor(Shape{2, 2, 4, 4, 4}, rng, -1, 1)};
             for (auto& br : p.rsm.mdfbs[0].branch) {
                 in.push_back(br.w);
                 in.push_back(br.b);
             }
             in.push_back(p.rsm.mdfbs[0].fuse.w);
             in.push_back(p.rsm.mdfbs[0].fuse.b);
             return in;
         },
         [](Tape& t, const std::vector<Var>& v) {
             MdfbVars m;
             std::size_t i = 1;
             for (int br = 0; br < 4; ++br) { m.branch[br] = {v[i], v[i + 1]}; i += 2; }
             m.fuse = {v[i], v[i + 1]};
             return t.reduce_mean(mdfb_forward(t, v[0], m));
         }});
    items.push_back({"seb", 1.0, 24,
                     [](Rng& rng) {
                         return std::vector<Tensor>{
                             rnd_tensor(Shape{2, 2, 4, 4, 4}, rng, -1, 1),
                             rnd_tensor(Shape{4, 2}, rng, -0.5, 0.5),
                             rnd_tensor(Shape{2}, rng, -0.1, 0.1),
                             rnd_tensor(Shape{2, 4}, rng, -0.5, 0.5),
                             rnd_tensor(Shape{4}, rng, -0.1, 0.1)};
                     },
                     [](Tape& t, const std::vector<Var>& v) {
                         SebVars s{{v[1], v[2]}, {v[3], v[4]}};
                         return t.reduce_mean(seb_forward(t, v[0], s));
                     }});
    items.push_back(
        {"dgeb", 1.0, 12,
         [tiny](Rng& rng) {
             ModelParams p = init_model_params(tiny, rng.below(1u << 30));
             std::vector<Tensor> in{rnd_tensor(Shape{2, 2, 4, 4, 4}, rng, -1, 1),
                                    rnd_tensor(Shape{2, 2, 4, 4, 4}, rng, -1, 1)};
             auto& d = p.rm.dgebs[0];
             for (auto& br : d.h.branch) {
                 in.push_back(br.w);
                 in.push_back(br.b);
             }
             in.push_back(d.h.fuse.w);
             in.push_back(d.h.fuse.b);
             in.push_back(d.attn_i.w);
             in.push_back(d.attn_i.b);
             in.push_back(d.attn_o.w);
             in.push_back(d.attn_o.b);
             return in;
         },
         [](Tape& t, const std::vector<Var>& v) {
             DgebVars d;
             std::size_t i = 2;
             for (int br = 0; br < 4; ++br) { d.h.branch[br] = {v[i], v[i + 1]}; i += 2; }
             d.h.fuse = {v[i], v[i + 1]}; i += 2;
             d.attn_i = {v[i], v[i + 1]}; i += 2;
             d.attn_o = {v[i], v[i + 1]};
             auto [x, y] = dgeb_forward(t, v[0], v[1], d);
             return t.add(t.reduce_mean(x), t.scale(t.reduce_mean(y), 0.7));
         }});

    // Assembled model, stage-1 loss. The offset head is biased off its zero
    // init so sample positions sit a fixed distance inside interpolation
    // cells; near-integer positions would make weight-space differences
    // straddle the gather's cell boundary.
    items.push_back(
        {"model_end_to_end", 10.0, 10,
         [tiny](Rng& rng) {
             ModelParams p = init_model_params(tiny, rng.below(1u << 30));
             for (auto& x : *p.rsm.head.c2.w.data) x = rng.uniform(-0.05, 0.05);
             const double push[4] = {0.37, -0.41, 0.33, -0.29};
             for (int c = 0; c < 4; ++c) (*p.rsm.head.c2.b.data)[c] = push[c];
             std::vector<Tensor> in{
                 rnd_tensor(Shape{2, 2, 12, 12, 3}, rng, 0.05, 0.95),
                 rnd_tensor(Shape{2, 2, 12, 12, 3}, rng, 0.05, 0.95)};
             std::vector<Tensor> params = collect_params(p);
             in.insert(in.end(), params.begin(), params.end());
             return in;
         },
         [](Tape& t, const std::vector<Var>& v) {
             std::size_t i = 2;
             RsmVars rsm = rsm_vars_from(v, i);
             RmVars rm = rm_vars_from(v, i);
             const AblationConfig ab;
             RsmOut ro = rsm_forward(t, v[0], rsm, ab);
             Var of = rm_forward(t, v[0], ro.o_i, rm, ab);
             const LossWeights w{0.3, 0.2, 0.5};
             return loss_stage(t, 1, ro.o_i, of, v[1], w);
         }});

    return items;
}

}  // namespace

std::vector<OpCheck> gradcheck_suite(double tol, int seeds, std::uint64_t seed) {
    const auto items = build_suite();
    std::vector<OpCheck> out;
    out.reserve(items.size());
    for (std::size_t idx = 0; idx < items.size(); ++idx) {
        const auto& item = items[idx];
        OpCheck oc;
        oc.name = item.name;
        oc.tol = tol * item.tol_scale;
        oc.report.pass = true;
        for (int s = 0; s < seeds; ++s) {
            Rng rng(seed + 1000 * idx + s, 0x6C);
            const std::vector<Tensor> inputs = item.inputs(rng);
            const GradCheckReport rep =
                grad_check(item.graph, inputs, oc.tol, item.probes, seed + 31 * s);
            oc.report.max_rel_err = std::max(oc.report.max_rel_err, rep.max_rel_err);
            oc.report.pass = oc.report.pass && rep.pass;
            oc.report.coords_checked += rep.coords_checked;
            oc.report.coords_skipped += rep.coords_skipped;
        }
        out.push_back(std::move(oc));
    }
    return out;
}

std::vector<PropertyResult> run_selftest(std::uint64_t seed) {
    std::vector<PropertyResult> out;
    out.push_back(check_interp_identity(20, seed));
    out.push_back(check_order_invariance(20, seed + 1));
    out.push_back(check_partition_of_unity(100000, seed + 2));
    out.push_back(check_planar_warp(seed + 3));
    out.push_back(check_oracle_recovery(4, seed + 4));

    const auto checks = gradcheck_suite(1e-5, 2, seed + 5);
    PropertyResult g{"gradient_checks", 0.0, 1e-5, true, ""};
    const OpCheck* worst = nullptr;
    for (const auto& c : checks) {
        // normalize against per-item tolerance so one bound covers the rollup
        const double rel = c.report.max_rel_err * (1e-5 / c.tol);
        if (rel > g.measured) {
            g.measured = rel;
            worst = &c;
        }
        g.pass = g.pass && c.report.pass;
    }
    g.detail = std::to_string(checks.size()) + " graphs, worst " +
               (worst ? worst->name : "none");
    out.push_back(g);
    return out;
}

std::string property_line(const PropertyResult& r) {
    std::string s = r.name + ": measured=" + fmt_g(r.measured) +
                    " bound=" + fmt_g(r.bound) + (r.pass ? " PASS" : " FAIL");
    if (!r.detail.empty()) s += " (" + r.detail + ")";
    return s;
}

std::string opcheck_line(const OpCheck& c) {
    return c.name + ": max_rel_err=" + fmt_g(c.report.max_rel_err) +
           " tol=" + fmt_g(c.tol) + " checked=" + std::to_string(c.report.coords_checked) +
           " skipped=" + std::to_string(c.report.coords_skipped) +
           (c.report.pass ? " PASS" : " FAIL");
}

}  // namespace lfrr
