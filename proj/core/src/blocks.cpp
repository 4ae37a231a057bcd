#include "lfrr/blocks.hpp"

#include <cmath>

#include "lfrr/resample.hpp"
#include "lfrr/rng.hpp"

namespace lfrr {

void validate(const ModelConfig& cfg) {
    if (cfg.channels < 4 || cfg.channels % 4 != 0)
        throw InvalidConfig("channel count must be a positive multiple of 4, got " +
                            std::to_string(cfg.channels));
    if (cfg.mdfb_count < 1 || cfg.dgeb_count < 1)
        throw InvalidConfig("block counts must be >= 1");
    if (cfg.se_ratio < 1 || (2 * cfg.channels) % cfg.se_ratio != 0)
        throw InvalidConfig("se_ratio must divide 2*channels, got r=" +
                            std::to_string(cfg.se_ratio) + " for c=" +
                            std::to_string(cfg.channels));
}

void validate(const AblationConfig& ab) {
    if (ab.resample == ResampleMode::none && ab.refine == RefineMode::none)
        throw InvalidConfig(
            "ablation (resample=none, refine=none) degenerates to the identity model");
}

const char* to_string(ResampleMode m) {
    switch (m) {
        case ResampleMode::full_4d: return "full_4d";
        case ResampleMode::spatial_only: return "spatial_only";
        case ResampleMode::angular_only: return "angular_only";
        default: return "none";
    }
}

const char* to_string(RefineMode m) {
    switch (m) {
        case RefineMode::dgeb: return "dgeb";
        case RefineMode::mdfb: return "mdfb";
        default: return "none";
    }
}

ResampleMode resample_mode_from(const std::string& s) {
    if (s == "full_4d") return ResampleMode::full_4d;
    if (s == "spatial_only") return ResampleMode::spatial_only;
    if (s == "angular_only") return ResampleMode::angular_only;
    if (s == "none") return ResampleMode::none;
    throw InvalidConfig("unknown resample mode '" + s + "'");
}

RefineMode refine_mode_from(const std::string& s) {
    if (s == "dgeb") return RefineMode::dgeb;
    if (s == "mdfb") return RefineMode::mdfb;
    if (s == "none") return RefineMode::none;
    throw InvalidConfig("unknown refine mode '" + s + "'");
}

// ---- parameter construction ----

namespace {

ConvParams make_conv(std::int64_t k, std::int64_t cin, std::int64_t cout) {
    return {Tensor(Shape{k, k, cin, cout}, 0.0, true), Tensor(Shape{cout}, 0.0, true)};
}

MdfbParams make_mdfb(std::int64_t c) {
    MdfbParams m;
    for (auto& br : m.branch) br = make_conv(3, c, c / 4);
    m.fuse = make_conv(1, c, c);
    return m;
}

template <class P, class Fn>
void visit_conv(const std::string& prefix, P& p, const Fn& fn) {
    fn(prefix + ".weight", p.w);
    fn(prefix + ".bias", p.b);
}

template <class P, class Fn>
void visit_mdfb(const std::string& prefix, P& p, const Fn& fn) {
    static const char* planes[4] = {"spatial", "angular", "epi_h", "epi_v"};
    for (int i = 0; i < 4; ++i) visit_conv(prefix + ".branch." + planes[i], p.branch[i], fn);
    visit_conv(prefix + ".fuse", p.fuse, fn);
}

template <class P, class Fn>
void visit_all(P& p, const Fn& fn) {
    visit_conv("rsm.lift", p.rsm.lift, fn);
    for (std::size_t i = 0; i < p.rsm.mdfbs.size(); ++i)
        visit_mdfb("rsm.mdfb." + std::to_string(i), p.rsm.mdfbs[i], fn);
    visit_conv("rsm.head.c1", p.rsm.head.c1, fn);
    visit_conv("rsm.head.c2", p.rsm.head.c2, fn);
    visit_conv("rm.init", p.rm.init, fn);
    for (std::size_t i = 0; i < p.rm.dgebs.size(); ++i) {
        const std::string d = "rm.dgeb." + std::to_string(i);
        visit_mdfb(d + ".h", p.rm.dgebs[i].h, fn);
        visit_conv(d + ".attn_i", p.rm.dgebs[i].attn_i, fn);
        visit_conv(d + ".attn_o", p.rm.dgebs[i].attn_o, fn);
    }
    fn("rm.seb.squeeze.weight", p.rm.seb.squeeze.w);
    fn("rm.seb.squeeze.bias", p.rm.seb.squeeze.b);
    fn("rm.seb.excite.weight", p.rm.seb.excite.w);
    fn("rm.seb.excite.bias", p.rm.seb.excite.b);
    visit_conv("rm.head.c1", p.rm.head1, fn);
    visit_conv("rm.head.c2", p.rm.head2, fn);
}

}  // namespace

void visit_params(ModelParams& p, const std::function<void(const std::string&, Tensor&)>& fn) {
    visit_all(p, fn);
}

void visit_params(const ModelParams& p,
                  const std::function<void(const std::string&, const Tensor&)>& fn) {
    visit_all(p, fn);
}

ModelParams init_model_params(const ModelConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    const std::int64_t c = cfg.channels;
    ModelParams p;
    p.cfg = cfg;

    p.rsm.lift = make_conv(3, 3, c);
    p.rsm.mdfbs.resize(static_cast<std::size_t>(cfg.mdfb_count));
    for (auto& m : p.rsm.mdfbs) m = make_mdfb(c);
    p.rsm.head.c1 = make_conv(3, c, c);
    p.rsm.head.c2 = make_conv(3, c, 4);

    p.rm.init = make_conv(3, 3, c);
    p.rm.dgebs.resize(static_cast<std::size_t>(cfg.dgeb_count));
    for (auto& d : p.rm.dgebs) {
        d.h = make_mdfb(c);
        d.attn_i = make_conv(1, c, 1);
        d.attn_o = make_conv(1, c, 1);
    }
    const std::int64_t mid = 2 * c / cfg.se_ratio;
    p.rm.seb.squeeze = {Tensor(Shape{2 * c, mid}, 0.0, true), Tensor(Shape{mid}, 0.0, true)};
    p.rm.seb.excite = {Tensor(Shape{mid, 2 * c}, 0.0, true), Tensor(Shape{2 * c}, 0.0, true)};
    p.rm.head1 = make_conv(3, 2 * c, c);
    p.rm.head2 = make_conv(3, c, 3);

    // Fan-in-scaled uniform weights, zero biases, drawn in visit order so the
    // values depend only on (cfg, seed).
    Rng rng(seed, 0x70617261);
    visit_params(p, [&rng](const std::string& path, Tensor& t) {
        if (path.ends_with(".bias")) return;
        std::int64_t fan_in = 0;
        if (t.shape.rank() == 4) fan_in = t.shape[0] * t.shape[1] * t.shape[2];
        else fan_in = t.shape[0];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    });

    // Output heads start at zero: dP = 0 and R = 0, so the untrained model is
    // the identity map.
    std::fill(p.rsm.head.c2.w.data->begin(), p.rsm.head.c2.w.data->end(), 0.0);
    std::fill(p.rm.head2.w.data->begin(), p.rm.head2.w.data->end(), 0.0);
    return p;
}

std::int64_t parameter_count(const ModelParams& p) {
    std::int64_t n = 0;
    visit_params(p, [&n](const std::string&, const Tensor& t) { n += t.numel(); });
    return n;
}

void set_requires_grad(ModelParams& p, bool flag) {
    visit_params(p, [flag](const std::string&, Tensor& t) {
        t.requires_grad = flag;
        if (flag) t.zero_grad();
    });
}

// ---- tape registration ----

namespace {

ConvVars reg(Tape& t, const ConvParams& p) { return {t.leaf(p.w), t.leaf(p.b)}; }
AffineVars reg(Tape& t, const AffineParams& p) { return {t.leaf(p.w), t.leaf(p.b)}; }

MdfbVars reg(Tape& t, const MdfbParams& p) {
    MdfbVars v;
    for (int i = 0; i < 4; ++i) v.branch[static_cast<std::size_t>(i)] =
        reg(t, p.branch[static_cast<std::size_t>(i)]);
    v.fuse = reg(t, p.fuse);
    return v;
}

}  // namespace

ModelVars register_params(Tape& t, const ModelParams& p) {
    ModelVars v;
    v.rsm.lift = reg(t, p.rsm.lift);
    for (const auto& m : p.rsm.mdfbs) v.rsm.mdfbs.push_back(reg(t, m));
    v.rsm.head.c1 = reg(t, p.rsm.head.c1);
    v.rsm.head.c2 = reg(t, p.rsm.head.c2);
    v.rsm.head.mid_act = p.cfg.offset_mid_act;
    v.rm.init = reg(t, p.rm.init);
    for (const auto& d : p.rm.dgebs)
        v.rm.dgebs.push_back({reg(t, d.h), reg(t, d.attn_i), reg(t, d.attn_o)});
    v.rm.seb = {reg(t, p.rm.seb.squeeze), reg(t, p.rm.seb.excite)};
    v.rm.head1 = reg(t, p.rm.head1);
    v.rm.head2 = reg(t, p.rm.head2);
    return v;
}

// ---- forwards ----

Var mdfb_forward(Tape& t, Var F, const MdfbVars& p) {
    static const ConvPlane planes[4] = {ConvPlane::spatial, ConvPlane::angular,
                                        ConvPlane::epi_h, ConvPlane::epi_v};
    Var parts[4];
    for (int i = 0; i < 4; ++i) {
        const auto& br = p.branch[static_cast<std::size_t>(i)];
        parts[i] = t.pointwise(t.axis_conv(F, br.w, br.b, planes[i]), Pointwise::leaky_relu);
    }
    Var cat = t.concat_channels(t.concat_channels(parts[0], parts[1]),
                                t.concat_channels(parts[2], parts[3]));
    Var fused = t.axis_conv(cat, p.fuse.w, p.fuse.b, ConvPlane::spatial);
    return t.add(fused, F);
}

namespace {

// Zeroes the offset components an ablation mode disables. spatial_only keeps
// only the spatial displacements (du,dv of the position 4-vector are the
// angular coordinates u,v; those get zeroed), angular_only the reverse.
Var mask_offsets(Tape& t, Var dp, ResampleMode mode) {
    if (mode == ResampleMode::full_4d) return dp;
    double keep[4] = {0.0, 0.0, 0.0, 0.0};
    if (mode == ResampleMode::spatial_only) keep[2] = keep[3] = 1.0;
    if (mode == ResampleMode::angular_only) keep[0] = keep[1] = 1.0;
    const Shape& s = t.shape(dp);
    Tensor m(s);
    const std::int64_t n = s.numel() / 4;
    for (std::int64_t i = 0; i < n; ++i)
        for (int a = 0; a < 4; ++a) m[i * 4 + a] = keep[a];
    return t.mul(dp, t.leaf(m));
}

}  // namespace

RsmOut rsm_forward(Tape& t, Var I, const RsmVars& p, const AblationConfig& ab) {
    const Shape& is = t.shape(I);
    if (is.rank() != 5 || is[4] != 3)
        throw ShapeMismatch("rsm_forward expects a [U,V,X,Y,3] input, got " + is.str());
    const std::int64_t U = is[0], V = is[1], X = is[2], Y = is[3];

    if (ab.resample == ResampleMode::none) {
        // Identity re-sampling; the encoder is skipped entirely, so its
        // parameters receive no gradient in this mode.
        Var p0 = t.leaf(init_positions(U, V, X, Y));
        Var zero = t.leaf(Tensor(Shape{U, V, X, Y, 4}));
        return {I, p0, zero};
    }

    Var feat = t.pointwise(t.axis_conv(I, p.lift.w, p.lift.b, ConvPlane::spatial),
                           Pointwise::leaky_relu);
    for (const auto& m : p.mdfbs) feat = mdfb_forward(t, feat, m);

    Var h = t.axis_conv(feat, p.head.c1.w, p.head.c1.b, ConvPlane::spatial);
    if (p.head.mid_act) h = t.pointwise(h, Pointwise::leaky_relu);
    Var dp = t.axis_conv(h, p.head.c2.w, p.head.c2.b, ConvPlane::spatial);
    dp = mask_offsets(t, dp, ab.resample);

    Var p0 = t.leaf(init_positions(U, V, X, Y));
    Var pos = t.clamp_positions(t.add(dp, p0), U, V, X, Y);
    Var o_i = t.interpolate_4d(I, pos);
    return {o_i, pos, dp};
}

std::pair<Var, Var> dgeb_forward(Tape& t, Var f_i, Var f_o, const DgebVars& p,
                                 bool difference_guided) {
    Var e_i = mdfb_forward(t, f_i, p.h);
    Var e_o = mdfb_forward(t, f_o, p.h);
    if (!difference_guided) return {e_i, e_o};
    Var diff = t.sub(e_i, e_o);
    Var a_i = t.axis_conv(diff, p.attn_i.w, p.attn_i.b, ConvPlane::spatial);
    Var a_o = t.axis_conv(diff, p.attn_o.w, p.attn_o.b, ConvPlane::spatial);
    return {t.add(t.mul(e_i, a_i), e_i), t.add(t.mul(e_o, a_o), e_o)};
}

Var seb_forward(Tape& t, Var F, const SebVars& p) {
    Var pooled = t.global_avg_pool_spatial(F);
    Var z = t.pointwise(t.affine(pooled, p.squeeze.w, p.squeeze.b), Pointwise::leaky_relu);
    Var s = t.pointwise(t.affine(z, p.excite.w, p.excite.b), Pointwise::sigmoid);
    return t.mul(F, s);
}

Var rm_forward(Tape& t, Var I, Var o_i, const RmVars& p, const AblationConfig& ab) {
    if (t.shape(I) != t.shape(o_i))
        throw ShapeMismatch("rm_forward inputs differ: " + t.shape(I).str() + " vs " +
                            t.shape(o_i).str());
    Var f_i = t.pointwise(t.axis_conv(I, p.init.w, p.init.b, ConvPlane::spatial),
                          Pointwise::leaky_relu);
    Var f_o = t.pointwise(t.axis_conv(o_i, p.init.w, p.init.b, ConvPlane::spatial),
                          Pointwise::leaky_relu);
    for (const auto& d : p.dgebs) {
        auto [ni, no] = dgeb_forward(t, f_i, f_o, d, ab.refine == RefineMode::dgeb);
        f_i = ni;
        f_o = no;
    }
    Var cat = t.concat_channels(f_i, f_o);
    Var se = seb_forward(t, cat, p.seb);
    Var h = t.pointwise(t.axis_conv(se, p.head1.w, p.head1.b, ConvPlane::spatial),
                        Pointwise::leaky_relu);
    return t.axis_conv(h, p.head2.w, p.head2.b, ConvPlane::spatial);
}

ModelOut model_forward(Tape& t, Var I, const ModelVars& p, const AblationConfig& ab) {
    validate(ab);
    RsmOut rsm = rsm_forward(t, I, p.rsm, ab);
    if (ab.refine == RefineMode::none)
        return {rsm.o_i, rsm.o_i, rsm.positions, rsm.offsets};
    Var r = rm_forward(t, I, rsm.o_i, p.rm, ab);
    Var o_f = t.add(rsm.o_i, r);
    return {rsm.o_i, o_f, rsm.positions, rsm.offsets};
}

}  // namespace lfrr
