#include "lfrr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lfrr/errors.hpp"
#include "lfrr/lfd_io.hpp"
#include "lfrr/rng.hpp"

namespace lfrr {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// stateless lattice hash, uniform in [0,1)
double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
    std::uint64_t h = seed + 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(ix) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 30)) * 0x94d049bb133111ebULL;
    h ^= static_cast<std::uint64_t>(iy) * 0xd1b54a32d192ed03ULL;
    h = (h ^ (h >> 27)) * 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 31;
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double tx = smooth(x - fx), ty = smooth(y - fy);
    const double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
    const double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

}  // namespace

std::array<double, 3> texture_eval(const TextureSpec& tex, double x, double y) {
    switch (tex.kind) {
        case TextureKind::value_noise: {
            const double s = std::max(1.0, tex.scale);
            const double n1 = value_noise(tex.seed, x / s + tex.phase_x, y / s + tex.phase_y);
            const double n2 = value_noise(tex.seed ^ 0x5bd1e995u, 2.3 * x / s + 17.31,
                                          2.3 * y / s + 9.17);
            const double n = 0.72 * n1 + 0.28 * n2;
            std::array<double, 3> out;
            for (int c = 0; c < 3; ++c)
                out[c] = clamp01(tex.color_a[c] + (tex.color_b[c] - tex.color_a[c]) * n);
            return out;
        }
        case TextureKind::checker: {
            const double s = std::max(1.0, tex.scale);
            const double q = std::sin(3.14159265358979323846 * (x / s + tex.phase_x)) *
                             std::sin(3.14159265358979323846 * (y / s + tex.phase_y));
            const double n = 0.5 + 0.5 * std::tanh(1.5 * q);
            std::array<double, 3> out;
            for (int c = 0; c < 3; ++c)
                out[c] = clamp01(tex.color_a[c] + (tex.color_b[c] - tex.color_a[c]) * n);
            return out;
        }
        case TextureKind::ramp: {
            std::array<double, 3> out;
            for (int c = 0; c < 3; ++c)
                out[c] = clamp01(tex.color_a[c] + tex.grad_x[c] * x + tex.grad_y[c] * y);
            return out;
        }
    }
    throw InvalidConfig("unknown texture kind");
}

void validate(const SceneSpec& spec) {
    if (spec.U < 1 || spec.V < 1 || spec.X < 1 || spec.Y < 1)
        throw InvalidConfig("scene dims must be positive");
    if (spec.background.empty()) throw InvalidConfig("scene needs at least one plane");
    double max_bg = 0.0;
    for (const auto& p : spec.background) max_bg = std::max(max_bg, p.d_bg);
    for (const auto& d : spec.raindrops) {
        if (d.radius < 1.0) throw InvalidConfig("drop radius must be at least 1 px");
        if (d.d_rd <= max_bg)
            throw InvalidConfig("drop disparity must exceed every background disparity");
        if (d.alpha <= 0.0 || d.alpha > 1.0) throw InvalidConfig("drop alpha must be in (0,1]");
        if (d.blur < 0.0) throw InvalidConfig("drop blur must be nonnegative");
    }
}

LightField synth_background(const SceneSpec& spec) {
    validate(spec);
    const double uc = static_cast<double>(spec.U - 1) / 2.0;
    const double vc = static_cast<double>(spec.V - 1) / 2.0;
    LightField lf = LightField::zeros(spec.U, spec.V, spec.X, spec.Y, 3);
    for (std::int64_t u = 0; u < spec.U; ++u)
        for (std::int64_t v = 0; v < spec.V; ++v) {
            const double du = static_cast<double>(u) - uc;
            const double dv = static_cast<double>(v) - vc;
            for (std::int64_t x = 0; x < spec.X; ++x)
                for (std::int64_t y = 0; y < spec.Y; ++y) {
                    std::array<double, 3> col{0, 0, 0};
                    for (std::size_t p = 0; p < spec.background.size(); ++p) {
                        const auto& pl = spec.background[p];
                        const double sx = static_cast<double>(x) - pl.d_bg * du;
                        const double sy = static_cast<double>(y) - pl.d_bg * dv;
                        const bool covered =
                            p == 0 || !pl.has_rect ||
                            (sx >= pl.x0 && sx < pl.x1 && sy >= pl.y0 && sy < pl.y1);
                        if (covered) col = texture_eval(pl.texture, sx, sy);
                    }
                    for (int c = 0; c < 3; ++c) lf.at(u, v, x, y, c) = col[c];
                }
        }
    return lf;
}

namespace {

// 0.5*erfc(-z/sqrt(2)), the smoothed disc edge profile
double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865476); }

double drop_alpha(const DropSpec& d, double dist) {
    if (d.blur <= 0.0) return dist <= d.radius ? d.alpha : 0.0;
    if (dist > d.radius + 3.0 * d.blur) return 0.0;
    return d.alpha * normal_cdf((d.radius - dist) / d.blur);
}

// bilinear sample of one view with clamped coordinates
double sample_view(const LightField& lf, std::int64_t u, std::int64_t v, double x, double y,
                   std::int64_t c) {
    x = std::min(static_cast<double>(lf.X() - 1), std::max(0.0, x));
    y = std::min(static_cast<double>(lf.Y() - 1), std::max(0.0, y));
    const auto x0 = std::min(static_cast<std::int64_t>(x), lf.X() - 1);
    const auto y0 = std::min(static_cast<std::int64_t>(y), lf.Y() - 1);
    const auto x1 = std::min(x0 + 1, lf.X() - 1);
    const auto y1 = std::min(y0 + 1, lf.Y() - 1);
    const double tx = x - static_cast<double>(x0), ty = y - static_cast<double>(y0);
    return (lf.at(u, v, x0, y0, c) * (1 - tx) + lf.at(u, v, x1, y0, c) * tx) * (1 - ty) +
           (lf.at(u, v, x0, y1, c) * (1 - tx) + lf.at(u, v, x1, y1, c) * tx) * ty;
}

}  // namespace

SynthPair synth_degraded(const LightField& clean, const SceneSpec& spec) {
    validate(spec);
    if (clean.U() != spec.U || clean.V() != spec.V || clean.X() != spec.X ||
        clean.Y() != spec.Y || clean.C() != 3)
        throw ShapeMismatch("clean field does not match the scene dims");
    const double uc = static_cast<double>(spec.U - 1) / 2.0;
    const double vc = static_cast<double>(spec.V - 1) / 2.0;

    SynthPair pair;
    pair.spec = spec;
    pair.clean = clean;
    pair.degraded = clean;
    pair.mask = LightField::zeros(spec.U, spec.V, spec.X, spec.Y, 1);

    for (std::int64_t u = 0; u < spec.U; ++u)
        for (std::int64_t v = 0; v < spec.V; ++v) {
            const double du = static_cast<double>(u) - uc;
            const double dv = static_cast<double>(v) - vc;
            for (std::int64_t x = 0; x < spec.X; ++x)
                for (std::int64_t y = 0; y < spec.Y; ++y) {
                    double weight = 1.0;  // product of (1 - alpha_k)
                    std::array<double, 3> col{
                        clean.at(u, v, x, y, 0), clean.at(u, v, x, y, 1),
                        clean.at(u, v, x, y, 2)};
                    bool touched = false;
                    for (const auto& d : spec.raindrops) {
                        const double cx = d.cx + d.d_rd * du;
                        const double cy = d.cy + d.d_rd * dv;
                        const double dx = static_cast<double>(x) - cx;
                        const double dy = static_cast<double>(y) - cy;
                        const double a = drop_alpha(d, std::sqrt(dx * dx + dy * dy));
                        if (a <= 0.0) continue;
                        touched = true;
                        weight *= 1.0 - a;
                        const double m = std::max(1.0, d.magnify);
                        for (int c = 0; c < 3; ++c) {
                            const double inner =
                                sample_view(clean, u, v, cx + dx / m, cy + dy / m, c);
                            const double content =
                                clamp01(0.7 * d.tint[c] + 0.3 * inner);
                            col[c] = (1.0 - a) * col[c] + a * content;
                        }
                    }
                    if (touched)
                        for (int c = 0; c < 3; ++c)
                            pair.degraded.at(u, v, x, y, c) = clamp01(col[c]);
                    if (1.0 - weight > 0.5) pair.mask.at(u, v, x, y, 0) = 1.0;
                }
        }
    return pair;
}

namespace {

// true when any drop's truncated support reaches (x,y) in view (u,v)
bool polluted(const SceneSpec& spec, std::int64_t u, std::int64_t v, double x, double y) {
    const double uc = static_cast<double>(spec.U - 1) / 2.0;
    const double vc = static_cast<double>(spec.V - 1) / 2.0;
    const double du = static_cast<double>(u) - uc;
    const double dv = static_cast<double>(v) - vc;
    for (const auto& d : spec.raindrops) {
        const double dx = x - (d.cx + d.d_rd * du);
        const double dy = y - (d.cy + d.d_rd * dv);
        const double reach = d.radius + 3.0 * d.blur;
        if (dx * dx + dy * dy <= reach * reach) return true;
    }
    return false;
}

// all four bilinear neighbors inside the frame and drop-free
bool clean_sample(const SceneSpec& spec, std::int64_t u, std::int64_t v, double x, double y) {
    if (x < 0.0 || x > static_cast<double>(spec.X - 1)) return false;
    if (y < 0.0 || y > static_cast<double>(spec.Y - 1)) return false;
    const auto x0 = std::min(static_cast<std::int64_t>(std::floor(x)), spec.X - 2);
    const auto y0 = std::min(static_cast<std::int64_t>(std::floor(y)), spec.Y - 2);
    const auto cx0 = std::max<std::int64_t>(0, x0);
    const auto cy0 = std::max<std::int64_t>(0, y0);
    for (std::int64_t i = 0; i < 2; ++i)
        for (std::int64_t j = 0; j < 2; ++j)
            if (polluted(spec, u, v, static_cast<double>(cx0 + i), static_cast<double>(cy0 + j)))
                return false;
    return true;
}

}  // namespace

OracleOffsets oracle_offsets(const SynthPair& pair) {
    const SceneSpec& spec = pair.spec;
    if (spec.background.size() != 1)
        throw NotPlanar("re-sampling oracle is defined for single-plane scenes only");
    const double d_bg = spec.background[0].d_bg;
    const std::int64_t U = spec.U, V = spec.V, X = spec.X, Y = spec.Y;

    OracleOffsets out;
    out.offsets = Tensor(Shape{U, V, X, Y, 4});
    out.unreachable.assign(static_cast<std::size_t>(U * V * X * Y), 0);

    const std::int64_t gmax = std::max(U, V) - 1;
    for (std::int64_t u = 0; u < U; ++u)
        for (std::int64_t v = 0; v < V; ++v)
            for (std::int64_t x = 0; x < X; ++x)
                for (std::int64_t y = 0; y < Y; ++y) {
                    if (pair.mask.at(u, v, x, y, 0) < 0.5) continue;
                    const std::int64_t flat = ((u * V + v) * X + x) * Y + y;
                    bool found = false;
                    for (std::int64_t g = 1; g <= gmax && !found; ++g) {
                        // within one max-norm ring, prefer axis-aligned steps
                        std::vector<std::pair<std::int64_t, std::int64_t>> ring;
                        for (std::int64_t su = -g; su <= g; ++su)
                            for (std::int64_t sv = -g; sv <= g; ++sv)
                                if (std::max(std::llabs(su), std::llabs(sv)) == g)
                                    ring.emplace_back(su, sv);
                        std::stable_sort(ring.begin(), ring.end(),
                                         [](const auto& a, const auto& b) {
                                             return std::llabs(a.first) + std::llabs(a.second) <
                                                    std::llabs(b.first) + std::llabs(b.second);
                                         });
                        for (const auto& [su, sv] : ring) {
                            const std::int64_t tu = u + su, tv = v + sv;
                            if (tu < 0 || tu >= U || tv < 0 || tv >= V) continue;
                            const double sx = static_cast<double>(x) +
                                              d_bg * static_cast<double>(su);
                            const double sy = static_cast<double>(y) +
                                              d_bg * static_cast<double>(sv);
                            if (!clean_sample(spec, tu, tv, sx, sy)) continue;
                            double* o = out.offsets.data->data() +
                                        static_cast<std::size_t>(flat * 4);
                            o[0] = static_cast<double>(su);
                            o[1] = static_cast<double>(sv);
                            o[2] = d_bg * static_cast<double>(su);
                            o[3] = d_bg * static_cast<double>(sv);
                            found = true;
                            break;
                        }
                    }
                    if (!found) {
                        out.unreachable[static_cast<std::size_t>(flat)] = 1;
                        ++out.unreachable_count;
                    }
                }
    return out;
}

std::vector<SynthPair> make_dataset(std::int64_t n_scenes, std::int64_t U, std::int64_t V,
                                    std::int64_t X, std::int64_t Y, std::uint64_t seed) {
    if (n_scenes < 1) throw InvalidConfig("dataset needs at least one scene");
    std::vector<SynthPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n_scenes));
    const double max_view = std::max(static_cast<double>(U - 1),
                                     static_cast<double>(V - 1)) / 2.0;
    for (std::int64_t i = 0; i < n_scenes; ++i) {
        Rng rng(seed, 0x73796e000ULL + static_cast<std::uint64_t>(i));
        SceneSpec spec;
        spec.seed = seed;
        spec.U = U; spec.V = V; spec.X = X; spec.Y = Y;

        PlaneSpec plane;
        plane.d_bg = rng.uniform(0.0, 1.0);
        TextureSpec& tex = plane.texture;
        tex.kind = rng.coin() ? TextureKind::value_noise : TextureKind::checker;
        tex.seed = rng.next_u64();
        // Feature size comparable to the drop diameter: occluded content is
        // then unpredictable from the surrounding view, and recovering it
        // requires the other views, which is the effect under study.
        tex.scale = rng.uniform(5.0, 10.0);
        tex.phase_x = rng.uniform(0.0, 8.0);
        tex.phase_y = rng.uniform(0.0, 8.0);
        for (int c = 0; c < 3; ++c) {
            const double mid = rng.uniform(0.35, 0.65);
            const double half = rng.uniform(0.18, 0.3);
            tex.color_a[c] = mid - half;
            tex.color_b[c] = mid + half;
        }
        spec.background.push_back(plane);

        const std::int64_t n_drops = 1 + static_cast<std::int64_t>(rng.below(6));
        for (std::int64_t k = 0; k < n_drops; ++k) {
            DropSpec d;
            d.d_rd = rng.uniform(std::max(3.0, plane.d_bg + 2.4), 6.0);
            const double delta = d.d_rd - plane.d_bg;
            // cap at 0.65*delta keeps every masked pixel recoverable from a
            // nearby view (the oracle's reachability condition)
            d.radius = rng.uniform(1.5, std::max(1.55, 0.65 * delta));
            d.blur = rng.coin() ? 0.0
                                : rng.uniform(0.25, std::min(0.8, 0.5 * (d.radius - 0.9)));
            if (d.blur < 0.25) d.blur = 0.0;
            d.alpha = rng.uniform(0.85, 1.0);
            for (int c = 0; c < 3; ++c) d.tint[c] = rng.uniform(0.55, 0.85);
            d.magnify = rng.uniform(1.4, 2.2);
            const double margin =
                d.radius + 3.0 * d.blur + d.d_rd * max_view + 2.0;
            const double lx = margin, hx = static_cast<double>(X - 1) - margin;
            const double ly = margin, hy = static_cast<double>(Y - 1) - margin;
            if (hx <= lx || hy <= ly) continue;  // frame too small for this drop
            d.cx = rng.uniform(lx, hx);
            d.cy = rng.uniform(ly, hy);
            spec.raindrops.push_back(d);
        }

        LightField clean = synth_background(spec);
        pairs.push_back(synth_degraded(clean, spec));
    }
    return pairs;
}

void write_dataset(const std::string& dir, const std::vector<SynthPair>& pairs) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory " + dir);

    std::ostringstream manifest;
    const std::int64_t n_train = train_count(static_cast<std::int64_t>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03zu", i);
        const fs::path scene_dir = fs::path(dir) / name;
        fs::create_directories(scene_dir, ec);
        if (ec) throw IoError("cannot create scene directory " + scene_dir.string());
        write_lfd(scene_dir / "clean.lfd", pairs[i].clean);
        write_lfd(scene_dir / "degraded.lfd", pairs[i].degraded);
        write_lfd(scene_dir / "mask.lfd", pairs[i].mask);
        const SceneSpec& s = pairs[i].spec;
        double d_rd_max = 0.0;
        for (const auto& d : s.raindrops) d_rd_max = std::max(d_rd_max, d.d_rd);
        char line[256];
        std::snprintf(line, sizeof line,
                      "scene %s split %s d_bg %.17g d_rd_max %.17g drops %zu texture %s\n", name,
                      static_cast<std::int64_t>(i) < n_train ? "train" : "val",
                      s.background.empty() ? 0.0 : s.background[0].d_bg, d_rd_max,
                      s.raindrops.size(),
                      s.background.empty() ? "none"
                      : s.background[0].texture.kind == TextureKind::value_noise ? "value_noise"
                      : s.background[0].texture.kind == TextureKind::checker     ? "checker"
                                                                                 : "ramp");
        manifest << line;
    }
    std::ofstream mf(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!mf) throw IoError("cannot write manifest in " + dir);
    mf << manifest.str();
    if (!mf.flush()) throw IoError("failed writing manifest in " + dir);
}

std::vector<DatasetEntry> load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!mf) throw IoError("cannot open manifest in " + dir);
    std::vector<DatasetEntry> entries;
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kw, name, split_kw, split, dbg_kw;
        double d_bg = 0.0;
        ls >> kw >> name >> split_kw >> split >> dbg_kw >> d_bg;
        if (kw != "scene" || split_kw != "split" || dbg_kw != "d_bg" || !ls)
            throw IoError("malformed manifest line: " + line);
        DatasetEntry e;
        e.name = name;
        e.train = split == "train";
        e.d_bg = d_bg;
        const fs::path scene_dir = fs::path(dir) / name;
        e.clean = read_lfd(scene_dir / "clean.lfd");
        e.degraded = read_lfd(scene_dir / "degraded.lfd");
        e.mask = read_lfd(scene_dir / "mask.lfd");
        if (!e.clean.same_dims(e.degraded))
            throw IoError("clean/degraded dims disagree for " + name);
        if (e.mask.U() != e.clean.U() || e.mask.V() != e.clean.V() ||
            e.mask.X() != e.clean.X() || e.mask.Y() != e.clean.Y() || e.mask.C() != 1)
            throw IoError("mask dims disagree for " + name);
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw EmptyDataset("no scenes listed in " + dir + "/manifest.txt");
    return entries;
}

}  // namespace lfrr
