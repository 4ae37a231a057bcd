#include "lfrr/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lfrr/checkpoint.hpp"
#include "lfrr/errors.hpp"
#include "lfrr/rng.hpp"

namespace lfrr {

namespace {

std::string fmt(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidConfig("bad numeric value for " + key + ": " + s);
    return v;
}

std::int64_t parse_int(const std::string& key, const std::string& s) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidConfig("bad integer value for " + key + ": " + s);
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidConfig("bad integer value for " + key + ": " + s);
    return v;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void validate(const TrainConfig& cfg) {
    validate(cfg.model);
    if (cfg.lr0 <= 0.0) throw InvalidConfig("train.lr0 must be positive");
    if (cfg.epochs < 1) throw InvalidConfig("train.epochs must be at least 1");
    if (cfg.batch < 1) throw InvalidConfig("train.batch must be at least 1");
    if (cfg.patch < 1) throw InvalidConfig("train.patch must be at least 1");
    if (!(cfg.stage2_start > 0.0 && cfg.stage2_start <= 1.0))
        throw InvalidConfig("train.stage2_start must be in (0,1]");
    if (cfg.weights.alpha < 0 || cfg.weights.beta < 0 || cfg.weights.lambda < 0)
        throw InvalidConfig("loss weights must be nonnegative");
    if (cfg.precision != "f64")
        throw InvalidConfig("train.precision supports only f64");
    if (cfg.ckpt_every < 0) throw InvalidConfig("train.ckpt_every must be nonnegative");
}

void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "model.c") cfg.model.channels = parse_int(key, value);
    else if (key == "model.m") cfg.model.mdfb_count = parse_int(key, value);
    else if (key == "model.n") cfg.model.dgeb_count = parse_int(key, value);
    else if (key == "model.r") cfg.model.se_ratio = parse_int(key, value);
    else if (key == "model.resample") cfg.ablation.resample = resample_mode_from(value);
    else if (key == "model.refine") cfg.ablation.refine = refine_mode_from(value);
    else if (key == "train.lr0") cfg.lr0 = parse_double(key, value);
    else if (key == "train.epochs") cfg.epochs = parse_int(key, value);
    else if (key == "train.batch") cfg.batch = parse_int(key, value);
    else if (key == "train.patch") cfg.patch = parse_int(key, value);
    else if (key == "train.stage2_start") cfg.stage2_start = parse_double(key, value);
    else if (key == "train.alpha") cfg.weights.alpha = parse_double(key, value);
    else if (key == "train.beta") cfg.weights.beta = parse_double(key, value);
    else if (key == "train.lambda") cfg.weights.lambda = parse_double(key, value);
    else if (key == "train.seed") cfg.seed = parse_u64(key, value);
    else if (key == "train.precision") cfg.precision = value;
    else if (key == "train.ckpt_every") cfg.ckpt_every = parse_int(key, value);
    else throw InvalidConfig("unknown config key: " + key);
}

TrainConfig parse_config_text(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfig("config line is not key=value: " + line);
        apply_config_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    validate(cfg);
    return cfg;
}

std::string serialize_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "model.c=" << cfg.model.channels << "\n";
    out << "model.m=" << cfg.model.mdfb_count << "\n";
    out << "model.n=" << cfg.model.dgeb_count << "\n";
    out << "model.r=" << cfg.model.se_ratio << "\n";
    out << "model.resample=" << to_string(cfg.ablation.resample) << "\n";
    out << "model.refine=" << to_string(cfg.ablation.refine) << "\n";
    out << "train.lr0=" << fmt(cfg.lr0) << "\n";
    out << "train.epochs=" << cfg.epochs << "\n";
    out << "train.batch=" << cfg.batch << "\n";
    out << "train.patch=" << cfg.patch << "\n";
    out << "train.stage2_start=" << fmt(cfg.stage2_start) << "\n";
    out << "train.alpha=" << fmt(cfg.weights.alpha) << "\n";
    out << "train.beta=" << fmt(cfg.weights.beta) << "\n";
    out << "train.lambda=" << fmt(cfg.weights.lambda) << "\n";
    out << "train.seed=" << cfg.seed << "\n";
    out << "train.precision=" << cfg.precision << "\n";
    out << "train.ckpt_every=" << cfg.ckpt_every << "\n";
    return out.str();
}

double lr_schedule(std::int64_t iter, std::int64_t total, double lr0) {
    if (total < 1 || iter < 0 || iter > total)
        throw ValueOutOfRange("lr_schedule: iter must be in [0,total]");
    return 0.5 * lr0 * (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(iter) /
                                       static_cast<double>(total)));
}

void adam_init(AdamState& st, const ModelParams& params) {
    st.m.clear();
    st.v.clear();
    st.t = 0;
    visit_params(params, [&](const std::string&, const Tensor& t) {
        st.m.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
        st.v.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
    });
}

void adam_step(ModelParams& params, AdamState& st, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++st.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    std::size_t i = 0;
    visit_params(params, [&](const std::string& name, Tensor& t) {
        if (i >= st.m.size() || st.m[i].size() != t.data->size())
            throw ShapeMismatch("adam state does not match parameter " + name);
        if (!t.grad || t.grad->size() != t.data->size())
            throw ShapeMismatch("missing gradient for parameter " + name);
        auto& m = st.m[i];
        auto& v = st.v[i];
        auto& g = *t.grad;
        auto& p = *t.data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (!std::isfinite(g[k]))
                throw NonFiniteGradient("non-finite gradient in " + name);
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
        ++i;
    });
}

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

InferOut infer(const ModelParams& params, const AblationConfig& ab, const LightField& input) {
    ModelParams frozen = params;  // tensor structs copied, storage shared
    set_requires_grad(frozen, false);
    Tape tape;
    ModelVars mv = register_params(tape, frozen);
    Var in = tape.leaf(input.to_tensor(false));
    ModelOut out = model_forward(tape, in, mv, ab);
    const Tensor oi = tape.value_tensor(out.o_i);
    const Tensor of = tape.value_tensor(out.o_f);

    InferOut r;
    std::vector<double> oi_v(*oi.data), of_v(*of.data), res_v(oi_v.size());
    for (std::size_t k = 0; k < oi_v.size(); ++k) {
        res_v[k] = of_v[k] - oi_v[k];
        oi_v[k] = clamp01(oi_v[k]);  // interpolation is convex, guard fp dust
        of_v[k] = clamp01(of_v[k]);
    }
    r.o_i = LightField(input.U(), input.V(), input.X(), input.Y(), input.C(), std::move(oi_v));
    r.o_f = LightField(input.U(), input.V(), input.X(), input.Y(), input.C(), std::move(of_v));
    r.residual = LightField::unchecked(input.U(), input.V(), input.X(), input.Y(), input.C(),
                                       std::move(res_v));
    return r;
}

namespace {

double mean_or(const std::vector<double>& v, double fallback) {
    if (v.empty()) return fallback;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

EvalResult evaluate(const ModelParams& params, const AblationConfig& ab,
                    const std::vector<DatasetEntry>& data, EvalSplit split) {
    EvalResult r;
    for (const auto& e : data) {
        if (split == EvalSplit::val && e.train) continue;
        if (split == EvalSplit::train && !e.train) continue;
        if (e.degraded.C() != 3)
            throw ConfigMismatch("model expects 3-channel light fields, scene " + e.name);
        InferOut out = infer(params, ab, e.degraded);
        r.model.scenes.push_back({e.name, psnr_y(out.o_f, e.clean), ssim_y(out.o_f, e.clean)});
        r.baseline.scenes.push_back(
            {e.name, psnr_y(e.degraded, e.clean), ssim_y(e.degraded, e.clean)});
        r.model_masked.push_back(psnr_y_masked(out.o_f, e.clean, e.mask));
        r.baseline_masked.push_back(psnr_y_masked(e.degraded, e.clean, e.mask));
    }
    if (r.model.scenes.empty()) throw EmptyDataset("no scenes in the requested split");
    r.model_masked_mean = mean_or(r.model_masked, 0.0);
    r.baseline_masked_mean = mean_or(r.baseline_masked, 0.0);
    return r;
}

namespace {

struct ValScore {
    double psnr = 0.0, ssim = 0.0, masked = 0.0;
};

ValScore validate_pass(const ModelParams& params, const AblationConfig& ab,
                       const std::vector<const DatasetEntry*>& val) {
    ValScore s;
    std::vector<double> psnrs, ssims, masked;
    for (const DatasetEntry* e : val) {
        InferOut out = infer(params, ab, e->degraded);
        psnrs.push_back(psnr_y(out.o_f, e->clean).mean);
        ssims.push_back(ssim_y(out.o_f, e->clean).mean);
        masked.push_back(psnr_y_masked(out.o_f, e->clean, e->mask));
    }
    s.psnr = mean_or(psnrs, 0.0);
    s.ssim = mean_or(ssims, 0.0);
    s.masked = mean_or(masked, 0.0);
    return s;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<DatasetEntry>& data,
                  const std::string& out_dir) {
    validate(cfg);
    if (data.empty()) throw EmptyDataset("training needs a dataset");

    std::vector<const DatasetEntry*> tr, val;
    for (const auto& e : data) (e.train ? tr : val).push_back(&e);
    if (tr.empty()) throw EmptyDataset("training split is empty");
    for (const DatasetEntry* e : tr) {
        if (e->clean.C() != 3 || e->degraded.C() != 3)
            throw ConfigMismatch("training scenes must be 3-channel: " + e->name);
        if (e->clean.X() < cfg.patch || e->clean.Y() < cfg.patch)
            throw InvalidConfig("train.patch exceeds the spatial dims of scene " + e->name);
    }

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir);
    {
        std::ofstream rc(fs::path(out_dir) / "resolved.cfg", std::ios::binary);
        if (!rc) throw IoError("cannot write resolved.cfg in " + out_dir);
        rc << serialize_config(cfg);
    }

    const auto t_start = std::chrono::steady_clock::now();
    const std::string cfg_text = serialize_config(cfg);

    ModelParams params = init_model_params(cfg.model, cfg.seed);
    set_requires_grad(params, true);
    AdamState adam;
    adam_init(adam, params);

    const auto n_train = static_cast<std::int64_t>(tr.size());
    const std::int64_t iters_per_epoch = n_train;
    const std::int64_t total_iters = cfg.epochs * iters_per_epoch;
    const auto stage2_epoch = cfg.stage2_start * static_cast<double>(cfg.epochs);

    std::ostringstream log;
    log << "scenes train " << tr.size() << " val " << val.size() << "\n";
    if (!val.empty()) {
        std::vector<double> bp, bs, bm;
        for (const DatasetEntry* e : val) {
            bp.push_back(psnr_y(e->degraded, e->clean).mean);
            bs.push_back(ssim_y(e->degraded, e->clean).mean);
            bm.push_back(psnr_y_masked(e->degraded, e->clean, e->mask));
        }
        log << "baseline val_psnr " << fmt(mean_or(bp, 0.0)) << " val_ssim "
            << fmt(mean_or(bs, 0.0)) << " val_psnr_masked " << fmt(mean_or(bm, 0.0)) << "\n";
    }

    const fs::path out_path(out_dir);
    auto flush_log = [&]() {
        std::ofstream lf(out_path / "train.log", std::ios::binary);
        if (!lf) throw IoError("cannot write train.log in " + out_dir);
        lf << log.str();
    };

    Rng rng(cfg.seed, 0x747261696eULL);
    TrainResult result;
    result.best_epoch = -1;
    result.best_psnr = -1.0;

    for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const int stage = static_cast<double>(epoch) < stage2_epoch ? 1 : 2;
        for (std::int64_t it = 0; it < iters_per_epoch; ++it) {
            const std::int64_t gstep = epoch * iters_per_epoch + it;
            const double lr = lr_schedule(gstep, total_iters, cfg.lr0);

            visit_params(params, [](const std::string&, Tensor& t) { t.zero_grad(); });

            double mae_acc = 0, ssim_acc = 0, epi_acc = 0, total_acc = 0;
            for (std::int64_t b = 0; b < cfg.batch; ++b) {
                const auto scene = static_cast<std::size_t>(
                    rng.below(static_cast<std::uint64_t>(n_train)));
                const DatasetEntry& e = *tr[scene];
                const auto x0 = static_cast<std::int64_t>(
                    rng.below(static_cast<std::uint64_t>(e.clean.X() - cfg.patch + 1)));
                const auto y0 = static_cast<std::int64_t>(
                    rng.below(static_cast<std::uint64_t>(e.clean.Y() - cfg.patch + 1)));
                LfTransform tf;
                tf.rotate90 = static_cast<int>(rng.below(4));
                tf.flip_x = rng.coin();

                LightField deg = apply_transform(
                    crop_patch(e.degraded, x0, y0, cfg.patch, cfg.patch), tf);
                LightField gt = apply_transform(
                    crop_patch(e.clean, x0, y0, cfg.patch, cfg.patch), tf);

                Tape tape;
                ModelVars mv = register_params(tape, params);
                Var in = tape.leaf(deg.to_tensor(false));
                ModelOut out = model_forward(tape, in, mv, cfg.ablation);
                Var gtv = tape.leaf(gt.to_tensor(false));
                Var total = loss_stage(tape, stage, out.o_i, out.o_f, gtv, cfg.weights);
                const double total_v = tape.scalar(total);

                // component terms for the log; they add nodes the backward
                // sweep sees with zero seed, so gradients are untouched
                const double mae_v = tape.scalar(tape.loss_mae(out.o_f, gtv));
                const double ssim_v = tape.scalar(tape.loss_ssim(out.o_f, gtv));
                const double epi_v = tape.scalar(tape.loss_epi(out.o_f, gtv));

                if (!std::isfinite(total_v)) {
                    std::ofstream diag(out_path / "diagnostic.txt", std::ios::binary);
                    diag << "non-finite loss\nepoch " << epoch << "\niter " << gstep
                         << "\nscene " << e.name << "\npatch " << x0 << " " << y0
                         << "\ntransform rot " << tf.rotate90 << " flip " << tf.flip_x
                         << "\nmae " << fmt(mae_v) << "\nssim " << fmt(ssim_v) << "\nepi "
                         << fmt(epi_v) << "\n";
                    flush_log();
                    throw NonFiniteLoss("loss diverged at iteration " +
                                        std::to_string(gstep));
                }
                tape.backward(total);
                mae_acc += mae_v;
                ssim_acc += ssim_v;
                epi_acc += epi_v;
                total_acc += total_v;
            }
            if (cfg.batch > 1) {
                const double inv = 1.0 / static_cast<double>(cfg.batch);
                visit_params(params, [&](const std::string&, Tensor& t) {
                    for (double& g : *t.grad) g *= inv;
                });
            }
            adam_step(params, adam, lr);

            const double inv = 1.0 / static_cast<double>(cfg.batch);
            log << "iter " << gstep << " epoch " << epoch << " stage " << stage << " lr "
                << fmt(lr) << " mae " << fmt(mae_acc * inv) << " ssim " << fmt(ssim_acc * inv)
                << " epi " << fmt(epi_acc * inv) << " total " << fmt(total_acc * inv) << "\n";
        }

        if (!val.empty()) {
            ValScore s = validate_pass(params, cfg.ablation, val);
            if (s.psnr > result.best_psnr) {
                result.best_psnr = s.psnr;
                result.best_epoch = epoch;
                write_checkpoint((out_path / "best.ckpt").string(), params, cfg_text);
            }
            log << "epoch " << epoch << " val_psnr " << fmt(s.psnr) << " val_ssim "
                << fmt(s.ssim) << " val_psnr_masked " << fmt(s.masked) << " best "
                << result.best_epoch << "\n";
        }
        if (cfg.ckpt_every > 0 && (epoch + 1) % cfg.ckpt_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%04lld.ckpt",
                          static_cast<long long>(epoch));
            write_checkpoint((out_path / name).string(), params, cfg_text);
        }
        flush_log();
    }

    write_checkpoint((out_path / "final.ckpt").string(), params, cfg_text);
    if (val.empty()) {
        result.best_epoch = cfg.epochs - 1;
        result.best_psnr = 0.0;
        write_checkpoint((out_path / "best.ckpt").string(), params, cfg_text);
    }
    flush_log();

    result.params = params;
    result.log = log.str();
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    {
        std::ofstream tf(out_path / "train.time", std::ios::binary);
        char buf[64];
        std::snprintf(buf, sizeof buf, "seconds %.3f\n", result.seconds);
        tf << buf;
    }
    return result;
}

}  // namespace lfrr
