// Command-line front end: dataset synthesis, training, evaluation, single
// field inference with visual outputs, and the verification suites.
//
// Exit codes: 0 success, 2 invalid configuration, 3 I/O failure,
// 4 verification failure (including non-finite training aborts).

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "lfrr/checkpoint.hpp"
#include "lfrr/errors.hpp"
#include "lfrr/lfd_io.hpp"
#include "lfrr/light_field.hpp"
#include "lfrr/losses.hpp"
#include "lfrr/png_io.hpp"
#include "lfrr/synth.hpp"
#include "lfrr/tape.hpp"
#include "lfrr/train.hpp"
#include "lfrr/verify.hpp"

namespace fs = std::filesystem;
using namespace lfrr;

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path);
    return s;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

std::array<std::int64_t, 4> parse_dims(const std::string& s) {
    std::array<std::int64_t, 4> d{};
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        const std::size_t end = i < 3 ? s.find(',', pos) : s.size();
        if (end == std::string::npos) throw InvalidConfig("--dims wants U,V,X,Y: " + s);
        const char* b = s.data() + pos;
        const char* e = s.data() + end;
        auto [p, ec] = std::from_chars(b, e, d[i]);
        if (ec != std::errc() || p != e || d[i] < 1)
            throw InvalidConfig("--dims wants four positive integers: " + s);
        pos = end + 1;
    }
    return d;
}

// .lfd carries exact dimensions; .png mosaics carry no view-grid metadata,
// so the tool reads them as the 3x3 desk layout.
LightField read_field(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".lfd") return read_lfd(path);
    if (ext == ".png") return read_png_mosaic(path, 3, 3);
    throw InvalidConfig("input must be .lfd or .png: " + path);
}

LightField centered(const LightField& r) {
    std::vector<double> d = r.data();
    for (auto& v : d) v = std::min(1.0, std::max(0.0, v + 0.5));
    return LightField(r.U(), r.V(), r.X(), r.Y(), r.C(), std::move(d));
}

LightField epi_image(const LightField& lf, EPI::Orientation o, std::int64_t a,
                     std::int64_t b) {
    EPI e = extract_epi(lf, o, a, b);
    return LightField(1, 1, e.A, e.B, e.C, std::move(e.plane));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

int cmd_synth(std::int64_t scenes, const std::string& dims, std::uint64_t seed,
              const std::string& out) {
    if (scenes < 1) throw InvalidConfig("--scenes must be at least 1");
    const auto d = parse_dims(dims);
    const auto pairs = make_dataset(scenes, d[0], d[1], d[2], d[3], seed);
    write_dataset(out, pairs);
    std::string cfg;
    cfg += "synth.scenes=" + std::to_string(scenes) + "\n";
    cfg += "synth.dims=" + std::to_string(d[0]) + "," + std::to_string(d[1]) + "," +
           std::to_string(d[2]) + "," + std::to_string(d[3]) + "\n";
    cfg += "synth.seed=" + std::to_string(seed) + "\n";
    write_text_file(fs::path(out) / "resolved.cfg", cfg);
    std::printf("scenes %lld train %lld val %lld\n", static_cast<long long>(scenes),
                static_cast<long long>(train_count(scenes)),
                static_cast<long long>(scenes - train_count(scenes)));
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_train(const std::string& config, const std::vector<std::string>& overrides,
              const std::string& data, const std::string& out) {
    TrainConfig cfg;
    if (!config.empty()) cfg = parse_config_text(read_text_file(config));
    for (const auto& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw InvalidConfig("override wants key=value: " + kv);
        apply_config_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate(cfg);
    const auto entries = load_dataset(data);
    const TrainResult res = train(cfg, entries, out);
    std::printf("best epoch %lld val_psnr %.4f\n", static_cast<long long>(res.best_epoch),
                res.best_psnr);
    std::printf("wall %.1f s\n", res.seconds);
    std::printf("wrote %s\n", (fs::path(out) / "final.ckpt").string().c_str());
    return 0;
}

struct LoadedModel {
    TrainConfig cfg;
    ModelParams params;
};

LoadedModel load_from_checkpoint(const std::string& ckpt) {
    const CheckpointData data = read_checkpoint(ckpt);
    LoadedModel m;
    m.cfg = parse_config_text(data.config_text);
    m.params = load_model_params(m.cfg.model, data);
    return m;
}

int cmd_eval(const std::string& ckpt, const std::string& data) {
    const LoadedModel m = load_from_checkpoint(ckpt);
    const auto entries = load_dataset(data);
    const EvalResult er = evaluate(m.params, m.cfg.ablation, entries, EvalSplit::val);
    std::printf("model:\n%s", metric_report_text(er.model).c_str());
    std::printf("baseline:\n%s", metric_report_text(er.baseline).c_str());
    std::printf("model mean_psnr %.4f mean_ssim %.6f masked_psnr %.4f\n",
                er.model.mean_psnr(), er.model.mean_ssim(), er.model_masked_mean);
    std::printf("baseline mean_psnr %.4f mean_ssim %.6f masked_psnr %.4f\n",
                er.baseline.mean_psnr(), er.baseline.mean_ssim(),
                er.baseline_masked_mean);
    std::printf("delta psnr %+.4f ssim %+.6f masked %+.4f\n",
                er.model.mean_psnr() - er.baseline.mean_psnr(),
                er.model.mean_ssim() - er.baseline.mean_ssim(),
                er.model_masked_mean - er.baseline_masked_mean);
    return 0;
}

int cmd_run(const std::string& ckpt, const std::string& input, const std::string& out,
            const std::string& gt) {
    const LoadedModel m = load_from_checkpoint(ckpt);
    const LightField in_lf = read_field(input);
    if (in_lf.C() != 3)
        throw ConfigMismatch("run wants a 3-channel field, got C=" +
                             std::to_string(in_lf.C()));
    const InferOut io = infer(m.params, m.cfg.ablation, in_lf);

    ensure_dir(out);
    const fs::path dir(out);
    write_lfd(dir / "o_i.lfd", io.o_i);
    write_lfd(dir / "o_f.lfd", io.o_f);
    const LightField res_vis = centered(io.residual);
    write_lfd(dir / "residual.lfd", res_vis);
    write_png_mosaic(dir / "o_i.png", io.o_i);
    write_png_mosaic(dir / "o_f.png", io.o_f);
    write_png_mosaic(dir / "residual.png", res_vis);

    const std::int64_t uc = in_lf.U() / 2, vc = in_lf.V() / 2;
    const std::int64_t xc = in_lf.X() / 2, yc = in_lf.Y() / 2;
    write_png_mosaic(dir / "epi_h_input.png",
                     epi_image(in_lf, EPI::Orientation::Horizontal, vc, yc));
    write_png_mosaic(dir / "epi_h_output.png",
                     epi_image(io.o_f, EPI::Orientation::Horizontal, vc, yc));
    write_png_mosaic(dir / "epi_v_input.png",
                     epi_image(in_lf, EPI::Orientation::Vertical, uc, xc));
    write_png_mosaic(dir / "epi_v_output.png",
                     epi_image(io.o_f, EPI::Orientation::Vertical, uc, xc));
    write_text_file(dir / "resolved.cfg", serialize_config(m.cfg));

    double r_mean = 0.0, r_max = 0.0;
    for (double v : io.residual.data()) {
        r_mean += std::fabs(v);
        r_max = std::max(r_max, std::fabs(v));
    }
    r_mean /= static_cast<double>(io.residual.size());

    char line[256];
    std::string report;
    report += "input " + input + "\n";
    report += "checkpoint " + ckpt + "\n";
    std::snprintf(line, sizeof line, "dims %lld %lld %lld %lld\n",
                  static_cast<long long>(in_lf.U()), static_cast<long long>(in_lf.V()),
                  static_cast<long long>(in_lf.X()), static_cast<long long>(in_lf.Y()));
    report += line;
    report += std::string("resample ") + to_string(m.cfg.ablation.resample) + " refine " +
              to_string(m.cfg.ablation.refine) + "\n";
    std::snprintf(line, sizeof line, "epi_h v %lld y %lld\nepi_v u %lld x %lld\n",
                  static_cast<long long>(vc), static_cast<long long>(yc),
                  static_cast<long long>(uc), static_cast<long long>(xc));
    report += line;
    std::snprintf(line, sizeof line, "residual mean_abs %.6e max_abs %.6e\n", r_mean,
                  r_max);
    report += line;
    if (!gt.empty()) {
        const LightField g = read_field(gt);
        if (!g.same_dims(in_lf))
            throw ConfigMismatch("ground truth dimensions do not match the input");
        std::snprintf(line, sizeof line, "baseline psnr %.4f ssim %.6f\n",
                      psnr_y(in_lf, g).mean, ssim_y(in_lf, g).mean);
        report += line;
        std::snprintf(line, sizeof line, "model psnr %.4f ssim %.6f\n",
                      psnr_y(io.o_f, g).mean, ssim_y(io.o_f, g).mean);
        report += line;
    }
    write_text_file(dir / "report.txt", report);
    std::fputs(report.c_str(), stdout);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_gradcheck(double tol) {
    if (!(tol > 0.0)) throw InvalidConfig("--tol must be positive");
    const auto checks = gradcheck_suite(tol, 5, 2026);
    bool all = true;
    for (const auto& c : checks) {
        std::printf("%s\n", opcheck_line(c).c_str());
        all = all && c.report.pass;
    }
    std::printf("gradcheck %s (%zu graphs)\n", all ? "PASS" : "FAIL", checks.size());
    return all ? 0 : 4;
}

int cmd_selftest(bool inject_bad_adjoint) {
    testhook::bad_adjoint = inject_bad_adjoint;
    const auto props = run_selftest(2026);
    testhook::bad_adjoint = false;
    bool all = true;
    for (const auto& p : props) {
        std::printf("%s\n", property_line(p).c_str());
        all = all && p.pass;
    }
    std::printf("selftest %s\n", all ? "PASS" : "FAIL");
    return all ? 0 : 4;
}

int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const InvalidConfig& e) {
        std::fprintf(stderr, "invalid config: %s\n", e.what());
        return 2;
    } catch (const ConfigMismatch& e) {
        std::fprintf(stderr, "config mismatch: %s\n", e.what());
        return 2;
    } catch (const EmptyDataset& e) {
        std::fprintf(stderr, "empty dataset: %s\n", e.what());
        return 2;
    } catch (const BadMagic& e) {
        std::fprintf(stderr, "bad file magic: %s\n", e.what());
        return 3;
    } catch (const BadVersion& e) {
        std::fprintf(stderr, "unsupported version: %s\n", e.what());
        return 3;
    } catch (const TruncatedFile& e) {
        std::fprintf(stderr, "truncated file: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "filesystem error: %s\n", e.what());
        return 3;
    } catch (const NonFiniteLoss& e) {
        std::fprintf(stderr, "non-finite loss: %s\n", e.what());
        return 4;
    } catch (const NonFiniteGradient& e) {
        std::fprintf(stderr, "non-finite gradient: %s\n", e.what());
        return 4;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"light-field raindrop removal"};
    app.require_subcommand(1);

    std::int64_t scenes = 0;
    std::string dims = "3,3,48,48";
    std::uint64_t seed = 0;
    std::string out_dir = "dataset";
    auto* synth = app.add_subcommand("synth", "generate a synthetic raindrop dataset");
    synth->add_option("--scenes", scenes, "number of scenes")->required();
    synth->add_option("--dims", dims, "U,V,X,Y (default 3,3,48,48)");
    synth->add_option("--seed", seed, "dataset seed");
    synth->add_option("--out", out_dir, "output directory");

    std::string config, data, train_out;
    std::vector<std::string> overrides;
    auto* tr = app.add_subcommand("train", "train a model on a synthesized dataset");
    tr->add_option("--config", config, "key=value config file");
    tr->add_option("--data", data, "dataset directory")->required();
    tr->add_option("--out", train_out, "run directory")->required();
    tr->add_option("overrides", overrides, "key=value overrides (win over the file)");

    std::string ckpt, eval_data;
    auto* ev = app.add_subcommand("eval", "score a checkpoint on a dataset");
    ev->add_option("--ckpt", ckpt, "checkpoint file")->required();
    ev->add_option("--data", eval_data, "dataset directory")->required();

    std::string run_ckpt, run_input, run_out, run_gt;
    auto* rn = app.add_subcommand("run", "restore one field and write visual outputs");
    rn->add_option("--ckpt", run_ckpt, "checkpoint file")->required();
    rn->add_option("--input", run_input, "input .lfd or 3x3 .png mosaic")->required();
    rn->add_option("--out", run_out, "output directory")->required();
    rn->add_option("--gt", run_gt, "ground truth field for metrics");

    double tol = 1e-5;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every operator");
    gc->add_option("--tol", tol, "relative error tolerance");

    bool inject = false;
    auto* st = app.add_subcommand("selftest", "run the full invariant suite");
    st->add_flag("--inject-bad-adjoint", inject)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (synth->parsed())
        return guarded([&] { return cmd_synth(scenes, dims, seed, out_dir); });
    if (tr->parsed())
        return guarded([&] { return cmd_train(config, overrides, data, train_out); });
    if (ev->parsed()) return guarded([&] { return cmd_eval(ckpt, eval_data); });
    if (rn->parsed())
        return guarded([&] { return cmd_run(run_ckpt, run_input, run_out, run_gt); });
    if (gc->parsed()) return guarded([&] { return cmd_gradcheck(tol); });
    if (st->parsed()) return guarded([&] { return cmd_selftest(inject); });
    return 2;
}
