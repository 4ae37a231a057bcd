#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "lfrr/losses.hpp"
#include "lfrr/rng.hpp"
#include "lfrr/tape.hpp"

using namespace lfrr;

namespace {

double scalar_loss(Var (Tape::*op)(Var, Var), const LightField& pred, const LightField& gt) {
    Tape t;
    Var v = (t.*op)(t.leaf(pred.to_tensor()), t.leaf(gt.to_tensor()));
    return t.scalar(v);
}

LightField shifted(const LightField& lf, double delta) {
    std::vector<double> d = lf.data();
    for (auto& v : d) v += delta;
    return LightField::unchecked(lf.U(), lf.V(), lf.X(), lf.Y(), lf.C(), std::move(d));
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("mae measures the mean absolute shift") {
    Rng rng(41, 0x50);
    LightField gt = testutil::random_lf(2, 2, 6, 6, 3, rng);
    CHECK(scalar_loss(&Tape::loss_mae, gt, gt) == 0.0);

    std::vector<double> scaled = gt.data();
    for (auto& v : scaled) v *= 0.5;  // keep pred = gt + 0.1 inside [0,1]
    LightField base = LightField::unchecked(2, 2, 6, 6, 3, std::move(scaled));
    double l = scalar_loss(&Tape::loss_mae, shifted(base, 0.1), base);
    CHECK(l == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("ssim loss is zero on identical fields") {
    Rng rng(42, 0x51);
    LightField gt = testutil::random_lf(2, 2, 16, 16, 3, rng);
    CHECK(std::fabs(scalar_loss(&Tape::loss_ssim, gt, gt)) <= 1e-12);
    ViewStats s = ssim_y(gt, gt);
    CHECK(s.mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim on opposite constants collapses to the stabilizer ratio") {
    // mu_a=0, mu_b=1, all variances zero: map = C1*C2 / ((1+C1)*C2) = C1/(1+C1)
    LightField a = LightField::unchecked(1, 1, 16, 16, 3,
                                         std::vector<double>(16 * 16 * 3, 0.0));
    LightField b = LightField::unchecked(1, 1, 16, 16, 3,
                                         std::vector<double>(16 * 16 * 3, 1.0));
    const double want_map = kSsimC1 / (1.0 + kSsimC1);
    ViewStats s = ssim_y(a, b);
    CHECK(s.mean == doctest::Approx(want_map).epsilon(1e-10));
    double l = scalar_loss(&Tape::loss_ssim, a, b);
    CHECK(l == doctest::Approx(1.0 - want_map).epsilon(1e-10));
}

TEST_CASE("epi gradient loss ignores constant offsets") {
    Rng rng(43, 0x52);
    LightField gt = testutil::random_lf(2, 2, 8, 8, 3, rng);
    CHECK(scalar_loss(&Tape::loss_epi, gt, gt) == 0.0);

    std::vector<double> scaled = gt.data();
    for (auto& v : scaled) v = 0.2 + 0.5 * v;
    LightField base = LightField::unchecked(2, 2, 8, 8, 3, std::move(scaled));
    LightField off = shifted(base, 0.04);
    CHECK(std::fabs(scalar_loss(&Tape::loss_epi, off, base)) <= 1e-12);
    // while mae sees the same offset in full
    CHECK(scalar_loss(&Tape::loss_mae, off, base) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("combined loss is the documented weighted sum") {
    Rng rng(44, 0x53);
    LightField gt = testutil::random_lf(2, 2, 12, 12, 3, rng);
    LightField pred = testutil::random_lf(2, 2, 12, 12, 3, rng);

    const double mae = scalar_loss(&Tape::loss_mae, pred, gt);
    const double ssim = scalar_loss(&Tape::loss_ssim, pred, gt);
    const double epi = scalar_loss(&Tape::loss_epi, pred, gt);

    auto combined = [&](double alpha, double beta) {
        Tape t;
        LossWeights w;
        w.alpha = alpha;
        w.beta = beta;
        return t.scalar(loss_combined(t, t.leaf(pred.to_tensor()), t.leaf(gt.to_tensor()), w));
    };

    // zero-weight terms are skipped entirely, so this is mae bit for bit
    CHECK(combined(0.0, 0.0) == mae);
    CHECK(combined(0.1, 1.0) ==
          doctest::Approx(mae + 0.1 * ssim + 1.0 * epi).epsilon(1e-12));
    CHECK(combined(0.3, 0.2) ==
          doctest::Approx(mae + 0.3 * ssim + 0.2 * epi).epsilon(1e-12));
}

TEST_CASE("stage one supervises both outputs, stage two only the final") {
    Rng rng(45, 0x54);
    LightField gt = testutil::random_lf(2, 2, 12, 12, 3, rng);
    LightField o_i = testutil::random_lf(2, 2, 12, 12, 3, rng);
    LightField o_f = testutil::random_lf(2, 2, 12, 12, 3, rng);
    LossWeights w;  // alpha 0.1, beta 1.0, lambda 0.5

    auto stage_val = [&](int stage, const LightField& oi, const LightField& of) {
        Tape t;
        return t.scalar(loss_stage(t, stage, t.leaf(oi.to_tensor()), t.leaf(of.to_tensor()),
                                   t.leaf(gt.to_tensor()), w));
    };
    auto comb = [&](const LightField& p) {
        Tape t;
        return t.scalar(loss_combined(t, t.leaf(p.to_tensor()), t.leaf(gt.to_tensor()), w));
    };

    const double lf = comb(o_f), li = comb(o_i);
    CHECK(stage_val(1, o_i, o_f) == doctest::Approx(lf + 0.5 * li).epsilon(1e-12));
    CHECK(stage_val(2, o_i, o_f) == doctest::Approx(lf).epsilon(1e-12));
    // with O_i = O_f the stage-1 value degenerates to (1 + lambda) * L
    CHECK(stage_val(1, o_f, o_f) == doctest::Approx(1.5 * lf).epsilon(1e-12));
}

TEST_CASE("psnr hits the textbook values on uniform luma error") {
    LightField gt = LightField::unchecked(2, 2, 8, 8, 3,
                                          std::vector<double>(2 * 2 * 8 * 8 * 3, 0.4));
    ViewStats same = psnr_y(gt, gt);
    CHECK(std::isinf(same.mean));
    for (double v : same.per_view) CHECK(std::isinf(v));

    ViewStats s = psnr_y(shifted(gt, 0.1), gt);  // MSE 0.01
    CHECK(s.mean == doctest::Approx(20.0).epsilon(1e-9));
    REQUIRE(s.per_view.size() == 4);
    for (double v : s.per_view) CHECK(v == doctest::Approx(20.0).epsilon(1e-9));

    ViewStats q = psnr_y(shifted(gt, 1.0 / 255.0), gt);
    CHECK(q.mean == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-9));
    CHECK(q.mean == doctest::Approx(48.1308).epsilon(1e-4));
}

TEST_CASE("psnr clamps the prediction before scoring") {
    LightField gt = LightField::unchecked(1, 1, 4, 4, 3, std::vector<double>(48, 1.0));
    // raw prediction overshoots to 1.1; clamping makes it exact
    LightField over = LightField::unchecked(1, 1, 4, 4, 3, std::vector<double>(48, 1.1));
    CHECK(std::isinf(psnr_y(over, gt).mean));
}

TEST_CASE("masked psnr scores only the marked pixels") {
    const std::int64_t X = 8, Y = 8;
    LightField gt = LightField::unchecked(1, 1, X, Y, 3,
                                          std::vector<double>(X * Y * 3, 0.5));
    LightField pred = gt;
    LightField mask = LightField::zeros(1, 1, X, Y, 1);
    for (std::int64_t x = 2; x < 5; ++x)
        for (std::int64_t y = 3; y < 6; ++y) {
            mask.at(0, 0, x, y, 0) = 1.0;
            for (std::int64_t c = 0; c < 3; ++c) pred.at(0, 0, x, y, c) = 0.6;
        }
    const double masked = psnr_y_masked(pred, gt, mask);
    CHECK(masked == doctest::Approx(20.0).epsilon(1e-9));  // 0.1 luma error inside
    CHECK(psnr_y(pred, gt).mean > masked);                 // diluted over the frame

    LightField empty = LightField::zeros(1, 1, X, Y, 1);
    CHECK(std::isinf(psnr_y_masked(pred, gt, empty)));
    CHECK(std::isinf(psnr_y_masked(gt, gt, mask)));
}

TEST_CASE("metric report lists scenes and averages them") {
    Rng rng(46, 0x55);
    MetricReport r;
    SceneMetrics m1;
    m1.name = "scene_000";
    m1.psnr.per_view = {30.0, 32.0};
    m1.psnr.mean = 31.0;
    m1.ssim.mean = 0.9;
    SceneMetrics m2;
    m2.name = "scene_001";
    m2.psnr.per_view = {40.0, 38.0};
    m2.psnr.mean = 39.0;
    m2.ssim.mean = 0.95;
    r.scenes = {m1, m2};
    CHECK(r.mean_psnr() == doctest::Approx(35.0).epsilon(1e-12));
    CHECK(r.mean_ssim() == doctest::Approx(0.925).epsilon(1e-12));
    std::string text = metric_report_text(r);
    CHECK(text.find("scene_000") != std::string::npos);
    CHECK(text.find("scene_001") != std::string::npos);
}

TEST_CASE("loss inputs must agree in shape") {
    Rng rng(47, 0x56);
    LightField a = testutil::random_lf(2, 2, 6, 6, 3, rng);
    LightField b = testutil::random_lf(2, 2, 6, 5, 3, rng);
    Tape t;
    CHECK_THROWS_AS(t.loss_mae(t.leaf(a.to_tensor()), t.leaf(b.to_tensor())), ShapeMismatch);
}

}  // TEST_SUITE
