#pragma once

#include <string>
#include <vector>

#include "lfrr/light_field.hpp"
#include "lfrr/tape.hpp"

namespace lfrr {

struct LossWeights {
    double alpha = 0.1;   // SSIM term
    double beta = 1.0;    // EPI gradient term
    double lambda = 0.5;  // stage-1 supervision of the re-sampled output
};

// SSIM window: 11x11 Gaussian, sigma 1.5, constants (0.01 L)^2 and (0.03 L)^2
// with L = 1 on [0,1] data. Borders use symmetric reflection (edge repeated).
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 1e-4;
inline constexpr double kSsimC2 = 9e-4;

// mae + alpha * ssim + beta * epi. Terms with zero weight are not built.
Var loss_combined(Tape& t, Var pred, Var gt, const LossWeights& w);

// Stage 1 supervises both outputs: L(O_f) + lambda * L(O_i). Stage 2 drops
// the O_i term entirely.
Var loss_stage(Tape& t, int stage, Var o_i, Var o_f, Var gt, const LossWeights& w);

struct ViewStats {
    std::vector<double> per_view;  // row-major over (u,v)
    double mean = 0.0;
};

// 10*log10(1/MSE) on luma, per view and averaged over views. pred is clamped
// to [0,1] first; a zero-MSE view reports the +infinity sentinel, which
// propagates into the mean.
ViewStats psnr_y(const LightField& pred, const LightField& gt);

// Mean SSIM map value on luma, per view and averaged.
ViewStats ssim_y(const LightField& pred, const LightField& gt);

// PSNR restricted to pixels where mask > 0.5 (mask is a C=1 field). Returns
// the +infinity sentinel when the masked MSE is zero or the mask is empty.
double psnr_y_masked(const LightField& pred, const LightField& gt, const LightField& mask);

struct SceneMetrics {
    std::string name;
    ViewStats psnr;
    ViewStats ssim;
};

struct MetricReport {
    std::vector<SceneMetrics> scenes;
    double mean_psnr() const;
    double mean_ssim() const;
};

// One line per scene: name, per-view PSNR list, mean PSNR, mean SSIM.
std::string metric_report_text(const MetricReport& r);

}  // namespace lfrr
