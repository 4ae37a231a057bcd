#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfrr/blocks.hpp"
#include "lfrr/losses.hpp"
#include "lfrr/synth.hpp"

namespace lfrr {

struct TrainConfig {
    ModelConfig model;
    AblationConfig ablation;
    double lr0 = 3e-4;
    std::int64_t epochs = 300;
    std::int64_t batch = 1;
    std::int64_t patch = 32;
    double stage2_start = 0.75;  // fraction of epochs trained in stage 1
    LossWeights weights;
    std::uint64_t seed = 0;
    std::string precision = "f64";
    std::int64_t ckpt_every = 0;  // periodic checkpoint cadence in epochs, 0 = off
};

void validate(const TrainConfig& cfg);

// Plain dotted key=value text. '#' starts a comment, blank lines are
// skipped, unknown keys are rejected. serialize_config emits every key in a
// fixed order with shortest round-trip number formatting, so the output can
// be fed back in and reproduces the exact same configuration.
TrainConfig parse_config_text(const std::string& text);
void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string serialize_config(const TrainConfig& cfg);

// lr = 0.5 * lr0 * (1 + cos(pi * iter / total)); lr(0) = lr0, lr(total) = 0.
double lr_schedule(std::int64_t iter, std::int64_t total, double lr0);

// Bias-corrected Adam (0.9, 0.999, 1e-8) over the model's parameter tensors
// in visit order. Gradients are read from each tensor's grad buffer.
struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::int64_t t = 0;
};
void adam_init(AdamState& st, const ModelParams& params);
void adam_step(ModelParams& params, AdamState& st, double lr);

// One full forward pass with gradients disabled.
struct InferOut {
    LightField o_i;       // re-sampled estimate
    LightField o_f;       // refined output, clamped to [0,1]
    LightField residual;  // o_f - o_i before clamping, signed
};
InferOut infer(const ModelParams& params, const AblationConfig& ab, const LightField& input);

enum class EvalSplit { val, train, all };

struct EvalResult {
    MetricReport model;
    MetricReport baseline;             // degraded input scored the same way
    std::vector<double> model_masked;  // per scene, masked-region PSNR
    std::vector<double> baseline_masked;
    double model_masked_mean = 0.0;
    double baseline_masked_mean = 0.0;
};

EvalResult evaluate(const ModelParams& params, const AblationConfig& ab,
                    const std::vector<DatasetEntry>& data, EvalSplit split = EvalSplit::val);

struct TrainResult {
    ModelParams params;  // final state
    std::int64_t best_epoch = -1;
    double best_psnr = 0.0;
    std::string log;       // full TrainLog text, identical to out_dir/train.log
    double seconds = 0.0;  // wall time, kept out of the log
};

// Two-stage training. Per iteration: sample a training scene, a patch
// position and a dihedral transform; forward; stage loss; backward; Adam.
// Validation on full frames after every epoch drives best.ckpt; final.ckpt
// is written at the end. The log is a pure function of (config, dataset):
// wall time goes to the train.time sidecar instead. Periodic checkpoints
// are written every ckpt_every epochs when that is positive. A non-finite
// loss aborts with a diagnostic dump before any further checkpoint write.
TrainResult train(const TrainConfig& cfg, const std::vector<DatasetEntry>& data,
                  const std::string& out_dir);

}  // namespace lfrr
