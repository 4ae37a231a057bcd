#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lfrr/tape.hpp"
#include "lfrr/tensor.hpp"

namespace lfrr {

struct ModelConfig {
    std::int64_t channels = 64;   // c, feature width
    std::int64_t mdfb_count = 5;  // M, encoder depth
    std::int64_t dgeb_count = 5;  // N, refinement depth
    std::int64_t se_ratio = 16;   // r, squeeze-excitation reduction
    bool offset_mid_act = true;   // leaky_relu between the two offset-head convs
};

enum class ResampleMode { full_4d, spatial_only, angular_only, none };
enum class RefineMode { dgeb, mdfb, none };

// Ablation switches. resample none forces the identity re-sampling; refine
// none drops the residual branch; both at once degenerate to the identity
// model and are rejected.
struct AblationConfig {
    ResampleMode resample = ResampleMode::full_4d;
    RefineMode refine = RefineMode::dgeb;
};

void validate(const ModelConfig& cfg);
void validate(const AblationConfig& ab);

const char* to_string(ResampleMode m);
const char* to_string(RefineMode m);
ResampleMode resample_mode_from(const std::string& s);
RefineMode refine_mode_from(const std::string& s);

// ---- parameter storage ----

struct ConvParams { Tensor w, b; };    // [k,k,Cin,Cout], [Cout]
struct AffineParams { Tensor w, b; };  // [F,G], [G]

struct MdfbParams {
    std::array<ConvParams, 4> branch;  // spatial, angular, epi_h, epi_v; k=3, c -> c/4
    ConvParams fuse;                   // 1x1, c -> c
};

struct OffsetHeadParams { ConvParams c1, c2; };  // c -> c (k3), c -> 4 (k3, zero-init)

struct RsmParams {
    ConvParams lift;  // 3 -> c, k3
    std::vector<MdfbParams> mdfbs;
    OffsetHeadParams head;
};

struct DgebParams {
    MdfbParams h;             // weight-shared feature extractor for both streams
    ConvParams attn_i, attn_o;  // 1x1, c -> 1
};

struct SebParams { AffineParams squeeze, excite; };  // 2c -> 2c/r, 2c/r -> 2c

struct RmParams {
    ConvParams init;  // 3 -> c, k3, shared across the I and O_i streams
    std::vector<DgebParams> dgebs;
    SebParams seb;
    ConvParams head1, head2;  // 2c -> c (k3), c -> 3 (k3, zero-init)
};

struct ModelParams {
    ModelConfig cfg;
    RsmParams rsm;
    RmParams rm;
};

// Deterministic in (cfg, seed): fan-in-scaled uniform weights, zero biases,
// zero-filled offset and residual head output layers so the untrained model
// is the identity map.
ModelParams init_model_params(const ModelConfig& cfg, std::uint64_t seed);

// Visits every parameter tensor with its checkpoint path (fixed order),
// e.g. "rsm.mdfb.3.branch.epi_h.weight".
void visit_params(ModelParams& p, const std::function<void(const std::string&, Tensor&)>& fn);
void visit_params(const ModelParams& p,
                  const std::function<void(const std::string&, const Tensor&)>& fn);

std::int64_t parameter_count(const ModelParams& p);
void set_requires_grad(ModelParams& p, bool flag);

// ---- tape-side handles ----

struct ConvVars { Var w, b; };
struct AffineVars { Var w, b; };
struct MdfbVars { std::array<ConvVars, 4> branch; ConvVars fuse; };
struct OffsetHeadVars { ConvVars c1, c2; bool mid_act = true; };
struct RsmVars { ConvVars lift; std::vector<MdfbVars> mdfbs; OffsetHeadVars head; };
struct DgebVars { MdfbVars h; ConvVars attn_i, attn_o; };
struct SebVars { AffineVars squeeze, excite; };
struct RmVars { ConvVars init; std::vector<DgebVars> dgebs; SebVars seb; ConvVars head1, head2; };
struct ModelVars { RsmVars rsm; RmVars rm; };

ModelVars register_params(Tape& t, const ModelParams& p);

// ---- forwards ----

Var mdfb_forward(Tape& t, Var F, const MdfbVars& p);

struct RsmOut {
    Var o_i;        // re-sampled LF [U,V,X,Y,3]
    Var positions;  // clamped P [U,V,X,Y,4]
    Var offsets;    // ablation-masked dP [U,V,X,Y,4]
};
RsmOut rsm_forward(Tape& t, Var I, const RsmVars& p, const AblationConfig& ab);

// difference_guided=false drops the attention coupling (refine_mode mdfb):
// both streams just pass through the shared extractor.
std::pair<Var, Var> dgeb_forward(Tape& t, Var f_i, Var f_o, const DgebVars& p,
                                 bool difference_guided = true);

Var seb_forward(Tape& t, Var F, const SebVars& p);

Var rm_forward(Tape& t, Var I, Var o_i, const RmVars& p, const AblationConfig& ab);

struct ModelOut {
    Var o_i, o_f;   // o_f is unclamped; clamp only for metrics/serialization
    Var positions, offsets;
};
ModelOut model_forward(Tape& t, Var I, const ModelVars& p, const AblationConfig& ab);

}  // namespace lfrr
