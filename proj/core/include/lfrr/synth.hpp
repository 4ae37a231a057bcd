#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lfrr/light_field.hpp"
#include "lfrr/tensor.hpp"

namespace lfrr {

// Procedural textures are continuous functions of real plane coordinates, so
// every sub-aperture view samples the same underlying scene with no raster
// resolution limit.
enum class TextureKind { value_noise, checker, ramp };

struct TextureSpec {
    TextureKind kind = TextureKind::value_noise;
    std::uint64_t seed = 0;
    double scale = 12.0;  // feature size in pixels
    double phase_x = 0.0;
    double phase_y = 0.0;
    std::array<double, 3> color_a{0.2, 0.25, 0.3};
    std::array<double, 3> color_b{0.8, 0.75, 0.7};
    // ramp only: per-channel affine gradients about color_a
    std::array<double, 3> grad_x{0.0, 0.0, 0.0};
    std::array<double, 3> grad_y{0.0, 0.0, 0.0};
};

std::array<double, 3> texture_eval(const TextureSpec& tex, double x, double y);

struct PlaneSpec {
    double d_bg = 0.0;  // disparity, px per view step
    TextureSpec texture;
    // nearer planes may cover only a rectangle (center-view coords, half open);
    // the first plane always covers everything
    bool has_rect = false;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct DropSpec {
    double cx = 0, cy = 0;  // center-view position
    double radius = 2.0;
    double d_rd = 4.0;  // disparity, larger than any background plane
    double alpha = 1.0;
    double blur = 0.0;  // edge sigma in px; 0 is a hard disc
    std::array<double, 3> tint{0.72, 0.76, 0.8};
    double magnify = 1.8;  // mild lens-like distortion of the covered content
};

struct SceneSpec {
    std::uint64_t seed = 0;
    std::int64_t U = 3, V = 3, X = 48, Y = 48;
    std::vector<PlaneSpec> background;
    std::vector<DropSpec> raindrops;
};

// Throws InvalidConfig unless dims are positive, at least one plane exists,
// radii are >= 1 and every drop disparity exceeds every plane disparity.
void validate(const SceneSpec& spec);

struct SynthPair {
    LightField clean;
    LightField degraded;
    LightField mask;  // C=1, values exactly 0 or 1
    SceneSpec spec;
};

// View (u,v) samples each plane's texture at (x - d*(u-uc), y - d*(v-vc)),
// planes composited far to near.
LightField synth_background(const SceneSpec& spec);

// Renders the raindrop layer over the clean field. Drop centers move with
// d_rd across views; alpha is a disc edge-smoothed by blur and truncated to
// exactly zero beyond radius + 3*blur, so the degraded field equals the
// clean one outside that support bit for bit. Mask is 1 where the combined
// drop weight exceeds 0.5.
SynthPair synth_degraded(const LightField& clean, const SceneSpec& spec);

struct OracleOffsets {
    Tensor offsets;  // [U,V,X,Y,4], (du,dv,d_bg*du,d_bg*dv) at masked pixels
    std::vector<std::uint8_t> unreachable;  // [U,V,X,Y] flags
    std::int64_t unreachable_count = 0;
};

// For each masked pixel, the smallest max-norm view step whose re-sampled
// background point is free of raindrop pollution (all four bilinear
// neighbors outside every drop's support and inside the frame). Defined for
// single-plane scenes only; throws NotPlanar otherwise.
OracleOffsets oracle_offsets(const SynthPair& pair);

// Deterministic scene collection: single-plane backgrounds with varied
// texture, d_bg in [0,1], drop disparities in [3,6], 1..6 drops per scene.
// The first train_count(n) scenes are the training split.
std::vector<SynthPair> make_dataset(std::int64_t n_scenes, std::int64_t U, std::int64_t V,
                                    std::int64_t X, std::int64_t Y, std::uint64_t seed);

inline std::int64_t train_count(std::int64_t n_scenes) { return 3 * n_scenes / 4; }

// Dataset directory layout: scene_000/{clean,degraded,mask}.lfd plus a
// manifest.txt with one line per scene.
void write_dataset(const std::string& dir, const std::vector<SynthPair>& pairs);

struct DatasetEntry {
    std::string name;
    bool train = false;
    double d_bg = 0.0;
    LightField clean;
    LightField degraded;
    LightField mask;
};

std::vector<DatasetEntry> load_dataset(const std::string& dir);

}  // namespace lfrr
