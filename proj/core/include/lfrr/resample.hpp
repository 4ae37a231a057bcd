#pragma once

#include <utility>

#include "lfrr/light_field.hpp"
#include "lfrr/tape.hpp"
#include "lfrr/tensor.hpp"

namespace lfrr {

// Position grids and offset fields are [U,V,X,Y,4] tensors holding one
// (u,v,x,y) sample position per LF pixel, shared across color channels.

// Entry at (u,v,x,y) is exactly (u,v,x,y).
Tensor init_positions(std::int64_t U, std::int64_t V, std::int64_t X, std::int64_t Y);

// Clamps every coordinate into [0, dim-1].
Tensor clamp_positions(const Tensor& P, std::int64_t U, std::int64_t V, std::int64_t X,
                       std::int64_t Y);

// Separable 4D bilinear gather: each output pixel is the 16-neighbor weighted
// sum of I around its position, with per-axis weights (1-t, t) on the cell
// [floor(p), floor(p)+1] (top cell reused at p = dim-1). Positions must lie
// in range; clamp first. The same position drives all C channels.
LightField interpolate_4d(const LightField& I, const Tensor& P);

// Reference routes that materialize the intermediate per-stage blends; used
// to check that evaluation order does not matter.
LightField interpolate_4d_spatial_first(const LightField& I, const Tensor& P);
LightField interpolate_4d_angular_first(const LightField& I, const Tensor& P);

// grad_I gets seed scattered through the interpolation weights; grad_P gets
// the per-axis weight derivatives (-1,+1 on the cell), channels summed.
// Returns {grad_I as [U,V,X,Y,C], grad_P as [U,V,X,Y,4]}.
std::pair<Tensor, Tensor> interpolate_4d_backward(const LightField& I, const Tensor& P,
                                                  const Tensor& seed);

// Constant offset field (du, dv, d*du, d*dv): the re-sampling move that maps
// view (u,v) onto view (u+du, v+dv) for a scene plane at disparity d, under
// the convention that the plane's point at (x,y) in view u appears at
// x + d*(u'-u) in view u'.
Tensor planar_warp_offsets(double d, double du, double dv, std::int64_t U,
                           std::int64_t V, std::int64_t X, std::int64_t Y);

}  // namespace lfrr
