#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lfrr/tape.hpp"

namespace lfrr {

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
    std::int64_t coords_checked = 0;
    std::int64_t coords_skipped = 0;
};

// Builds a scalar loss from the leaves already registered on the tape, in the
// same order as the input list. Must be deterministic.
using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Compares the tape's analytic gradients against central differences
// (h = 1e-6). Every coordinate is probed when an input has at most
// max_probes entries; larger inputs get a deterministic random subset.
// Relative error per coordinate is |a-n| / max(1e-8, |a|+|n|).
//
// A central difference of a loss with magnitude |f| carries rounding noise
// of a few ulp(f)/2h, about 2e-10 for a unit-scale loss: a coordinate whose
// true gradient is smaller than that noise divided by tol cannot be
// certified at tol by any 64-bit difference. Such coordinates (both
// analytic and numeric magnitudes under the floor) are skipped and counted
// in coords_skipped rather than failing the check. Well-conditioned graphs
// skip nothing; a wrong adjoint on a path that matters still fails because
// either side of the comparison is then large.
//
// Callers keep inputs at least 1e-4 away from activation kinks and
// interpolation cell boundaries; a two-sided difference straddling a kink
// measures the secant, not either one-sided derivative.
//
// Throws NonFiniteGradient when the loss, an analytic gradient, or a numeric
// probe is non-finite.
GradCheckReport grad_check(const GraphFn& f, const std::vector<Tensor>& inputs, double tol,
                           std::int64_t max_probes = 64, std::uint64_t seed = 17);

}  // namespace lfrr
