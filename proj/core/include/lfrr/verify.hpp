#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfrr/gradcheck.hpp"

namespace lfrr {

// Invariant battery shared by the selftest command and the acceptance tests.
// Every check is deterministic in its seed.

struct PropertyResult {
    std::string name;
    double measured = 0.0;  // worst observed error
    double bound = 0.0;     // tolerance it is held to
    bool pass = false;
    std::string detail;
};

// interpolate_4d at the identity grid must return the input bit for bit.
PropertyResult check_interp_identity(int n_fields, std::uint64_t seed);

// Spatial-then-angular and angular-then-spatial evaluation orders agree with
// each other and with the production route to 1e-12.
PropertyResult check_order_invariance(int n_cases, std::uint64_t seed);

// The 16 gather weights sum to 1: interpolating a constant-one field at
// random clamped positions returns 1 to 1e-12 everywhere.
PropertyResult check_partition_of_unity(std::int64_t min_positions, std::uint64_t seed);

// Single-plane fields with affine textures are reproduced exactly by the
// constant warp (du, dv, d*du, d*dv) on interior pixels (multilinear
// interpolation is exact on affine functions).
PropertyResult check_planar_warp(std::uint64_t seed);

// Substituting the oracle offsets recovers masked raindrop regions from the
// degraded field to within bilinear texture error (2/255 mean abs), mask
// eroded by each scene's drop blur support, unreachable pixels excluded.
PropertyResult check_oracle_recovery(int n_scenes, std::uint64_t seed);

struct OpCheck {
    std::string name;
    double tol = 0.0;
    GradCheckReport report;  // worst case over the seed sweep
};

// Finite-difference validation of every tape operator, the network blocks,
// the three losses, and the assembled model, `seeds` independent draws per
// item. The SSIM loss is held to 10x tol (its blurred-map quotients lose one
// digit). Inputs are generated away from activation kinks and interpolation
// cell boundaries.
std::vector<OpCheck> gradcheck_suite(double tol, int seeds, std::uint64_t seed);

// Full battery at self-test sizes: the five properties above plus a rollup
// of the gradient suite. All entries pass on a healthy build.
std::vector<PropertyResult> run_selftest(std::uint64_t seed);

std::string property_line(const PropertyResult& r);
std::string opcheck_line(const OpCheck& c);

}  // namespace lfrr
