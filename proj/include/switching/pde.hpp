#pragma once

#include <limits>
#include <optional>

#include "switching/grid.hpp"
#include "switching/model.hpp"
#include "switching/policy.hpp"

namespace switching {

struct PdeOptions {
    double subiter_tol = 1e-10;  // sup-norm change stopping rule
    int max_subiters = 50;
    double peclet_threshold = 2.0;  // upwind the drift above this cell Peclet
    double exponent_cap = 700.0;
    bool strict_ellipticity = false;      // throw instead of degrading silently
    double ellipticity_floor = 1e-12;
    // Override for the constant K in the truncation boundary value
    // K (T - t) + h(x); NaN means use bound_constant(model).
    double boundary_bound_constant = std::numeric_limits<double>::quiet_NaN();
};

struct PreflightReport {
    double min_ellipticity = 0;  // smallest eigenvalue of sigma sigma^T sampled
    double max_peclet = 0;
    int upwinded_samples = 0;
    bool elliptic = false;
};

// Samples sigma sigma^T and the cell Peclet number over the grid. Ellipticity
// is recorded here only; the schemes stay monotone either way through
// upwinding.
PreflightReport preflight(const SwitchingModel& model, const SpaceTimeGrid& grid,
                          const PdeOptions& options = {});

// Backward solve of the linear system for a fixed policy:
//   dV_i/dt + L_i V_i + f_i + H_i(pi_i, V) = 0,  V_i(T, .) = h.
// Implicit in the diffusion/drift and in the own-regime decay; the cross
// coupling is resolved by fixed-point sub-iteration on the regime tuple.
ValueField solve_fixed_policy(const SwitchingModel& model, const GeneratorPolicy& policy,
                              const SpaceTimeGrid& grid, const PdeOptions& options = {});

// Same scheme with the reduced exploratory source
//   lambda sum_{j != i} exp((V_j - g_ij - V_i) / lambda)
// handled by Newton-damped sub-iteration.
ValueField solve_exploratory_hjb(const SwitchingModel& model, const SpaceTimeGrid& grid,
                                 const PdeOptions& options = {});

// Sup-norm of the discrete residual of `field` under the scheme's backward
// Euler relation; policy == nullopt evaluates the exploratory source.
// In 2-D the operator-splitting defect is part of the scheme and is included.
double residual_norm(const ValueField& field, const SwitchingModel& model,
                     const std::optional<GeneratorPolicy>& policy,
                     const PdeOptions& options = {});

// Truncation self-check: solve on `grid` and on a box twice the size at the
// same resolution; returns the sup difference over |x| inside `window` times
// the original half-width (per axis, around the box center).
double box_doubling_difference(const SwitchingModel& model, const SpaceTimeGrid& grid,
                               double window = 0.5, const PdeOptions& options = {});

}  // namespace switching
