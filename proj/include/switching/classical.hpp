#pragma once

#include <vector>

#include "switching/pde.hpp"

namespace switching {

// Obstacle scheme for the classical switching system
//   min{ -dV_i/dt - L_i V_i - f,  V_i - max_{j != i}(V_j - g_ij) } = 0
// via implicit diffusion step followed by projection sweeps. The temperature
// plays no role; the truncation boundary uses K = K_{f,h} (the vanishing-
// temperature limit of the exploratory one).
ValueField solve_variational_inequality(const SwitchingModel& model, const SpaceTimeGrid& grid,
                                        const PdeOptions& options = {});

struct SweepRow {
    double lambda = 0;
    double sup_distance = 0;  // interior sup distance to the VI solution
};

// Solves the exploratory system for each temperature and records the sup
// distance to the VI reference over the interior (two boundary layers
// excluded). lambdas must be strictly positive and strictly decreasing.
std::vector<SweepRow> lambda_sweep(const SwitchingModel& model, const SpaceTimeGrid& grid,
                                   const std::vector<double>& lambdas,
                                   const PdeOptions& options = {});

}  // namespace switching
