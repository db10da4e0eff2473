#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "switching/types.hpp"

namespace switching {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Model callbacks write into out-parameters so simulation hot loops do not
// allocate per call.
using DriftFn = std::function<void(double t, const VectorXd& x, int regime, VectorXd& out)>;
using VolFn = std::function<void(double t, const VectorXd& x, int regime, MatrixXd& out)>;
using RunningRewardFn = std::function<double(double t, const VectorXd& x, int regime)>;
using TerminalRewardFn = std::function<double(const VectorXd& x)>;

// Full problem description: dynamics, rewards, switching costs, temperature,
// horizon. Immutable after construction; safe to share across workers.
struct SwitchingModel {
    int num_regimes = 0;  // m >= 2
    int state_dim = 0;    // n
    int noise_dim = 0;    // d

    DriftFn drift;
    VolFn vol;
    RunningRewardFn running_reward;
    TerminalRewardFn terminal_reward;

    MatrixXd switch_cost;     // g_ij, zero diagonal, positive off-diagonal
    double temperature = 0;   // lambda > 0
    double horizon = 0;       // T > 0
    double reward_bound = 0;  // user-declared bound on |f| + |h|

    // Promise that drift/vol/running_reward do not depend on t, letting the
    // PDE solvers sample coefficient arrays once instead of per time step.
    bool time_invariant = false;

    std::string tag;  // descriptor tag carried into manifests and hashes

    // Throws ValidationError on any violated invariant (diagonal costs,
    // triangle condition, positivity of temperature/horizon, ...).
    void validate() const;

    double cost(int from, int to) const { return switch_cost(from, to); }
};

// One generator row: rates[j] >= 0 for j != source, rates[source] set so the
// row sums to zero.
struct RegimeIntensityRow {
    int source = 0;
    VectorXd rates;

    static RegimeIntensityRow from_off_diagonal(int source, const VectorXd& off_diagonal);

    void validate() const;

    [[nodiscard]] double total_rate() const { return -rates[source]; }
};

// Normalized entropy R(pi, i) = sum_{j != i} (pi_ij - pi_ij log pi_ij),
// with 0 log 0 = 0.
double entropy_regularizer(const RegimeIntensityRow& row);

// Same, evaluated directly on an off-diagonal rate view (rates[source]
// ignored). Used by vectorized callers.
double entropy_from_rates(const VectorXd& rates, int source);

// pi*_ij = exp((V_j - g_ij - V_i) / lambda). Throws OverflowError naming the
// offending pair when an exponent exceeds exponent_cap.
RegimeIntensityRow optimal_intensity(const VectorXd& value_at_point, int regime,
                                     const SwitchingModel& model,
                                     double exponent_cap = 700.0);

// K = K_{f,h} + lambda * sup_i sum_{j != i} exp(-g_ij / lambda)
double bound_constant(const SwitchingModel& model);

// A-priori bound K (T - t) + K_{f,h} on |V_i(t, .)|.
double value_bound(const SwitchingModel& model, double t);

// H_i(pi_i, y) = sum_{j != i} pi_ij (y_j - g_ij - y_i) + lambda R(pi_i)
double hamiltonian(const RegimeIntensityRow& row, const VectorXd& values,
                   const SwitchingModel& model);

// Debug-mode verifier for the user-declared reward bound: dense-scans
// |f| + |h| over a box and returns the observed supremum (the declared
// bound must dominate it).
double scan_reward_bound(const SwitchingModel& model, const VectorXd& lo,
                         const VectorXd& hi, int points_per_axis,
                         int time_points = 9);

}  // namespace switching
