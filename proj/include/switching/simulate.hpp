#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "switching/model.hpp"
#include "switching/policy.hpp"

namespace switching {

struct JumpRecord {
    int step = 0;     // regime changed between step and step + 1
    double time = 0;  // t_{k+1}, when the new regime takes effect
    int from = 0;
    int to = 0;
};

// One simulated trajectory on the uniform step grid. Brownian draws are kept
// so a path can be replayed exactly.
struct EpisodePath {
    VectorXd times;           // K + 1
    MatrixXd states;          // (K + 1) x n
    Eigen::VectorXi regimes;  // K + 1
    VectorXd rewards;         // K, running reward at the step start
    MatrixXd noise;           // K x d, standard normal draws
    std::vector<JumpRecord> jumps;
    int clamped_steps = 0;

    void validate(int num_regimes) const;
};

struct SimConfig {
    double dt = 0.01;
    int steps = 100;
    int batch = 1;
    std::uint64_t seed = 0;
    bool clamp_intensity = true;            // rescale when sum_j pi_ij dt > 1
    bool exact_exponential_kernel = false;  // diagnostics only

    void validate(double horizon) const;  // dt * steps must equal the horizon
};

struct StepResult {
    VectorXd state;
    int regime = 0;
    double reward = 0;
    bool clamped = false;
};

// One transition of Algorithm-style environment semantics: the state advances
// by Euler-Maruyama under the pre-jump regime, the regime is drawn from the
// first-order kernel P(i -> j) = pi_ij dt (rescaled to total mass one when it
// overflows), and the reward is f at the step start. RNG order per step is
// fixed: d normals, then one uniform.
StepResult step(double t, const VectorXd& x, int regime, const RegimeIntensityRow& policy_row,
                const SwitchingModel& model, double dt, std::mt19937_64& rng,
                bool clamp_intensity = true);

// Independent paths; path p uses the substream (seed, p), so batches are
// reproducible independent of scheduling.
std::vector<EpisodePath> simulate_batch(const SwitchingModel& model,
                                        const GeneratorPolicy& policy, const SimConfig& sim,
                                        const VectorXd& x0, int i0);

// J = sum_k [f + lambda R] dt - sum of switch costs + h(X_T)
double episode_payoff(const EpisodePath& path, const SwitchingModel& model,
                      const GeneratorPolicy& policy);

struct BatchStats {
    long n = 0;
    double mean = 0;
    double stddev = 0;
    double std_error = 0;
    long clamped_steps = 0;
    long total_steps = 0;
};

// Streaming payoff statistics (no path storage); used for large batches.
BatchStats payoff_stats(const SwitchingModel& model, const GeneratorPolicy& policy,
                        const SimConfig& sim, const VectorXd& x0, int i0);

using ValueFn = std::function<double(double t, const VectorXd& x, int regime)>;

// dM_k = v(t_{k+1}, X_{k+1}, I_{k+1}) - v(t_k, X_k, I_k)
//        + (f + lambda R) dt - g_{I_k I_{k+1}}
// The entropy term uses `policy` when given, otherwise the feedback row
// derived from `value` itself.
std::vector<double> martingale_increments(const EpisodePath& path, const ValueFn& value,
                                          const SwitchingModel& model,
                                          const GeneratorPolicy* policy = nullptr);

// Streaming statistics of the per-path total M increment.
BatchStats martingale_total_stats(const SwitchingModel& model, const GeneratorPolicy& policy,
                                  const ValueFn& value, const SimConfig& sim,
                                  const VectorXd& x0, int i0);

// Algorithm-style environment: (t, x, i, action j) -> (x', f). The state
// update never reads j; the regime handed back to the caller is j itself.
using EnvironmentFn = std::function<void(double t, const VectorXd& x, int regime, int action,
                                         std::mt19937_64& rng, VectorXd& x_out,
                                         double& reward_out)>;

EnvironmentFn make_environment(const SwitchingModel& model, double dt);

}  // namespace switching
