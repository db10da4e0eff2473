#pragma once

#include <optional>

#include "switching/model.hpp"
#include "switching/net.hpp"
#include "switching/simulate.hpp"

namespace switching {

// Function family v(t, x, i) = h(x) + (T - t) N(features); the terminal
// condition holds for every parameter vector by construction.
struct ValueNetConfig {
    std::vector<int> hidden;
    std::vector<Activation> activations;
    bool include_time = true;
    bool include_regime = true;     // one-hot regime inputs (single head)
    bool per_regime_heads = false;  // m output heads, no regime input
};

class ValueApproximator {
public:
    ValueApproximator() = default;
    ValueApproximator(ValueNetConfig cfg, int num_regimes, int state_dim, double horizon,
                      TerminalRewardFn terminal);

    [[nodiscard]] const ValueNetConfig& config() const { return cfg_; }
    [[nodiscard]] const Mlp& net() const { return net_; }
    [[nodiscard]] const Architecture& architecture() const { return net_.arch(); }
    [[nodiscard]] int param_count() const { return net_.param_count(); }
    [[nodiscard]] int num_regimes() const { return num_regimes_; }
    [[nodiscard]] int state_dim() const { return state_dim_; }
    [[nodiscard]] double horizon() const { return horizon_; }

    [[nodiscard]] VectorXd init_params(std::uint64_t seed) const {
        return net_.init_params(seed);
    }

    [[nodiscard]] double value(const VectorXd& params, double t, const VectorXd& x,
                               int regime) const;

    // gradient of v with respect to the parameters; value_out receives v
    void gradient(const VectorXd& params, double t, const VectorXd& x, int regime,
                  VectorXd& grad, double* value_out = nullptr) const;

    // batched helpers used by train()
    [[nodiscard]] int feature_dim() const { return feature_dim_; }
    void fill_features(double t, const VectorXd& x, int regime, double* column) const;
    [[nodiscard]] int output_row(int regime) const {
        return cfg_.per_regime_heads ? regime : 0;
    }
    [[nodiscard]] double terminal(const VectorXd& x) const { return terminal_(x); }

    // v(t, x, j) for all regimes j and batch columns X; vals is (m x B)
    void values_batch(const VectorXd& params, double t, const MatrixXd& X,
                      MatrixXd& vals) const;

private:
    ValueNetConfig cfg_;
    Mlp net_;
    int num_regimes_ = 0;
    int state_dim_ = 0;
    int feature_dim_ = 0;
    double horizon_ = 0;
    TerminalRewardFn terminal_;
};

// Full m x m generator built from net values via the exponential formula.
MatrixXd policy_from_params(const ValueApproximator& net, const VectorXd& params,
                            const SwitchingModel& model, double t, const VectorXd& x,
                            double exponent_cap = 700.0);

// dxi_k = v(t+dt, x', i') - v(t, x, i) + (f + lambda R(pi^xi, i)) dt - g_{i i'}
double delta_xi(const ValueApproximator& net, const VectorXd& params,
                const SwitchingModel& model, double t, const VectorXd& x, int regime,
                const VectorXd& x_next, int regime_next, double reward, double dt,
                double exponent_cap = 700.0);
double delta_xi(const ValueApproximator& net, const VectorXd& params,
                const SwitchingModel& model, const EpisodePath& path, int k,
                double exponent_cap = 700.0);

enum class RateSchedule { constant, adaptive_moment, robbins_monro };
enum class TrainMode { offline, online };

struct TrainConfig {
    int episodes = 1000;  // number of parameter updates; each consumes `batch` rollouts
    int batch = 64;
    TrainMode mode = TrainMode::offline;
    RateSchedule schedule = RateSchedule::adaptive_moment;
    double base_rate = 1e-3;  // constant / adaptive-moment step
    // robbins-monro alpha(i) = A / (i^nu + B)
    double rm_A = 1.0;
    double rm_B = 1.0;
    double rm_nu = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    VectorXd x0;
    int i0 = 0;
    // exploring starts: initial state uniform over [start_lo, start_hi],
    // initial regime uniform over regimes
    bool exploring_starts = false;
    VectorXd start_lo, start_hi;
    double divergence_norm = 1e6;
    double exponent_cap = 700.0;
    // read-only peek at the parameters after each update (tests, diagnostics)
    std::function<void(int update, const VectorXd& params)> observer;

    void validate(int state_dim, int num_regimes) const;
};

struct TrainLogEntry {
    int episode = 0;
    double loss = 0;        // |batch-mean Psi|^2
    double param_norm = 0;  // |xi|
    double seconds = 0;
};

struct TrainResult {
    VectorXd params;
    std::vector<TrainLogEntry> log;
    long clamped_steps = 0;
    long total_steps = 0;
};

// Martingale-orthogonality policy evaluation (offline and online updates).
// Model-free: only m, T, lambda and the switching costs are read from the
// model; dynamics enter through `env` alone.
TrainResult train(const ValueApproximator& net, const SwitchingModel& model,
                  const SimConfig& sim, const TrainConfig& cfg, const EnvironmentFn& env,
                  const VectorXd& initial_params);

}  // namespace switching
