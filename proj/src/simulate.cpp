#include "switching/simulate.hpp"

#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "switching/rng.hpp"

namespace switching {

void EpisodePath::validate(int num_regimes) const {
    const int K = static_cast<int>(rewards.size());
    if (times.size() != K + 1 || states.rows() != K + 1 || regimes.size() != K + 1)
        throw ValidationError("path: inconsistent lengths");
    const double dt = times[1] - times[0];
    for (int k = 1; k <= K; ++k)
        if (std::abs(times[k] - times[k - 1] - dt) > 1e-9)
            throw ValidationError("path: times must be uniform");
    std::size_t jump_idx = 0;
    for (int k = 0; k < K; ++k) {
        if (regimes[k] < 0 || regimes[k] >= num_regimes)
            throw ValidationError("path: regime out of range");
        const bool changed = regimes[k + 1] != regimes[k];
        const bool recorded = jump_idx < jumps.size() && jumps[jump_idx].step == k;
        if (changed != recorded)
            throw ValidationError("path: jump records must match regime changes");
        if (recorded) ++jump_idx;
    }
    if (jump_idx != jumps.size())
        throw ValidationError("path: dangling jump records");
}

void SimConfig::validate(double horizon) const {
    if (!(dt > 0) || steps < 1 || batch < 1)
        throw ValidationError("sim: dt, steps and batch must be positive");
    if (std::abs(dt * steps - horizon) > 1e-12 * std::max(1.0, horizon))
        throw ValidationError("sim: dt * steps must equal the horizon");
}

namespace {

struct StepScratch {
    VectorXd mu, z, x_next;
    MatrixXd sigma;
    void init(const SwitchingModel& m) {
        mu.resize(m.state_dim);
        z.resize(m.noise_dim);
        x_next.resize(m.state_dim);
        sigma.resize(m.state_dim, m.noise_dim);
    }
};

void euler_update(const SwitchingModel& model, double t, const VectorXd& x, int regime,
                  double dt, std::mt19937_64& rng, StepScratch& s,
                  std::normal_distribution<double>& normal) {
    model.drift(t, x, regime, s.mu);
    model.vol(t, x, regime, s.sigma);
    for (int d = 0; d < model.noise_dim; ++d) s.z[d] = normal(rng);
    s.x_next = x + dt * s.mu;
    s.x_next.noalias() += std::sqrt(dt) * (s.sigma * s.z);
}

int sample_transition(const VectorXd& rates, int regime, double dt, double u,
                      bool clamp_intensity, bool& clamped) {
    double total = 0;
    const int m = static_cast<int>(rates.size());
    for (int j = 0; j < m; ++j)
        if (j != regime) total += rates[j] * dt;
    double scale = 1.0;
    clamped = false;
    if (total > 1.0) {
        if (!clamp_intensity)
            throw SolverError("sim: transition mass exceeds one and clamping is disabled");
        scale = 1.0 / total;
        clamped = true;
    }
    double cum = 0;
    for (int j = 0; j < m; ++j) {
        if (j == regime) continue;
        cum += rates[j] * dt * scale;
        if (u < cum) return j;
    }
    return regime;
}

}  // namespace

StepResult step(double t, const VectorXd& x, int regime, const RegimeIntensityRow& policy_row,
                const SwitchingModel& model, double dt, std::mt19937_64& rng,
                bool clamp_intensity) {
    policy_row.validate();
    StepScratch s;
    s.init(model);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    euler_update(model, t, x, regime, dt, rng, s, normal);
    const double u = uniform(rng);
    StepResult out;
    out.reward = model.running_reward(t, x, regime);
    out.state = s.x_next;
    out.regime = sample_transition(policy_row.rates, regime, dt, u, clamp_intensity, out.clamped);
    return out;
}

namespace {

// shared path loop; visit(k, t, x, i, reward, row, next_x, next_i) is called
// once per step after the transition is drawn
template <typename Visitor>
int run_path(const SwitchingModel& model, const GeneratorPolicy& policy, const SimConfig& sim,
             const VectorXd& x0, int i0, std::uint64_t path_index, Visitor&& visit) {
    std::mt19937_64 rng = make_engine(sim.seed, path_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    StepScratch s;
    s.init(model);
    VectorXd x = x0;
    int regime = i0;
    int clamped = 0;
    MatrixXd generator;

    for (int k = 0; k < sim.steps; ++k) {
        const double t = k * sim.dt;
        const RegimeIntensityRow row = policy.row_at(t, x, regime);
        euler_update(model, t, x, regime, sim.dt, rng, s, normal);
        const double u = uniform(rng);

        int next;
        bool was_clamped = false;
        if (sim.exact_exponential_kernel) {
            policy.generator_at(t, x, generator);
            const MatrixXd kernel = (generator * sim.dt).exp();
            double cum = 0;
            next = regime;
            for (int j = 0; j < model.num_regimes; ++j) {
                if (j == regime) continue;
                cum += kernel(regime, j);
                if (u < cum) {
                    next = j;
                    break;
                }
            }
        } else {
            next = sample_transition(row.rates, regime, sim.dt, u, sim.clamp_intensity,
                                     was_clamped);
        }
        if (was_clamped) ++clamped;

        visit(k, t, x, regime, model.running_reward(t, x, regime), row, s.z, s.x_next, next);
        x = s.x_next;
        regime = next;
    }
    return clamped;
}

}  // namespace

std::vector<EpisodePath> simulate_batch(const SwitchingModel& model,
                                        const GeneratorPolicy& policy, const SimConfig& sim,
                                        const VectorXd& x0, int i0) {
    model.validate();
    sim.validate(model.horizon);
    if (i0 < 0 || i0 >= model.num_regimes)
        throw ValidationError("sim: initial regime out of range");

    std::vector<EpisodePath> paths(sim.batch);
    for (int p = 0; p < sim.batch; ++p) {
        EpisodePath& path = paths[p];
        path.times.resize(sim.steps + 1);
        path.states.resize(sim.steps + 1, model.state_dim);
        path.regimes.resize(sim.steps + 1);
        path.rewards.resize(sim.steps);
        path.noise.resize(sim.steps, model.noise_dim);
        path.states.row(0) = x0.transpose();
        path.regimes[0] = i0;
        path.times[0] = 0;

        path.clamped_steps = run_path(
            model, policy, sim, x0, i0, static_cast<std::uint64_t>(p),
            [&](int k, double t, const VectorXd&, int regime, double reward,
                const RegimeIntensityRow&, const VectorXd& z, const VectorXd& x_next,
                int next) {
                path.rewards[k] = reward;
                path.noise.row(k) = z.transpose();
                path.times[k + 1] = t + sim.dt;
                path.states.row(k + 1) = x_next.transpose();
                path.regimes[k + 1] = next;
                if (next != regime)
                    path.jumps.push_back({k, t + sim.dt, regime, next});
            });
    }
    return paths;
}

double episode_payoff(const EpisodePath& path, const SwitchingModel& model,
                      const GeneratorPolicy& policy) {
    const int K = static_cast<int>(path.rewards.size());
    const double dt = path.times[1] - path.times[0];
    double j = 0;
    VectorXd x(model.state_dim);
    for (int k = 0; k < K; ++k) {
        x = path.states.row(k).transpose();
        const RegimeIntensityRow row = policy.row_at(path.times[k], x, path.regimes[k]);
        j += (path.rewards[k] + model.temperature * entropy_regularizer(row)) * dt;
        j -= model.switch_cost(path.regimes[k], path.regimes[k + 1]);
    }
    x = path.states.row(K).transpose();
    return j + model.terminal_reward(x);
}

namespace {

struct RunningMoments {
    long n = 0;
    double mean = 0, m2 = 0;
    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
};

BatchStats finish(const RunningMoments& acc, long clamped, long total_steps) {
    BatchStats st;
    st.n = acc.n;
    st.mean = acc.mean;
    st.stddev = std::sqrt(acc.variance());
    st.std_error = acc.n > 0 ? st.stddev / std::sqrt(double(acc.n)) : 0.0;
    st.clamped_steps = clamped;
    st.total_steps = total_steps;
    return st;
}

}  // namespace

BatchStats payoff_stats(const SwitchingModel& model, const GeneratorPolicy& policy,
                        const SimConfig& sim, const VectorXd& x0, int i0) {
    model.validate();
    sim.validate(model.horizon);
    RunningMoments acc;
    long clamped = 0;
    VectorXd x_terminal(model.state_dim);
    for (int p = 0; p < sim.batch; ++p) {
        double j = 0;
        clamped += run_path(model, policy, sim, x0, i0, static_cast<std::uint64_t>(p),
                            [&](int k, double, const VectorXd&, int regime, double reward,
                                const RegimeIntensityRow& row, const VectorXd&,
                                const VectorXd& x_next, int next) {
                                j += (reward + model.temperature * entropy_regularizer(row)) *
                                     sim.dt;
                                j -= model.switch_cost(regime, next);
                                if (k + 1 == sim.steps) x_terminal = x_next;
                            });
        j += model.terminal_reward(x_terminal);
        acc.add(j);
    }
    return finish(acc, clamped, static_cast<long>(sim.batch) * sim.steps);
}

std::vector<double> martingale_increments(const EpisodePath& path, const ValueFn& value,
                                          const SwitchingModel& model,
                                          const GeneratorPolicy* policy) {
    const int K = static_cast<int>(path.rewards.size());
    const double dt = path.times[1] - path.times[0];
    std::vector<double> dm(K);
    VectorXd x(model.state_dim), x_next(model.state_dim), values(model.num_regimes);
    for (int k = 0; k < K; ++k) {
        x = path.states.row(k).transpose();
        x_next = path.states.row(k + 1).transpose();
        const int i = path.regimes[k];
        const int i_next = path.regimes[k + 1];

        double entropy;
        if (policy) {
            entropy = entropy_regularizer(policy->row_at(path.times[k], x, i));
        } else {
            for (int j = 0; j < model.num_regimes; ++j)
                values[j] = value(path.times[k], x, j);
            entropy = entropy_regularizer(optimal_intensity(values, i, model));
        }
        dm[k] = value(path.times[k + 1], x_next, i_next) - value(path.times[k], x, i) +
                (path.rewards[k] + model.temperature * entropy) * dt -
                model.switch_cost(i, i_next);
    }
    return dm;
}

BatchStats martingale_total_stats(const SwitchingModel& model, const GeneratorPolicy& policy,
                                  const ValueFn& value, const SimConfig& sim,
                                  const VectorXd& x0, int i0) {
    model.validate();
    sim.validate(model.horizon);
    RunningMoments acc;
    long clamped = 0;
    for (int p = 0; p < sim.batch; ++p) {
        double total = 0;
        clamped += run_path(
            model, policy, sim, x0, i0, static_cast<std::uint64_t>(p),
            [&](int k, double t, const VectorXd& x, int regime, double reward,
                const RegimeIntensityRow& row, const VectorXd&, const VectorXd& x_next,
                int next) {
                const double dm = value(t + sim.dt, x_next, next) - value(t, x, regime) +
                                  (reward + model.temperature * entropy_regularizer(row)) *
                                      sim.dt -
                                  model.switch_cost(regime, next);
                total += dm;
                (void)k;
            });
        acc.add(total);
    }
    return finish(acc, clamped, static_cast<long>(sim.batch) * sim.steps);
}

EnvironmentFn make_environment(const SwitchingModel& model, double dt) {
    // scratch is shared across calls; environments are not thread-safe by
    // design, each worker builds its own
    auto scratch = std::make_shared<StepScratch>();
    scratch->init(model);
    return [model, dt, scratch](double t, const VectorXd& x, int regime, int /*action*/,
                                std::mt19937_64& rng, VectorXd& x_out, double& reward_out) {
        std::normal_distribution<double> normal(0.0, 1.0);
        euler_update(model, t, x, regime, dt, rng, *scratch, normal);
        x_out = scratch->x_next;
        reward_out = model.running_reward(t, x, regime);
    };
}

}  // namespace switching
