#include "switching/rl.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "switching/rng.hpp"

namespace switching {

ValueApproximator::ValueApproximator(ValueNetConfig cfg, int num_regimes, int state_dim,
                                     double horizon, TerminalRewardFn terminal)
    : cfg_(std::move(cfg)),
      num_regimes_(num_regimes),
      state_dim_(state_dim),
      horizon_(horizon),
      terminal_(std::move(terminal)) {
    if (num_regimes_ < 2) throw ValidationError("value net: need at least two regimes");
    if (!(horizon_ > 0)) throw ValidationError("value net: horizon must be positive");
    if (!terminal_) throw ValidationError("value net: terminal reward required");
    feature_dim_ = state_dim_;
    if (cfg_.include_time) ++feature_dim_;
    if (cfg_.include_regime && !cfg_.per_regime_heads) feature_dim_ += num_regimes_;

    Architecture arch;
    arch.input_dim = feature_dim_;
    arch.hidden = cfg_.hidden;
    arch.activations = cfg_.activations;
    arch.output_dim = cfg_.per_regime_heads ? num_regimes_ : 1;
    net_ = Mlp(arch);
}

void ValueApproximator::fill_features(double t, const VectorXd& x, int regime,
                                      double* column) const {
    int idx = 0;
    if (cfg_.include_time) column[idx++] = t;
    for (int d = 0; d < state_dim_; ++d) column[idx++] = x[d];
    if (cfg_.include_regime && !cfg_.per_regime_heads)
        for (int j = 0; j < num_regimes_; ++j) column[idx++] = j == regime ? 1.0 : 0.0;
}

double ValueApproximator::value(const VectorXd& params, double t, const VectorXd& x,
                                int regime) const {
    if (regime < 0 || regime >= num_regimes_)
        throw ValidationError("value net: regime out of range");
    MatrixXd features(feature_dim_, 1), out;
    fill_features(t, x, regime, features.data());
    net_.forward(params, features, out);
    return terminal_(x) + (horizon_ - t) * out(output_row(regime), 0);
}

void ValueApproximator::gradient(const VectorXd& params, double t, const VectorXd& x,
                                 int regime, VectorXd& grad, double* value_out) const {
    MatrixXd features(feature_dim_, 1), out;
    fill_features(t, x, regime, features.data());
    MlpWorkspace ws;
    net_.forward(params, features, out, &ws);
    VectorXd w(1);
    w[0] = horizon_ - t;
    net_.backward_weighted(params, ws, w, {output_row(regime)}, grad);
    if (value_out) *value_out = terminal_(x) + (horizon_ - t) * out(output_row(regime), 0);
}

void ValueApproximator::values_batch(const VectorXd& params, double t, const MatrixXd& X,
                                     MatrixXd& vals) const {
    const int B = static_cast<int>(X.cols());
    const int m = num_regimes_;
    vals.resize(m, B);
    VectorXd x(state_dim_);
    MatrixXd out;
    if (cfg_.per_regime_heads) {
        MatrixXd features(feature_dim_, B);
        for (int b = 0; b < B; ++b) {
            x = X.col(b);
            fill_features(t, x, 0, features.data() + std::size_t(b) * feature_dim_);
        }
        net_.forward(params, features, out);
        for (int b = 0; b < B; ++b) {
            x = X.col(b);
            const double h = terminal_(x);
            for (int j = 0; j < m; ++j) vals(j, b) = h + (horizon_ - t) * out(j, b);
        }
        return;
    }
    // regime-major columns: col = j * B + b
    MatrixXd features(feature_dim_, std::size_t(m) * B);
    for (int j = 0; j < m; ++j)
        for (int b = 0; b < B; ++b) {
            x = X.col(b);
            fill_features(t, x, j, features.data() + (std::size_t(j) * B + b) * feature_dim_);
        }
    net_.forward(params, features, out);
    for (int b = 0; b < B; ++b) {
        x = X.col(b);
        const double h = terminal_(x);
        for (int j = 0; j < m; ++j) vals(j, b) = h + (horizon_ - t) * out(0, j * B + b);
    }
}

MatrixXd policy_from_params(const ValueApproximator& net, const VectorXd& params,
                            const SwitchingModel& model, double t, const VectorXd& x,
                            double exponent_cap) {
    const int m = model.num_regimes;
    VectorXd values(m);
    for (int j = 0; j < m; ++j) values[j] = net.value(params, t, x, j);
    MatrixXd generator(m, m);
    for (int i = 0; i < m; ++i)
        generator.row(i) = optimal_intensity(values, i, model, exponent_cap).rates.transpose();
    return generator;
}

double delta_xi(const ValueApproximator& net, const VectorXd& params,
                const SwitchingModel& model, double t, const VectorXd& x, int regime,
                const VectorXd& x_next, int regime_next, double reward, double dt,
                double exponent_cap) {
    const int m = model.num_regimes;
    VectorXd values(m);
    for (int j = 0; j < m; ++j) values[j] = net.value(params, t, x, j);
    const RegimeIntensityRow row = optimal_intensity(values, regime, model, exponent_cap);
    return net.value(params, t + dt, x_next, regime_next) - values[regime] +
           (reward + model.temperature * entropy_regularizer(row)) * dt -
           model.switch_cost(regime, regime_next);
}

double delta_xi(const ValueApproximator& net, const VectorXd& params,
                const SwitchingModel& model, const EpisodePath& path, int k,
                double exponent_cap) {
    const double dt = path.times[1] - path.times[0];
    return delta_xi(net, params, model, path.times[k], path.states.row(k).transpose(),
                    path.regimes[k], path.states.row(k + 1).transpose(), path.regimes[k + 1],
                    path.rewards[k], dt, exponent_cap);
}

void TrainConfig::validate(int state_dim, int num_regimes) const {
    if (episodes < 0 || batch < 1)
        throw ValidationError("train: episodes must be >= 0 and batch >= 1");
    if (schedule == RateSchedule::robbins_monro) {
        if (!(rm_nu <= 1.0) || !(rm_A > 0) || !(rm_B > 0))
            throw ValidationError("train: robbins-monro schedule needs nu <= 1, A > 0, B > 0");
    }
    if (exploring_starts) {
        if (start_lo.size() != state_dim || start_hi.size() != state_dim)
            throw ValidationError("train: exploring-start box dimension mismatch");
    } else if (x0.size() != state_dim) {
        throw ValidationError("train: initial state dimension mismatch");
    }
    if (!exploring_starts && (i0 < 0 || i0 >= num_regimes))
        throw ValidationError("train: initial regime out of range");
}

namespace {

// model-free view: everything train() may legally read from the model
struct TaskView {
    int m;
    double horizon;
    double lambda;
    MatrixXd costs;
};

struct AdamState {
    VectorXd m1, m2;
    long t = 0;
    void init(int n) {
        m1 = VectorXd::Zero(n);
        m2 = VectorXd::Zero(n);
        t = 0;
    }
    void apply(double rate, double beta1, double beta2, double eps, const VectorXd& direction,
               VectorXd& params) {
        ++t;
        m1 = beta1 * m1 + (1 - beta1) * direction;
        m2 = beta2 * m2 + (1 - beta2) * direction.cwiseProduct(direction);
        const double c1 = 1 - std::pow(beta1, double(t));
        const double c2 = 1 - std::pow(beta2, double(t));
        params.array() += rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
    }
};

double schedule_rate(const TrainConfig& cfg, int update_index) {
    switch (cfg.schedule) {
        case RateSchedule::robbins_monro:
            return cfg.rm_A / (std::pow(double(update_index), cfg.rm_nu) + cfg.rm_B);
        default:
            return cfg.base_rate;
    }
}

struct RowSample {
    double lam_entropy = 0;
    int action = 0;
    bool clamped = false;
};

// lambda R of the exponential-formula row built from value estimates
double lam_entropy_from_values(const TaskView& task, const Eigen::Ref<const VectorXd>& vals,
                               int regime, double exponent_cap) {
    double entropy = 0;
    for (int j = 0; j < task.m; ++j) {
        if (j == regime) continue;
        const double e = (vals[j] - task.costs(regime, j) - vals[regime]) / task.lambda;
        if (e > exponent_cap) {
            std::ostringstream os;
            os << "train: intensity exponent " << e << " for pair (" << regime << "->" << j
               << ") exceeds cap " << exponent_cap;
            throw OverflowError(os.str());
        }
        const double r = std::exp(e);
        if (r > 0) entropy += r - r * std::log(r);
    }
    return task.lambda * entropy;
}

// exponential-formula row from value estimates, entropy term, and a sampled
// action under the first-order kernel with clamping
RowSample sample_policy_action(const TaskView& task, const Eigen::Ref<const VectorXd>& vals,
                               int regime, double dt, double exponent_cap,
                               std::mt19937_64& rng) {
    RowSample out;
    double entropy = 0, mass = 0;
    VectorXd probs = VectorXd::Zero(task.m);
    for (int j = 0; j < task.m; ++j) {
        if (j == regime) continue;
        const double e = (vals[j] - task.costs(regime, j) - vals[regime]) / task.lambda;
        if (e > exponent_cap) {
            std::ostringstream os;
            os << "train: intensity exponent " << e << " for pair (" << regime << "->" << j
               << ") exceeds cap " << exponent_cap;
            throw OverflowError(os.str());
        }
        const double r = std::exp(e);
        if (r > 0) entropy += r - r * std::log(r);
        probs[j] = r * dt;
        mass += probs[j];
    }
    out.lam_entropy = task.lambda * entropy;
    double scale = 1.0;
    if (mass > 1.0) {
        scale = 1.0 / mass;
        out.clamped = true;
    }
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    double cum = 0;
    out.action = regime;
    for (int j = 0; j < task.m; ++j) {
        if (j == regime) continue;
        cum += probs[j] * scale;
        if (u < cum) {
            out.action = j;
            break;
        }
    }
    return out;
}

}  // namespace

TrainResult train(const ValueApproximator& net, const SwitchingModel& model,
                  const SimConfig& sim, const TrainConfig& cfg, const EnvironmentFn& env,
                  const VectorXd& initial_params) {
    cfg.validate(net.state_dim(), net.num_regimes());
    sim.validate(net.horizon());
    net.net().check_params(initial_params);
    const TaskView task{model.num_regimes, model.horizon, model.temperature,
                        model.switch_cost};
    if (task.m != net.num_regimes())
        throw ValidationError("train: net/model regime count mismatch");

    const int B = cfg.batch;
    const int K = sim.steps;
    const double dt = sim.dt;
    const bool online = cfg.mode == TrainMode::online;

    TrainResult result;
    result.params = initial_params;
    AdamState adam;
    adam.init(net.param_count());

    MatrixXd X(net.state_dim(), B), X_prev(net.state_dim(), B), X_next(net.state_dim(), B);
    Eigen::VectorXi I(B), I_prev(B), I_next(B);
    MatrixXd vals;
    MatrixXd sample_features(net.feature_dim(), std::size_t(B) * K);
    std::vector<int> row_select(std::size_t(B) * K);
    VectorXd weights(std::size_t(B) * K);
    VectorXd pending_vcur(B), pending_freward(B), pending_lamR(B), pending_gcost(B);
    VectorXd x_scratch(net.state_dim()), x_out(net.state_dim());
    VectorXd psi(net.param_count()), step_grad(net.param_count()), g(net.param_count());
    MlpWorkspace ws;
    MatrixXd net_out, vals_prev;

    // Per-step batch-mean update used in online mode. The whole bracket is
    // rebuilt with the current parameters (they move within the episode);
    // v(t_k, .) at the landing point is taken from `vals`, already refreshed
    // by the caller. `terminal_step` switches the landing value to h(X_K).
    auto online_update = [&](int k_prev, double rate, bool terminal_step) {
        const double tprev = k_prev * dt;
        net.values_batch(result.params, tprev, X_prev, vals_prev);
        step_grad.setZero();
        for (int b = 0; b < B; ++b) {
            double v_land;
            if (terminal_step) {
                x_scratch = X.col(b);
                v_land = net.terminal(x_scratch);
            } else {
                v_land = vals(I[b], b);
            }
            const double lam_r =
                lam_entropy_from_values(task, vals_prev.col(b), I_prev[b], cfg.exponent_cap);
            const double dxi = v_land - vals_prev(I_prev[b], b) +
                               (pending_freward[b] + lam_r) * dt - pending_gcost[b];
            x_scratch = X_prev.col(b);
            net.gradient(result.params, tprev, x_scratch, I_prev[b], g);
            step_grad += dxi * g;
        }
        step_grad /= B;
        if (cfg.schedule == RateSchedule::adaptive_moment)
            adam.apply(cfg.base_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, step_grad,
                       result.params);
        else
            result.params += rate * step_grad;
    };

    for (int u = 1; u <= cfg.episodes; ++u) {
        const auto tic = std::chrono::steady_clock::now();
        const double rate = schedule_rate(cfg, u);

        std::vector<std::mt19937_64> env_rng, act_rng;
        env_rng.reserve(B);
        act_rng.reserve(B);
        for (int b = 0; b < B; ++b) {
            const std::uint64_t ep = std::uint64_t(u - 1) * B + b;
            env_rng.push_back(make_engine(cfg.seed, ep, 0));
            act_rng.push_back(make_engine(cfg.seed, ep, 1));
        }

        for (int b = 0; b < B; ++b) {
            if (cfg.exploring_starts) {
                std::mt19937_64 init_rng =
                    make_engine(cfg.seed, std::uint64_t(u - 1) * B + b, 2);
                std::uniform_real_distribution<double> uni(0.0, 1.0);
                for (int d = 0; d < net.state_dim(); ++d)
                    X(d, b) =
                        cfg.start_lo[d] + (cfg.start_hi[d] - cfg.start_lo[d]) * uni(init_rng);
                I[b] = std::uniform_int_distribution<int>(0, task.m - 1)(init_rng);
            } else {
                X.col(b) = cfg.x0;
                I[b] = cfg.i0;
            }
        }

        psi.setZero();

        for (int k = 0; k < K; ++k) {
            const double t = k * dt;
            net.values_batch(result.params, t, X, vals);

            // settle the previous bracket now that v(t_k, .) is available
            if (k > 0) {
                for (int b = 0; b < B; ++b)
                    weights[std::size_t(k - 1) * B + b] =
                        vals(I[b], b) - pending_vcur[b] +
                        (pending_freward[b] + pending_lamR[b]) * dt - pending_gcost[b];
                if (online) {
                    online_update(k - 1, rate, false);
                    net.values_batch(result.params, t, X, vals);
                }
            }

            for (int b = 0; b < B; ++b) {
                x_scratch = X.col(b);
                net.fill_features(t, x_scratch, I[b],
                                  sample_features.data() +
                                      (std::size_t(k) * B + b) * net.feature_dim());
                row_select[std::size_t(k) * B + b] = net.output_row(I[b]);

                const RowSample rs = sample_policy_action(task, vals.col(b), I[b], dt,
                                                          cfg.exponent_cap, act_rng[b]);
                if (rs.clamped) ++result.clamped_steps;
                double f_reward = 0;
                env(t, x_scratch, I[b], rs.action, env_rng[b], x_out, f_reward);
                X_next.col(b) = x_out;
                I_next[b] = rs.action;
                pending_vcur[b] = vals(I[b], b);
                pending_freward[b] = f_reward;
                pending_lamR[b] = rs.lam_entropy;
                pending_gcost[b] = task.costs(I[b], rs.action);
            }
            X_prev.swap(X);
            I_prev.swap(I);
            X.swap(X_next);
            I.swap(I_next);
        }
        result.total_steps += std::int64_t(B) * K;

        // terminal bracket: v(T, x, i) = h(x) structurally
        for (int b = 0; b < B; ++b) {
            x_scratch = X.col(b);
            weights[std::size_t(K - 1) * B + b] =
                net.terminal(x_scratch) - pending_vcur[b] +
                (pending_freward[b] + pending_lamR[b]) * dt - pending_gcost[b];
        }

        if (online) {
            online_update(K - 1, rate, true);
            psi = step_grad;
        } else {
            // single weighted reverse pass over all samples; d v / d xi
            // carries the (T - t_k) factor and the batch mean the 1/B
            for (int k = 0; k < K; ++k)
                weights.segment(std::size_t(k) * B, B) *= (net.horizon() - k * dt) / B;
            net.net().forward(result.params, sample_features, net_out, &ws);
            net.net().backward_weighted(result.params, ws, weights, row_select, psi);

            if (cfg.schedule == RateSchedule::adaptive_moment)
                adam.apply(cfg.base_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, psi,
                           result.params);
            else
                result.params += rate * psi;
        }

        TrainLogEntry entry;
        entry.episode = u;
        entry.loss = psi.squaredNorm();
        entry.param_norm = result.params.norm();
        entry.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
        result.log.push_back(entry);

        if (!std::isfinite(entry.loss) ||
            result.params.cwiseAbs().maxCoeff() > cfg.divergence_norm)
            throw SolverError("train: diverged at update " + std::to_string(u));
        if (cfg.observer) cfg.observer(u, result.params);
    }
    return result;
}

}  // namespace switching
