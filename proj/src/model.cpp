#include "switching/model.hpp"

#include <cmath>
#include <sstream>

namespace switching {

void SwitchingModel::validate() const {
    if (num_regimes < 2)
        throw ValidationError("model: need at least two regimes, got " +
                              std::to_string(num_regimes));
    if (state_dim < 1 || noise_dim < 1)
        throw ValidationError("model: state_dim and noise_dim must be positive");
    if (!(temperature > 0))
        throw ValidationError("model: temperature must be positive");
    if (!(horizon > 0))
        throw ValidationError("model: horizon must be positive");
    if (reward_bound < 0)
        throw ValidationError("model: reward_bound must be nonnegative");
    if (!drift || !vol || !running_reward || !terminal_reward)
        throw ValidationError("model: all coefficient callbacks must be set");
    if (switch_cost.rows() != num_regimes || switch_cost.cols() != num_regimes)
        throw ValidationError("model: switch_cost must be m x m");

    const int m = num_regimes;
    for (int i = 0; i < m; ++i) {
        if (switch_cost(i, i) != 0.0)
            throw ValidationError("model: switch_cost diagonal must be exactly zero");
        for (int j = 0; j < m; ++j) {
            if (j != i && !(switch_cost(i, j) > 0))
                throw ValidationError("model: off-diagonal switch costs must be strictly positive");
        }
    }
    // Direct switches must beat any two-step route through an intermediate
    // regime.
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                if (i == j || j == k || i == k) continue;
                if (!(switch_cost(i, k) < switch_cost(i, j) + switch_cost(j, k))) {
                    std::ostringstream os;
                    os << "model: triangle condition violated for (" << i << "," << j
                       << "," << k << "): g_ik=" << switch_cost(i, k)
                       << " >= g_ij+g_jk=" << switch_cost(i, j) + switch_cost(j, k);
                    throw ValidationError(os.str());
                }
            }
}

RegimeIntensityRow RegimeIntensityRow::from_off_diagonal(int source,
                                                         const VectorXd& off_diagonal) {
    RegimeIntensityRow row;
    row.source = source;
    row.rates = off_diagonal;
    row.rates[source] = 0.0;
    row.rates[source] = -row.rates.sum();
    row.validate();
    return row;
}

void RegimeIntensityRow::validate() const {
    const int m = static_cast<int>(rates.size());
    if (source < 0 || source >= m)
        throw ValidationError("intensity row: source regime out of range");
    for (int j = 0; j < m; ++j) {
        if (j == source) continue;
        if (!(rates[j] >= 0) || !std::isfinite(rates[j]))
            throw ValidationError("intensity row: off-diagonal rates must be finite and nonnegative");
    }
    const double row_sum = rates.sum();
    const double scale = std::max(1.0, rates.cwiseAbs().maxCoeff());
    if (std::abs(row_sum) > 1e-12 * scale)
        throw ValidationError("intensity row: rates must sum to zero");
}

double entropy_from_rates(const VectorXd& rates, int source) {
    double r = 0.0;
    for (int j = 0; j < rates.size(); ++j) {
        if (j == source) continue;
        const double p = rates[j];
        if (p > 0.0) r += p - p * std::log(p);  // 0 log 0 = 0
    }
    return r;
}

double entropy_regularizer(const RegimeIntensityRow& row) {
    return entropy_from_rates(row.rates, row.source);
}

RegimeIntensityRow optimal_intensity(const VectorXd& value_at_point, int regime,
                                     const SwitchingModel& model, double exponent_cap) {
    const int m = model.num_regimes;
    if (value_at_point.size() != m)
        throw ValidationError("optimal_intensity: value vector must have one entry per regime");
    if (!value_at_point.allFinite())
        throw ValidationError("optimal_intensity: value vector must be finite");

    RegimeIntensityRow row;
    row.source = regime;
    row.rates = VectorXd::Zero(m);
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
        if (j == regime) continue;
        const double e =
            (value_at_point[j] - model.switch_cost(regime, j) - value_at_point[regime]) /
            model.temperature;
        if (e > exponent_cap) {
            std::ostringstream os;
            os << "optimal_intensity: exponent " << e << " for pair (" << regime << "->" << j
               << ") exceeds cap " << exponent_cap;
            throw OverflowError(os.str());
        }
        row.rates[j] = std::exp(e);
        sum += row.rates[j];
    }
    row.rates[regime] = -sum;
    return row;
}

double bound_constant(const SwitchingModel& model) {
    const int m = model.num_regimes;
    double sup = 0.0;
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j)
            if (j != i) s += std::exp(-model.switch_cost(i, j) / model.temperature);
        sup = std::max(sup, s);
    }
    return model.reward_bound + model.temperature * sup;
}

double value_bound(const SwitchingModel& model, double t) {
    return bound_constant(model) * (model.horizon - t) + model.reward_bound;
}

double hamiltonian(const RegimeIntensityRow& row, const VectorXd& values,
                   const SwitchingModel& model) {
    const int i = row.source;
    double h = 0.0;
    for (int j = 0; j < model.num_regimes; ++j) {
        if (j == i) continue;
        h += row.rates[j] * (values[j] - model.switch_cost(i, j) - values[i]);
    }
    return h + model.temperature * entropy_regularizer(row);
}

double scan_reward_bound(const SwitchingModel& model, const VectorXd& lo,
                         const VectorXd& hi, int points_per_axis, int time_points) {
    if (lo.size() != model.state_dim || hi.size() != model.state_dim)
        throw ValidationError("scan_reward_bound: box dimension mismatch");
    const int n = model.state_dim;
    long total = 1;
    for (int a = 0; a < n; ++a) total *= points_per_axis;

    VectorXd x(n);
    double sup = 0.0;
    for (long flat = 0; flat < total; ++flat) {
        long r = flat;
        for (int a = 0; a < n; ++a) {
            const int idx = static_cast<int>(r % points_per_axis);
            r /= points_per_axis;
            x[a] = points_per_axis == 1
                       ? lo[a]
                       : lo[a] + (hi[a] - lo[a]) * idx / (points_per_axis - 1);
        }
        const double habs = std::abs(model.terminal_reward(x));
        for (int i = 0; i < model.num_regimes; ++i) {
            for (int k = 0; k < time_points; ++k) {
                const double t = time_points == 1
                                     ? 0.0
                                     : model.horizon * k / (time_points - 1);
                sup = std::max(sup, std::abs(model.running_reward(t, x, i)) + habs);
            }
        }
    }
    return sup;
}

}  // namespace switching
