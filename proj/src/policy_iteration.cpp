#include "switching/policy_iteration.hpp"

#include <chrono>
#include <cmath>

namespace switching {

GeneratorPolicy improve(const ValueField& field, const SwitchingModel& model,
                        double exponent_cap) {
    for (int i = 0; i < field.num_regimes(); ++i)
        if (!field.regime(i).allFinite())
            throw ValidationError("improve: value field must be finite");
    return GeneratorPolicy::derived(field, model, exponent_cap);
}

IterateResult iterate(const SwitchingModel& model, const SpaceTimeGrid& grid,
                      const std::optional<ValueField>& initial, const IterateOptions& options) {
    model.validate();
    grid.validate();

    ValueField current;
    if (initial) {
        current = *initial;
    } else {
        // h(x) extended constant in time
        current = ValueField(grid, model.num_regimes);
        VectorXd x(grid.dim());
        for (int node = 0; node < grid.num_space_nodes(); ++node) {
            grid.coords_into(node, x);
            const double h = model.terminal_reward(x);
            for (int i = 0; i < model.num_regimes; ++i)
                current.regime(i).col(node).setConstant(h);
        }
    }

    IterateResult result;
    result.report.converged = false;

    GeneratorPolicy policy;
    for (int n = 1; n <= options.max_iters; ++n) {
        const auto tic = std::chrono::steady_clock::now();
        GeneratorPolicy next_policy = improve(current, model, options.pde.exponent_cap);
        ValueField next = solve_fixed_policy(model, next_policy, grid, options.pde);

        IterationRecord rec;
        rec.iteration = n;
        rec.sup_change = next.sup_distance(current);
        rec.gap = options.reference ? next.sup_distance(*options.reference)
                                    : std::numeric_limits<double>::quiet_NaN();
        if (n >= 2) {
            double worst = 0;
            int count = 0;
            for (int i = 0; i < model.num_regimes; ++i) {
                const MatrixXd diff = current.regime(i) - next.regime(i);
                worst = std::max(worst, diff.maxCoeff());
                count += static_cast<int>((diff.array() > options.improvement_slack).count());
            }
            rec.max_violation = std::max(0.0, worst);
            rec.violation_count = count;  // flagged, not fatal
        }

        double policy_change = std::numeric_limits<double>::infinity();
        if (options.stop_on_policy_change && n >= 2)
            policy_change = next_policy.sup_rate_distance(policy, grid);

        current = std::move(next);
        policy = std::move(next_policy);

        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
        result.report.records.push_back(rec);
        result.report.iterations = n;

        const double crit = options.stop_on_policy_change ? policy_change : rec.sup_change;
        if (crit < options.tol) {
            result.report.converged = true;
            break;
        }
    }

    result.field = std::move(current);
    result.policy = std::move(policy);
    return result;
}

}  // namespace switching
