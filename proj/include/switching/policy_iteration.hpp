#pragma once

#include <optional>
#include <vector>

#include "switching/pde.hpp"

namespace switching {

// pi_ij = exp((V_j - g_ij - V_i) / lambda) wrapped as a derived policy.
GeneratorPolicy improve(const ValueField& field, const SwitchingModel& model,
                        double exponent_cap = 700.0);

struct IterationRecord {
    int iteration = 0;
    double gap = 0;            // sup |V^n - reference|, NaN when no reference
    double sup_change = 0;     // sup |V^n - V^{n-1}|
    double max_violation = 0;  // max (V^{n-1} - V^n)+ over nodes, n >= 2
    int violation_count = 0;   // nodes breaching the 1e-8 improvement slack
    double seconds = 0;
};

struct IterationReport {
    std::vector<IterationRecord> records;
    bool converged = false;
    int iterations = 0;
};

struct IterateOptions {
    int max_iters = 20;
    double tol = 1e-8;
    // stop on sup policy-rate change instead of value change
    bool stop_on_policy_change = false;
    double improvement_slack = 1e-8;
    PdeOptions pde;
    // gaps in the report are measured against this field when provided
    const ValueField* reference = nullptr;
};

struct IterateResult {
    ValueField field;
    GeneratorPolicy policy;
    IterationReport report;
};

// Policy iteration: evaluate via solve_fixed_policy, improve via the
// exponential formula. initial == nullopt starts from V^0(t, x, i) = h(x).
IterateResult iterate(const SwitchingModel& model, const SpaceTimeGrid& grid,
                      const std::optional<ValueField>& initial = std::nullopt,
                      const IterateOptions& options = {});

}  // namespace switching
