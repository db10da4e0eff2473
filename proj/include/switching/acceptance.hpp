#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace switching {

struct AcceptanceOptions {
    std::uint64_t seed = 2025;
    // divides reference-grid resolution; > 1 demonstrates how the Monte
    // Carlo consistency checks react to a degraded PDE reference
    int coarsen = 1;
    std::vector<int> only;  // criterion ids to run; empty means all
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

// Runs the acceptance criteria, printing one pass/fail line per criterion.
// Returns all results (in id order).
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            std::ostream& log);

}  // namespace switching
