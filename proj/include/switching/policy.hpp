#pragma once

#include <memory>
#include <vector>

#include "switching/grid.hpp"
#include "switching/model.hpp"

namespace switching {

// Feedback transition intensities pi_ij(t, x). Three storage forms:
//   constant  : one m x m generator used everywhere
//   tabulated : m x m generator per (time node, space node)
//   derived   : closure over a ValueField; rates come from optimal_intensity
class GeneratorPolicy {
public:
    GeneratorPolicy() = default;

    static GeneratorPolicy zero(int num_regimes);
    static GeneratorPolicy constant(const MatrixXd& generator);
    // table[k] has one row per space node and m*m columns (col = i*m + j)
    static GeneratorPolicy tabulated(SpaceTimeGrid grid, std::vector<MatrixXd> table);
    static GeneratorPolicy derived(std::shared_ptr<const ValueField> field,
                                   const SwitchingModel& model,
                                   double exponent_cap = 700.0);
    static GeneratorPolicy derived(const ValueField& field, const SwitchingModel& model,
                                   double exponent_cap = 700.0);

    [[nodiscard]] int num_regimes() const { return m_; }
    [[nodiscard]] bool is_derived() const { return kind_ == Kind::derived; }
    [[nodiscard]] const ValueField* field() const { return field_.get(); }

    // Off-diagonal rates of row `source` at every node of `grid` at time
    // index k: out is (space nodes) x m with a zero source column.
    void off_diagonal_rates(const SpaceTimeGrid& grid, int k, int source,
                            MatrixXd& out) const;

    // Row at a continuous space-time point (field/table interpolated).
    [[nodiscard]] RegimeIntensityRow row_at(double t, const VectorXd& x, int source) const;

    // Full m x m generator at a continuous point.
    void generator_at(double t, const VectorXd& x, MatrixXd& out) const;

    // Largest |pi^a - pi^b| over both grids' nodes; used as an alternative
    // policy-change stopping rule.
    [[nodiscard]] double sup_rate_distance(const GeneratorPolicy& other,
                                           const SpaceTimeGrid& grid) const;

private:
    enum class Kind { none, constant, tabulated, derived };

    [[nodiscard]] bool same_layout(const SpaceTimeGrid& grid) const;

    Kind kind_ = Kind::none;
    int m_ = 0;

    MatrixXd constant_;                    // constant
    SpaceTimeGrid table_grid_;             // tabulated
    std::vector<MatrixXd> table_;          // tabulated
    std::shared_ptr<const ValueField> field_;  // derived
    MatrixXd costs_;                       // derived
    double temperature_ = 0;               // derived
    double exponent_cap_ = 700.0;          // derived
};

}  // namespace switching
