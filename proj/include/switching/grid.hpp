#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "switching/types.hpp"

namespace switching {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Uniform space-time mesh over a truncated box. Supports one or two spatial
// dimensions. Spatial nodes are flattened with the first axis outermost
// (flat = ix * ny + iy in 2-D).
struct SpaceTimeGrid {
    double horizon = 0;              // T
    int time_steps = 0;              // number of intervals; nodes = time_steps + 1
    std::vector<VectorXd> axes;      // per-dimension node coordinates, ascending

    static SpaceTimeGrid uniform(double horizon, int time_steps,
                                 const std::vector<std::pair<double, double>>& box,
                                 const std::vector<int>& nodes_per_axis);

    void validate() const;

    [[nodiscard]] int dim() const { return static_cast<int>(axes.size()); }
    [[nodiscard]] double dt() const { return horizon / time_steps; }
    [[nodiscard]] double dx(int axis) const { return axes[axis][1] - axes[axis][0]; }
    [[nodiscard]] double time_node(int k) const { return horizon * k / time_steps; }
    [[nodiscard]] int axis_nodes(int axis) const { return static_cast<int>(axes[axis].size()); }

    [[nodiscard]] int num_space_nodes() const {
        int n = 1;
        for (const auto& a : axes) n *= static_cast<int>(a.size());
        return n;
    }

    // flat index <-> per-axis indices
    [[nodiscard]] int flat_index(int ix, int iy = 0) const {
        return dim() == 1 ? ix : ix * axis_nodes(1) + iy;
    }
    void axis_indices(int flat, int& ix, int& iy) const {
        if (dim() == 1) {
            ix = flat;
            iy = 0;
        } else {
            const int ny = axis_nodes(1);
            ix = flat / ny;
            iy = flat % ny;
        }
    }

    [[nodiscard]] bool is_boundary(int flat) const;
    // true if the node is at least `layers` nodes away from every spatial
    // boundary (layers = 0 means any non-boundary node)
    [[nodiscard]] bool is_interior(int flat, int layers = 0) const;

    void coords_into(int flat, VectorXd& out) const;
    [[nodiscard]] VectorXd coords(int flat) const;
};

// One scalar field per regime sampled on a SpaceTimeGrid; storage per regime
// is (time nodes) x (space nodes).
class ValueField {
public:
    ValueField() = default;
    ValueField(SpaceTimeGrid grid, int num_regimes);

    [[nodiscard]] const SpaceTimeGrid& grid() const { return grid_; }
    [[nodiscard]] int num_regimes() const { return static_cast<int>(values_.size()); }

    [[nodiscard]] MatrixXd& regime(int i) { return values_[i]; }
    [[nodiscard]] const MatrixXd& regime(int i) const { return values_[i]; }

    [[nodiscard]] double& at(int regime_idx, int time_idx, int node) {
        return values_[regime_idx](time_idx, node);
    }
    [[nodiscard]] double at(int regime_idx, int time_idx, int node) const {
        return values_[regime_idx](time_idx, node);
    }

    // Multilinear interpolation in (t, x); spatial coordinates are clamped
    // into the box, t into [0, T].
    [[nodiscard]] double eval(double t, const VectorXd& x, int regime_idx) const;
    void eval_all_regimes(double t, const VectorXd& x, VectorXd& out) const;

    [[nodiscard]] double sup_distance(const ValueField& other, int skip_layers = 0) const;
    [[nodiscard]] double max_abs() const;

private:
    SpaceTimeGrid grid_;
    std::vector<MatrixXd> values_;
};

}  // namespace switching
