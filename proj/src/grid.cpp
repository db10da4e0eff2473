#include "switching/grid.hpp"

#include <cmath>

namespace switching {

SpaceTimeGrid SpaceTimeGrid::uniform(double horizon, int time_steps,
                                     const std::vector<std::pair<double, double>>& box,
                                     const std::vector<int>& nodes_per_axis) {
    if (box.size() != nodes_per_axis.size())
        throw ValidationError("grid: box and node counts must have the same dimension");
    SpaceTimeGrid g;
    g.horizon = horizon;
    g.time_steps = time_steps;
    for (std::size_t a = 0; a < box.size(); ++a) {
        const int n = nodes_per_axis[a];
        if (n < 3) throw ValidationError("grid: need at least 3 nodes per axis");
        VectorXd nodes(n);
        for (int i = 0; i < n; ++i)
            nodes[i] = box[a].first + (box[a].second - box[a].first) * i / (n - 1);
        g.axes.push_back(std::move(nodes));
    }
    g.validate();
    return g;
}

void SpaceTimeGrid::validate() const {
    if (!(horizon > 0)) throw ValidationError("grid: horizon must be positive");
    if (time_steps < 1) throw ValidationError("grid: need at least one time step");
    if (axes.empty() || axes.size() > 2)
        throw ValidationError("grid: only 1 or 2 spatial dimensions are supported");
    for (const auto& a : axes) {
        if (a.size() < 3) throw ValidationError("grid: need at least 3 nodes per axis");
        const double h = a[1] - a[0];
        if (!(h > 0)) throw ValidationError("grid: axis nodes must be strictly increasing");
        for (int i = 1; i < a.size(); ++i) {
            const double step = a[i] - a[i - 1];
            if (!(step > 0) || std::abs(step - h) > 1e-9 * std::max(1.0, std::abs(h)))
                throw ValidationError("grid: axis nodes must be uniform and increasing");
        }
    }
}

bool SpaceTimeGrid::is_boundary(int flat) const {
    return !is_interior(flat, 0);
}

bool SpaceTimeGrid::is_interior(int flat, int layers) const {
    int ix, iy;
    axis_indices(flat, ix, iy);
    const int nx = axis_nodes(0);
    if (ix <= layers || ix >= nx - 1 - layers) return false;
    if (dim() == 2) {
        const int ny = axis_nodes(1);
        if (iy <= layers || iy >= ny - 1 - layers) return false;
    }
    return true;
}

void SpaceTimeGrid::coords_into(int flat, VectorXd& out) const {
    int ix, iy;
    axis_indices(flat, ix, iy);
    out[0] = axes[0][ix];
    if (dim() == 2) out[1] = axes[1][iy];
}

VectorXd SpaceTimeGrid::coords(int flat) const {
    VectorXd out(dim());
    coords_into(flat, out);
    return out;
}

ValueField::ValueField(SpaceTimeGrid grid, int num_regimes) : grid_(std::move(grid)) {
    grid_.validate();
    values_.assign(num_regimes,
                   MatrixXd::Zero(grid_.time_steps + 1, grid_.num_space_nodes()));
}

namespace {

// index and weight of the cell containing c along one uniform axis, clamped
// into the box
inline void locate(const VectorXd& nodes, double c, int& idx, double& w) {
    const int n = static_cast<int>(nodes.size());
    const double h = nodes[1] - nodes[0];
    double s = (c - nodes[0]) / h;
    if (s <= 0) {
        idx = 0;
        w = 0;
        return;
    }
    if (s >= n - 1) {
        idx = n - 2;
        w = 1;
        return;
    }
    idx = static_cast<int>(s);
    w = s - idx;
}

}  // namespace

double ValueField::eval(double t, const VectorXd& x, int regime_idx) const {
    const MatrixXd& v = values_[regime_idx];
    const int K = grid_.time_steps;
    double ts = t / grid_.dt();
    int k;
    double wt;
    if (ts <= 0) {
        k = 0;
        wt = 0;
    } else if (ts >= K) {
        k = K - 1;
        wt = 1;
    } else {
        k = static_cast<int>(ts);
        wt = ts - k;
    }

    int ix;
    double wx;
    locate(grid_.axes[0], x[0], ix, wx);
    if (grid_.dim() == 1) {
        const double a = (1 - wx) * v(k, ix) + wx * v(k, ix + 1);
        const double b = (1 - wx) * v(k + 1, ix) + wx * v(k + 1, ix + 1);
        return (1 - wt) * a + wt * b;
    }
    int iy;
    double wy;
    locate(grid_.axes[1], x[1], iy, wy);
    const int ny = grid_.axis_nodes(1);
    auto plane = [&](int kk) {
        const int f00 = ix * ny + iy;
        const double v00 = v(kk, f00), v01 = v(kk, f00 + 1);
        const double v10 = v(kk, f00 + ny), v11 = v(kk, f00 + ny + 1);
        return (1 - wx) * ((1 - wy) * v00 + wy * v01) + wx * ((1 - wy) * v10 + wy * v11);
    };
    return (1 - wt) * plane(k) + wt * plane(k + 1);
}

void ValueField::eval_all_regimes(double t, const VectorXd& x, VectorXd& out) const {
    for (int i = 0; i < num_regimes(); ++i) out[i] = eval(t, x, i);
}

double ValueField::sup_distance(const ValueField& other, int skip_layers) const {
    double sup = 0.0;
    const int nodes = grid_.num_space_nodes();
    for (int i = 0; i < num_regimes(); ++i) {
        for (int node = 0; node < nodes; ++node) {
            if (skip_layers > 0 && !grid_.is_interior(node, skip_layers - 1)) continue;
            for (int k = 0; k <= grid_.time_steps; ++k)
                sup = std::max(sup, std::abs(values_[i](k, node) - other.values_[i](k, node)));
        }
    }
    return sup;
}

double ValueField::max_abs() const {
    double sup = 0.0;
    for (const auto& v : values_) sup = std::max(sup, v.cwiseAbs().maxCoeff());
    return sup;
}

}  // namespace switching
