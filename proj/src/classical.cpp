#include "switching/classical.hpp"

#include <cmath>
#include <sstream>

namespace switching {

namespace {

// Self-contained assembly so the variational-inequality reference does not
// share its stepping path with the exploratory solver it is used to check.
struct AxisArrays {
    VectorXd lower, diag, upper;
};

void assemble(const SwitchingModel& model, const SpaceTimeGrid& grid, double t, int regime,
              double peclet_threshold, std::vector<AxisArrays>& ops, VectorXd& mixed,
              VectorXd& f) {
    const int nodes = grid.num_space_nodes();
    const int dim = grid.dim();
    ops.resize(dim);
    for (int d = 0; d < dim; ++d) {
        ops[d].lower.resize(nodes);
        ops[d].diag.resize(nodes);
        ops[d].upper.resize(nodes);
    }
    if (dim == 2) mixed.resize(nodes);
    f.resize(nodes);

    VectorXd x(dim), mu(dim);
    MatrixXd sigma(model.state_dim, model.noise_dim), a(dim, dim);
    for (int node = 0; node < nodes; ++node) {
        grid.coords_into(node, x);
        model.drift(t, x, regime, mu);
        model.vol(t, x, regime, sigma);
        a.noalias() = sigma * sigma.transpose();
        f[node] = model.running_reward(t, x, regime);
        for (int d = 0; d < dim; ++d) {
            const double dx = grid.dx(d);
            const double diffusion = 0.5 * a(d, d);
            const double adv = mu[d];
            const double pe = diffusion > 0 ? std::abs(adv) * dx / diffusion
                                            : std::numeric_limits<double>::infinity();
            double lo, di, up;
            if (pe <= peclet_threshold) {
                lo = diffusion / (dx * dx) - adv / (2 * dx);
                up = diffusion / (dx * dx) + adv / (2 * dx);
                di = -2 * diffusion / (dx * dx);
            } else if (adv > 0) {
                lo = diffusion / (dx * dx);
                up = diffusion / (dx * dx) + adv / dx;
                di = -2 * diffusion / (dx * dx) - adv / dx;
            } else {
                lo = diffusion / (dx * dx) - adv / dx;
                up = diffusion / (dx * dx);
                di = -2 * diffusion / (dx * dx) + adv / dx;
            }
            ops[d].lower[node] = lo;
            ops[d].diag[node] = di;
            ops[d].upper[node] = up;
        }
        if (dim == 2) mixed[node] = a(0, 1);
    }
}

void thomas(VectorXd& sub, VectorXd& diag, VectorXd& sup, VectorXd& rhs, int n) {
    for (int i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// one implicit sweep of (I - dt A_axis) w = rhs with Dirichlet rows
void sweep(const SpaceTimeGrid& grid, const AxisArrays& op, int axis, double dt,
           const VectorXd& rhs, const VectorXd& bc, VectorXd& out) {
    const int nx = grid.axis_nodes(0);
    if (grid.dim() == 1) {
        VectorXd sub(nx), diag(nx), sup(nx), r(nx);
        for (int ix = 0; ix < nx; ++ix) {
            const bool bnd = ix == 0 || ix == nx - 1;
            sub[ix] = bnd ? 0 : -dt * op.lower[ix];
            sup[ix] = bnd ? 0 : -dt * op.upper[ix];
            diag[ix] = bnd ? 1 : 1 - dt * op.diag[ix];
            r[ix] = bnd ? bc[ix] : rhs[ix];
        }
        thomas(sub, diag, sup, r, nx);
        out = r;
        return;
    }
    const int ny = grid.axis_nodes(1);
    out.resize(nx * ny);
    const int len = axis == 0 ? nx : ny;
    VectorXd sub(len), diag(len), sup(len), r(len);
    const int outer = axis == 0 ? ny : nx;
    for (int o = 0; o < outer; ++o) {
        for (int l = 0; l < len; ++l) {
            const int n = axis == 0 ? l * ny + o : o * ny + l;
            const bool bnd = grid.is_boundary(n);
            sub[l] = bnd ? 0 : -dt * op.lower[n];
            sup[l] = bnd ? 0 : -dt * op.upper[n];
            diag[l] = bnd ? 1 : 1 - dt * op.diag[n];
            r[l] = bnd ? bc[n] : rhs[n];
        }
        thomas(sub, diag, sup, r, len);
        for (int l = 0; l < len; ++l) out[axis == 0 ? l * ny + o : o * ny + l] = r[l];
    }
}

}  // namespace

ValueField solve_variational_inequality(const SwitchingModel& model, const SpaceTimeGrid& grid,
                                        const PdeOptions& options) {
    model.validate();
    grid.validate();
    if (grid.dim() != model.state_dim)
        throw ValidationError("vi: grid dimension must match model state dimension");

    const int m = model.num_regimes;
    const int K = grid.time_steps;
    const int nodes = grid.num_space_nodes();
    const double dt = grid.dt();
    const double bound_k = std::isnan(options.boundary_bound_constant)
                               ? model.reward_bound
                               : options.boundary_bound_constant;

    VectorXd h_all(nodes);
    VectorXd x(grid.dim());
    for (int node = 0; node < nodes; ++node) {
        grid.coords_into(node, x);
        h_all[node] = model.terminal_reward(x);
    }

    ValueField field(grid, m);
    for (int i = 0; i < m; ++i) field.regime(i).row(K) = h_all.transpose();

    std::vector<std::vector<AxisArrays>> ops(m);
    std::vector<VectorXd> mixed(m), f(m);
    bool coefs_built = false;

    std::vector<VectorXd> w(m);
    VectorXd rhs(nodes), bc(nodes), vstar(nodes), mixterm(nodes);

    for (int k = K - 1; k >= 0; --k) {
        const double t = grid.time_node(k);
        if (!coefs_built || !model.time_invariant) {
            for (int i = 0; i < m; ++i) assemble(model, grid, t, i, options.peclet_threshold,
                                                 ops[i], mixed[i], f[i]);
            coefs_built = true;
        }
        bc = h_all.array() + bound_k * (model.horizon - t);

        // implicit diffusion step per regime
        for (int i = 0; i < m; ++i) {
            rhs = field.regime(i).row(k + 1).transpose();
            if (grid.dim() == 2) {
                // mixed derivative taken explicitly at the previous slice
                mixterm.setZero();
                const int nx = grid.axis_nodes(0), ny = grid.axis_nodes(1);
                const double scale = 1.0 / (4.0 * grid.dx(0) * grid.dx(1));
                for (int ix = 1; ix + 1 < nx; ++ix)
                    for (int iy = 1; iy + 1 < ny; ++iy) {
                        const int n = ix * ny + iy;
                        mixterm[n] = mixed[i][n] * scale *
                                     (rhs[n + ny + 1] - rhs[n + ny - 1] - rhs[n - ny + 1] +
                                      rhs[n - ny - 1]);
                    }
                rhs += dt * (f[i] + mixterm);
                sweep(grid, ops[i][0], 0, dt, rhs, bc, vstar);
                sweep(grid, ops[i][1], 1, dt, vstar, bc, w[i]);
            } else {
                rhs += dt * f[i];
                sweep(grid, ops[i][0], 0, dt, rhs, bc, w[i]);
            }
            if (!w[i].allFinite()) {
                std::ostringstream os;
                os << "vi: non-finite value for regime " << i << " at time index " << k;
                throw SolverError(os.str());
            }
        }

        // obstacle projection sweeps, Gauss-Seidel over regimes
        bool stable = false;
        for (int s = 0; s < m && !stable; ++s) {
            double change = 0;
            for (int i = 0; i < m; ++i) {
                for (int n = 0; n < nodes; ++n) {
                    double obstacle = -std::numeric_limits<double>::infinity();
                    for (int j = 0; j < m; ++j) {
                        if (j == i) continue;
                        obstacle = std::max(obstacle, w[j][n] - model.switch_cost(i, j));
                    }
                    if (obstacle > w[i][n]) {
                        change = std::max(change, obstacle - w[i][n]);
                        w[i][n] = obstacle;
                    }
                }
            }
            if (change < 1e-12) stable = true;
        }
        if (!stable) {
            std::ostringstream os;
            os << "vi: obstacle projection did not stabilize within " << m
               << " sweeps at time index " << k;
            throw SolverError(os.str());
        }

        for (int i = 0; i < m; ++i) field.regime(i).row(k) = w[i].transpose();
    }
    return field;
}

std::vector<SweepRow> lambda_sweep(const SwitchingModel& model, const SpaceTimeGrid& grid,
                                   const std::vector<double>& lambdas,
                                   const PdeOptions& options) {
    if (lambdas.empty()) throw ValidationError("lambda_sweep: need at least one temperature");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0))
            throw ValidationError("lambda_sweep: temperatures must be strictly positive");
        if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
            throw ValidationError("lambda_sweep: temperatures must be strictly decreasing");
    }

    const ValueField vi = solve_variational_inequality(model, grid, options);

    std::vector<SweepRow> rows;
    for (double lambda : lambdas) {
        SwitchingModel scaled = model;
        scaled.temperature = lambda;
        const ValueField v = solve_exploratory_hjb(scaled, grid, options);
        rows.push_back({lambda, v.sup_distance(vi, 2)});
    }
    return rows;
}

}  // namespace switching
