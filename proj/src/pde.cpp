#include "switching/pde.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace switching {

namespace {

// One spatial axis of L_i = mu . D_x + 1/2 tr(sigma sigma^T D_x^2),
// discretized per node: (A v)_n = lower_n v_{n-} + diag_n v_n + upper_n v_{n+}.
struct AxisOp {
    VectorXd lower, diag, upper;
};

struct RegimeCoefs {
    std::vector<AxisOp> axis;  // one per spatial dimension
    VectorXd mixed;            // coefficient of d^2/dxdy (2-D), per node
    VectorXd f;                // running reward per node
};

struct Workspace {
    VectorXd line_sub, line_diag, line_sup, line_rhs, line_cp;
};

void thomas_solve(const double* sub, const double* diag, const double* sup, double* rhs,
                  double* cp, int n) {
    cp[0] = sup[0] / diag[0];
    rhs[0] = rhs[0] / diag[0];
    for (int i = 1; i < n; ++i) {
        const double m = 1.0 / (diag[i] - sub[i] * cp[i - 1]);
        cp[i] = sup[i] * m;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) * m;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
}

class StepEngine {
public:
    StepEngine(const SwitchingModel& model, const SpaceTimeGrid& grid,
               const PdeOptions& options)
        : model_(model), grid_(grid), opt_(options) {
        m_ = model.num_regimes;
        nodes_ = grid.num_space_nodes();
        dim_ = grid.dim();
        dt_ = grid.dt();
        coefs_.resize(m_);
        h_all_.resize(nodes_);
        VectorXd x(dim_);
        for (int node = 0; node < nodes_; ++node) {
            grid_.coords_into(node, x);
            h_all_[node] = model_.terminal_reward(x);
        }
        bound_k_ = std::isnan(options.boundary_bound_constant)
                       ? bound_constant(model)
                       : options.boundary_bound_constant;
        int lm = 1;
        for (int a = 0; a < dim_; ++a) lm = std::max(lm, grid.axis_nodes(a));
        ws_.line_sub.resize(lm);
        ws_.line_diag.resize(lm);
        ws_.line_sup.resize(lm);
        ws_.line_rhs.resize(lm);
        ws_.line_cp.resize(lm);
    }

    const VectorXd& terminal_values() const { return h_all_; }

    // truncation boundary value K (T - t) + h(x)
    double boundary_value(double t, int node) const {
        return bound_k_ * (model_.horizon - t) + h_all_[node];
    }

    void build_coefs(double t) {
        if (coefs_built_ && model_.time_invariant) return;
        VectorXd x(dim_), mu(dim_);
        MatrixXd sigma(model_.state_dim, model_.noise_dim);
        MatrixXd a(dim_, dim_);
        for (int i = 0; i < m_; ++i) {
            RegimeCoefs& c = coefs_[i];
            c.axis.resize(dim_);
            for (int d = 0; d < dim_; ++d) {
                c.axis[d].lower.resize(nodes_);
                c.axis[d].diag.resize(nodes_);
                c.axis[d].upper.resize(nodes_);
            }
            if (dim_ == 2) c.mixed.resize(nodes_);
            c.f.resize(nodes_);

            for (int node = 0; node < nodes_; ++node) {
                grid_.coords_into(node, x);
                model_.drift(t, x, i, mu);
                model_.vol(t, x, i, sigma);
                a.noalias() = sigma * sigma.transpose();
                c.f[node] = model_.running_reward(t, x, i);
                for (int d = 0; d < dim_; ++d) {
                    const double dx = grid_.dx(d);
                    const double diffusion = 0.5 * a(d, d);
                    const double adv = mu[d];
                    double lo, di, up;
                    const double peclet =
                        diffusion > 0 ? std::abs(adv) * dx / diffusion
                                      : std::numeric_limits<double>::infinity();
                    if (peclet <= opt_.peclet_threshold) {
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
                    c.axis[d].lower[node] = lo;
                    c.axis[d].diag[node] = di;
                    c.axis[d].upper[node] = up;
                }
                if (dim_ == 2) c.mixed[node] = a(0, 1);
            }
        }
        coefs_built_ = true;
    }

    // (A_axis v) with Dirichlet values read straight from v; interior nodes only.
    void apply_axis(const RegimeCoefs& c, int axis, const VectorXd& v, VectorXd& out) const {
        out.setZero();
        const int nx = grid_.axis_nodes(0);
        if (dim_ == 1) {
            for (int ix = 1; ix + 1 < nx; ++ix)
                out[ix] = c.axis[0].lower[ix] * v[ix - 1] + c.axis[0].diag[ix] * v[ix] +
                          c.axis[0].upper[ix] * v[ix + 1];
            return;
        }
        const int ny = grid_.axis_nodes(1);
        if (axis == 0) {
            for (int ix = 1; ix + 1 < nx; ++ix)
                for (int iy = 0; iy < ny; ++iy) {
                    const int n = ix * ny + iy;
                    out[n] = c.axis[0].lower[n] * v[n - ny] + c.axis[0].diag[n] * v[n] +
                             c.axis[0].upper[n] * v[n + ny];
                }
        } else {
            for (int ix = 0; ix < nx; ++ix)
                for (int iy = 1; iy + 1 < ny; ++iy) {
                    const int n = ix * ny + iy;
                    out[n] = c.axis[1].lower[n] * v[n - 1] + c.axis[1].diag[n] * v[n] +
                             c.axis[1].upper[n] * v[n + 1];
                }
        }
    }

    void apply_mixed(const RegimeCoefs& c, const VectorXd& v, VectorXd& out) const {
        out.setZero();
        if (dim_ != 2) return;
        const int nx = grid_.axis_nodes(0);
        const int ny = grid_.axis_nodes(1);
        const double scale = 1.0 / (4.0 * grid_.dx(0) * grid_.dx(1));
        for (int ix = 1; ix + 1 < nx; ++ix)
            for (int iy = 1; iy + 1 < ny; ++iy) {
                const int n = ix * ny + iy;
                out[n] = c.mixed[n] * scale *
                         (v[n + ny + 1] - v[n + ny - 1] - v[n - ny + 1] + v[n - ny - 1]);
            }
    }

    // Solve (I - dt A_axis + dt rho) w = rhs along every grid line of `axis`,
    // with identity rows holding `bc` on spatial boundary nodes. rho may be
    // empty (no damping; used for the non-final sweep).
    void implicit_sweep(const RegimeCoefs& c, int axis, const VectorXd& rho,
                        const VectorXd& rhs, double t, VectorXd& out) {
        const bool damped = rho.size() > 0;
        const int nx = grid_.axis_nodes(0);
        if (dim_ == 1) {
            auto& w = ws_;
            for (int ix = 0; ix < nx; ++ix) {
                const bool bnd = ix == 0 || ix == nx - 1;
                w.line_sub[ix] = bnd ? 0.0 : -dt_ * c.axis[0].lower[ix];
                w.line_sup[ix] = bnd ? 0.0 : -dt_ * c.axis[0].upper[ix];
                w.line_diag[ix] =
                    bnd ? 1.0
                        : 1.0 - dt_ * c.axis[0].diag[ix] + (damped ? dt_ * rho[ix] : 0.0);
                w.line_rhs[ix] = bnd ? boundary_value(t, ix) : rhs[ix];
            }
            thomas_solve(w.line_sub.data(), w.line_diag.data(), w.line_sup.data(),
                         w.line_rhs.data(), w.line_cp.data(), nx);
            out.head(nx) = w.line_rhs.head(nx);
            return;
        }
        const int ny = grid_.axis_nodes(1);
        auto& w = ws_;
        if (axis == 0) {
            for (int iy = 0; iy < ny; ++iy) {
                for (int ix = 0; ix < nx; ++ix) {
                    const int n = ix * ny + iy;
                    const bool bnd = grid_.is_boundary(n);
                    w.line_sub[ix] = bnd ? 0.0 : -dt_ * c.axis[0].lower[n];
                    w.line_sup[ix] = bnd ? 0.0 : -dt_ * c.axis[0].upper[n];
                    w.line_diag[ix] =
                        bnd ? 1.0
                            : 1.0 - dt_ * c.axis[0].diag[n] + (damped ? dt_ * rho[n] : 0.0);
                    w.line_rhs[ix] = bnd ? boundary_value(t, n) : rhs[n];
                }
                thomas_solve(w.line_sub.data(), w.line_diag.data(), w.line_sup.data(),
                             w.line_rhs.data(), w.line_cp.data(), nx);
                for (int ix = 0; ix < nx; ++ix) out[ix * ny + iy] = w.line_rhs[ix];
            }
        } else {
            for (int ix = 0; ix < nx; ++ix) {
                for (int iy = 0; iy < ny; ++iy) {
                    const int n = ix * ny + iy;
                    const bool bnd = grid_.is_boundary(n);
                    w.line_sub[iy] = bnd ? 0.0 : -dt_ * c.axis[1].lower[n];
                    w.line_sup[iy] = bnd ? 0.0 : -dt_ * c.axis[1].upper[n];
                    w.line_diag[iy] =
                        bnd ? 1.0
                            : 1.0 - dt_ * c.axis[1].diag[n] + (damped ? dt_ * rho[n] : 0.0);
                    w.line_rhs[iy] = bnd ? boundary_value(t, n) : rhs[n];
                }
                thomas_solve(w.line_sub.data(), w.line_diag.data(), w.line_sup.data(),
                             w.line_rhs.data(), w.line_cp.data(), ny);
                for (int iy = 0; iy < ny; ++iy) out[ix * ny + iy] = w.line_rhs[iy];
            }
        }
    }

    const RegimeCoefs& coefs(int i) const { return coefs_[i]; }
    int num_nodes() const { return nodes_; }
    double dt() const { return dt_; }
    int dim() const { return dim_; }

private:
    const SwitchingModel& model_;
    const SpaceTimeGrid& grid_;
    PdeOptions opt_;
    int m_ = 0, nodes_ = 0, dim_ = 0;
    double dt_ = 0, bound_k_ = 0;
    VectorXd h_all_;
    std::vector<RegimeCoefs> coefs_;
    bool coefs_built_ = false;
    Workspace ws_;
};

enum class SourceMode { fixed_policy, exploratory };

// Coupling source for one regime: returns the explicit part S (so that the
// per-step relation reads (I - dt A + dt rho) w_i = v_next + dt (f + S)) and
// the implicit decay rho. The fixed-policy Hamiltonian is linear in w_i, so
// rho is exact there; the exploratory source uses its own Jacobian diagonal
// as Newton damping.
void coupling_source(SourceMode mode, const SwitchingModel& model, int i,
                     const std::vector<VectorXd>& w, const MatrixXd* rates,
                     const VectorXd* lam_entropy, double exponent_cap, int time_index,
                     VectorXd& source, VectorXd& rho) {
    const int m = model.num_regimes;
    const int nodes = static_cast<int>(w[0].size());
    source.setZero(nodes);
    rho.setZero(nodes);
    if (mode == SourceMode::fixed_policy) {
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            source.array() += rates->col(j).array() *
                              (w[j].array() - model.switch_cost(i, j));
            rho += rates->col(j);
        }
        source += *lam_entropy;
        return;
    }
    const double lambda = model.temperature;
    for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        Eigen::ArrayXd e =
            (w[j].array() - model.switch_cost(i, j) - w[i].array()) / lambda;
        const double emax = e.maxCoeff();
        if (emax > exponent_cap) {
            std::ostringstream os;
            os << "exploratory source: exponent " << emax << " for pair (" << i << "->" << j
               << ") exceeds cap " << exponent_cap << " at time index " << time_index;
            throw OverflowError(os.str());
        }
        rho.array() += e.exp();
    }
    // S = lambda sum exp(...) + rho .* w_i  (Newton-damped form)
    source = model.temperature * rho + rho.cwiseProduct(w[i]);
}

ValueField solve_system(const SwitchingModel& model, const GeneratorPolicy* policy,
                        const SpaceTimeGrid& grid, const PdeOptions& options,
                        SourceMode mode) {
    model.validate();
    grid.validate();
    if (grid.dim() != model.state_dim)
        throw ValidationError("pde: grid dimension must match model state dimension");
    const PreflightReport pre = preflight(model, grid, options);
    if (options.strict_ellipticity && !pre.elliptic)
        throw ValidationError("pde: diffusion matrix is degenerate below the ellipticity floor");

    const int m = model.num_regimes;
    const int K = grid.time_steps;
    StepEngine engine(model, grid, options);
    const int nodes = engine.num_nodes();
    const double dt = grid.dt();

    ValueField field(grid, m);
    for (int i = 0; i < m; ++i) field.regime(i).row(K) = engine.terminal_values().transpose();

    std::vector<VectorXd> w(m), w_next(m);
    std::vector<MatrixXd> rates(m);
    std::vector<VectorXd> lam_entropy(m);
    VectorXd source(nodes), rho(nodes), rhs(nodes), vstar(nodes);

    for (int k = K - 1; k >= 0; --k) {
        const double t = grid.time_node(k);
        engine.build_coefs(t);

        if (mode == SourceMode::fixed_policy) {
            for (int i = 0; i < m; ++i) {
                policy->off_diagonal_rates(grid, k, i, rates[i]);
                lam_entropy[i].setZero(nodes);
                for (int j = 0; j < m; ++j) {
                    if (j == i) continue;
                    const auto r = rates[i].col(j).array();
                    lam_entropy[i].array() +=
                        (r > 0.0).select(r * (1.0 - r.log()), Eigen::ArrayXd::Zero(nodes));
                }
                lam_entropy[i] *= model.temperature;
            }
        }

        for (int i = 0; i < m; ++i) {
            w[i] = field.regime(i).row(k + 1).transpose();
            w_next[i].resize(nodes);
        }

        bool converged = false;
        double change = 0;
        for (int s = 0; s < options.max_subiters; ++s) {
            change = 0;
            for (int i = 0; i < m; ++i) {
                coupling_source(mode, model, i, w,
                                mode == SourceMode::fixed_policy ? &rates[i] : nullptr,
                                mode == SourceMode::fixed_policy ? &lam_entropy[i] : nullptr,
                                options.exponent_cap, k, source, rho);
                const RegimeCoefs& c = engine.coefs(i);
                if (grid.dim() == 2) {
                    engine.apply_mixed(c, w[i], rhs);  // rhs as scratch for M w
                    source += rhs;
                }
                rhs = field.regime(i).row(k + 1).transpose();
                rhs += dt * (c.f + source);
                if (grid.dim() == 1) {
                    engine.implicit_sweep(c, 0, rho, rhs, t, w_next[i]);
                } else {
                    engine.implicit_sweep(c, 0, VectorXd(), rhs, t, vstar);
                    engine.implicit_sweep(c, 1, rho, vstar, t, w_next[i]);
                }
            }
            for (int i = 0; i < m; ++i) {
                change = std::max(change, (w_next[i] - w[i]).cwiseAbs().maxCoeff());
                std::swap(w[i], w_next[i]);
            }
            if (change < options.subiter_tol) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream os;
            os << "pde: coupling sub-iteration did not reach " << options.subiter_tol
               << " at time index " << k << " (t=" << t << "), last change " << change;
            throw SolverError(os.str());
        }
        for (int i = 0; i < m; ++i) {
            if (!w[i].allFinite()) {
                int bad = 0;
                for (int n = 0; n < nodes; ++n)
                    if (!std::isfinite(w[i][n])) {
                        bad = n;
                        break;
                    }
                std::ostringstream os;
                os << "pde: non-finite value for regime " << i << " at time index " << k
                   << ", node " << bad;
                throw SolverError(os.str());
            }
            field.regime(i).row(k) = w[i].transpose();
        }
    }
    return field;
}

}  // namespace

PreflightReport preflight(const SwitchingModel& model, const SpaceTimeGrid& grid,
                          const PdeOptions& options) {
    PreflightReport rep;
    rep.min_ellipticity = std::numeric_limits<double>::infinity();
    VectorXd x(grid.dim()), mu(grid.dim());
    MatrixXd sigma(model.state_dim, model.noise_dim), a(grid.dim(), grid.dim());

    // corners + center + axis midpoints, a few time samples
    std::vector<int> sample_nodes;
    const int nodes = grid.num_space_nodes();
    sample_nodes.push_back(0);
    sample_nodes.push_back(nodes - 1);
    sample_nodes.push_back(nodes / 2);
    if (grid.dim() == 2) {
        sample_nodes.push_back(grid.axis_nodes(1) - 1);
        sample_nodes.push_back(nodes - grid.axis_nodes(1));
    }
    for (int ts = 0; ts <= 4; ++ts) {
        const double t = model.horizon * ts / 4.0;
        for (int node : sample_nodes) {
            grid.coords_into(node, x);
            for (int i = 0; i < model.num_regimes; ++i) {
                model.vol(t, x, i, sigma);
                model.drift(t, x, i, mu);
                a.noalias() = sigma * sigma.transpose();
                Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
                rep.min_ellipticity = std::min(rep.min_ellipticity, es.eigenvalues().minCoeff());
                for (int d = 0; d < grid.dim(); ++d) {
                    const double diffusion = 0.5 * a(d, d);
                    const double pe = diffusion > 0
                                          ? std::abs(mu[d]) * grid.dx(d) / diffusion
                                          : std::numeric_limits<double>::infinity();
                    if (std::isfinite(pe)) rep.max_peclet = std::max(rep.max_peclet, pe);
                    if (pe > options.peclet_threshold) ++rep.upwinded_samples;
                }
            }
        }
    }
    rep.elliptic = rep.min_ellipticity > options.ellipticity_floor;
    return rep;
}

ValueField solve_fixed_policy(const SwitchingModel& model, const GeneratorPolicy& policy,
                              const SpaceTimeGrid& grid, const PdeOptions& options) {
    if (policy.num_regimes() != model.num_regimes)
        throw ValidationError("pde: policy/model regime count mismatch");
    return solve_system(model, &policy, grid, options, SourceMode::fixed_policy);
}

ValueField solve_exploratory_hjb(const SwitchingModel& model, const SpaceTimeGrid& grid,
                                 const PdeOptions& options) {
    return solve_system(model, nullptr, grid, options, SourceMode::exploratory);
}

double residual_norm(const ValueField& field, const SwitchingModel& model,
                     const std::optional<GeneratorPolicy>& policy, const PdeOptions& options) {
    const SpaceTimeGrid& grid = field.grid();
    const int m = model.num_regimes;
    const int K = grid.time_steps;
    const int nodes = grid.num_space_nodes();
    const double dt = grid.dt();
    StepEngine engine(model, grid, options);

    // terminal constraint part
    double sup = 0;
    for (int i = 0; i < m; ++i)
        sup = std::max(sup, (field.regime(i).row(K).transpose() - engine.terminal_values())
                                .cwiseAbs()
                                .maxCoeff());

    std::vector<VectorXd> w(m);
    std::vector<MatrixXd> rates(m);
    std::vector<VectorXd> lam_entropy(m);
    VectorXd source(nodes), rho(nodes), av(nodes), ay(nodes), axay(nodes), mix(nodes);
    const int skip = grid.dim() == 2 ? 2 : 1;  // splitting defect is part of the 2-D scheme
                                               // only away from the Dirichlet frame
    for (int k = 0; k < K; ++k) {
        const double t = grid.time_node(k);
        engine.build_coefs(t);
        for (int i = 0; i < m; ++i) w[i] = field.regime(i).row(k).transpose();
        if (policy) {
            for (int i = 0; i < m; ++i) {
                policy->off_diagonal_rates(grid, k, i, rates[i]);
                lam_entropy[i].setZero(nodes);
                for (int j = 0; j < m; ++j) {
                    if (j == i) continue;
                    const auto r = rates[i].col(j).array();
                    lam_entropy[i].array() +=
                        (r > 0.0).select(r * (1.0 - r.log()), Eigen::ArrayXd::Zero(nodes));
                }
                lam_entropy[i] *= model.temperature;
            }
        }
        for (int i = 0; i < m; ++i) {
            coupling_source(policy ? SourceMode::fixed_policy : SourceMode::exploratory, model,
                            i, w, policy ? &rates[i] : nullptr,
                            policy ? &lam_entropy[i] : nullptr, options.exponent_cap, k, source,
                            rho);
            // undo the damped form: genuine source is S - rho .* w_i
            source -= rho.cwiseProduct(w[i]);

            const RegimeCoefs& c = engine.coefs(i);
            engine.apply_axis(c, 0, w[i], av);
            if (grid.dim() == 2) {
                engine.apply_axis(c, 1, w[i], ay);  // A_y w
                av += ay;
                engine.apply_mixed(c, w[i], mix);
                av += mix;
                engine.apply_axis(c, 0, ay, axay);  // A_x A_y w
                av -= dt * axay;
                // the damped decay passes through the x-sweep factor
                ay = rho.cwiseProduct(w[i]);
                engine.apply_axis(c, 0, ay, axay);  // A_x (rho w)
                av += dt * axay;
            }
            for (int n = 0; n < nodes; ++n) {
                if (!grid.is_interior(n, skip - 1)) continue;
                const double r = (field.at(i, k + 1, n) - w[i][n]) / dt + av[n] + c.f[n] +
                                 source[n];
                sup = std::max(sup, std::abs(r));
            }
        }
    }
    return sup;
}

double box_doubling_difference(const SwitchingModel& model, const SpaceTimeGrid& grid,
                               double window, const PdeOptions& options) {
    const ValueField base = solve_exploratory_hjb(model, grid, options);

    std::vector<std::pair<double, double>> box2;
    std::vector<int> nodes2;
    for (int a = 0; a < grid.dim(); ++a) {
        const double lo = grid.axes[a][0];
        const double hi = grid.axes[a][grid.axis_nodes(a) - 1];
        const double c = 0.5 * (lo + hi);
        const double wdt = 0.5 * (hi - lo);
        box2.push_back({c - 2 * wdt, c + 2 * wdt});
        nodes2.push_back(2 * (grid.axis_nodes(a) - 1) + 1);
    }
    const SpaceTimeGrid grid2 =
        SpaceTimeGrid::uniform(grid.horizon, grid.time_steps, box2, nodes2);
    const ValueField wide = solve_exploratory_hjb(model, grid2, options);

    double sup = 0;
    VectorXd x(grid.dim());
    for (int node = 0; node < grid.num_space_nodes(); ++node) {
        grid.coords_into(node, x);
        bool inside = true;
        for (int a = 0; a < grid.dim(); ++a) {
            const double lo = grid.axes[a][0];
            const double hi = grid.axes[a][grid.axis_nodes(a) - 1];
            const double c = 0.5 * (lo + hi);
            if (std::abs(x[a] - c) > window * 0.5 * (hi - lo)) inside = false;
        }
        if (!inside) continue;
        for (int i = 0; i < model.num_regimes; ++i)
            for (int k = 0; k <= grid.time_steps; ++k)
                sup = std::max(sup, std::abs(base.at(i, k, node) -
                                             wide.eval(grid.time_node(k), x, i)));
    }
    return sup;
}

}  // namespace switching
