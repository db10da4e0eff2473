#include "switching/policy.hpp"

#include <cmath>
#include <sstream>

namespace switching {

GeneratorPolicy GeneratorPolicy::zero(int num_regimes) {
    return constant(MatrixXd::Zero(num_regimes, num_regimes));
}

GeneratorPolicy GeneratorPolicy::constant(const MatrixXd& generator) {
    if (generator.rows() != generator.cols() || generator.rows() < 2)
        throw ValidationError("policy: generator must be m x m with m >= 2");
    const int m = static_cast<int>(generator.rows());
    for (int i = 0; i < m; ++i) {
        RegimeIntensityRow row;
        row.source = i;
        row.rates = generator.row(i).transpose();
        row.validate();
    }
    GeneratorPolicy p;
    p.kind_ = Kind::constant;
    p.m_ = m;
    p.constant_ = generator;
    return p;
}

GeneratorPolicy GeneratorPolicy::tabulated(SpaceTimeGrid grid, std::vector<MatrixXd> table) {
    grid.validate();
    if (static_cast<int>(table.size()) != grid.time_steps + 1)
        throw ValidationError("policy: table must have one entry per time node");
    const int nodes = grid.num_space_nodes();
    const int mm = static_cast<int>(table.front().cols());
    const int m = static_cast<int>(std::lround(std::sqrt(double(mm))));
    if (m * m != mm || m < 2)
        throw ValidationError("policy: table columns must be a perfect square m*m");
    for (const auto& slab : table) {
        if (slab.rows() != nodes || slab.cols() != mm)
            throw ValidationError("policy: table slab shape mismatch");
        for (int node = 0; node < nodes; ++node)
            for (int i = 0; i < m; ++i) {
                double sum = 0;
                for (int j = 0; j < m; ++j) {
                    const double r = slab(node, i * m + j);
                    if (j != i && !(r >= 0))
                        throw ValidationError("policy: tabulated off-diagonal rates must be >= 0");
                    sum += r;
                }
                if (std::abs(sum) > 1e-12 * std::max(1.0, slab.row(node).cwiseAbs().maxCoeff()))
                    throw ValidationError("policy: tabulated rows must sum to zero");
            }
    }
    GeneratorPolicy p;
    p.kind_ = Kind::tabulated;
    p.m_ = m;
    p.table_grid_ = std::move(grid);
    p.table_ = std::move(table);
    return p;
}

GeneratorPolicy GeneratorPolicy::derived(std::shared_ptr<const ValueField> field,
                                         const SwitchingModel& model, double exponent_cap) {
    if (!field) throw ValidationError("policy: derived needs a value field");
    GeneratorPolicy p;
    p.kind_ = Kind::derived;
    p.m_ = field->num_regimes();
    if (p.m_ != model.num_regimes)
        throw ValidationError("policy: field/model regime count mismatch");
    p.field_ = std::move(field);
    p.costs_ = model.switch_cost;
    p.temperature_ = model.temperature;
    p.exponent_cap_ = exponent_cap;
    return p;
}

GeneratorPolicy GeneratorPolicy::derived(const ValueField& field, const SwitchingModel& model,
                                         double exponent_cap) {
    return derived(std::make_shared<ValueField>(field), model, exponent_cap);
}

bool GeneratorPolicy::same_layout(const SpaceTimeGrid& grid) const {
    const SpaceTimeGrid& g =
        kind_ == Kind::derived ? field_->grid() : table_grid_;
    if (g.dim() != grid.dim() || g.time_steps != grid.time_steps) return false;
    if (g.horizon != grid.horizon) return false;
    for (int a = 0; a < g.dim(); ++a) {
        if (g.axis_nodes(a) != grid.axis_nodes(a)) return false;
        if (g.axes[a][0] != grid.axes[a][0] ||
            g.axes[a][g.axis_nodes(a) - 1] != grid.axes[a][grid.axis_nodes(a) - 1])
            return false;
    }
    return true;
}

void GeneratorPolicy::off_diagonal_rates(const SpaceTimeGrid& grid, int k, int source,
                                         MatrixXd& out) const {
    const int nodes = grid.num_space_nodes();
    out.resize(nodes, m_);

    switch (kind_) {
        case Kind::constant: {
            for (int j = 0; j < m_; ++j)
                out.col(j).setConstant(j == source ? 0.0 : constant_(source, j));
            return;
        }
        case Kind::tabulated: {
            if (same_layout(grid)) {
                const MatrixXd& slab = table_[k];
                for (int j = 0; j < m_; ++j) {
                    if (j == source)
                        out.col(j).setZero();
                    else
                        out.col(j) = slab.col(source * m_ + j);
                }
                return;
            }
            const double t = grid.time_node(k);
            VectorXd x(grid.dim());
            for (int node = 0; node < nodes; ++node) {
                grid.coords_into(node, x);
                const RegimeIntensityRow row = row_at(t, x, source);
                for (int j = 0; j < m_; ++j) out(node, j) = j == source ? 0.0 : row.rates[j];
            }
            return;
        }
        case Kind::derived: {
            if (same_layout(grid)) {
                const auto& vi = field_->regime(source).row(k);
                for (int j = 0; j < m_; ++j) {
                    if (j == source) {
                        out.col(j).setZero();
                        continue;
                    }
                    Eigen::ArrayXd e =
                        (field_->regime(j).row(k).array() - costs_(source, j) - vi.array()) /
                        temperature_;
                    const double emax = e.maxCoeff();
                    if (emax > exponent_cap_) {
                        std::ostringstream os;
                        os << "policy: intensity exponent " << emax << " for pair (" << source
                           << "->" << j << ") exceeds cap " << exponent_cap_ << " at time index "
                           << k;
                        throw OverflowError(os.str());
                    }
                    out.col(j) = e.exp().matrix().transpose();
                }
                return;
            }
            const double t = grid.time_node(k);
            VectorXd x(grid.dim());
            for (int node = 0; node < nodes; ++node) {
                grid.coords_into(node, x);
                const RegimeIntensityRow row = row_at(t, x, source);
                for (int j = 0; j < m_; ++j) out(node, j) = j == source ? 0.0 : row.rates[j];
            }
            return;
        }
        default:
            throw ValidationError("policy: empty policy");
    }
}

RegimeIntensityRow GeneratorPolicy::row_at(double t, const VectorXd& x, int source) const {
    RegimeIntensityRow row;
    row.source = source;
    row.rates = VectorXd::Zero(m_);

    switch (kind_) {
        case Kind::constant:
            row.rates = constant_.row(source).transpose();
            return row;
        case Kind::tabulated: {
            // interpolate each off-diagonal rate; nonnegativity is preserved
            const SpaceTimeGrid& g = table_grid_;
            double sum = 0;
            for (int j = 0; j < m_; ++j) {
                if (j == source) continue;
                // reuse ValueField-style interpolation by sampling the table
                const double ts = t / g.dt();
                const int K = g.time_steps;
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
                auto sample = [&](int kk) {
                    // multilinear in space on slab kk
                    const MatrixXd& slab = table_[kk];
                    const int col = source * m_ + j;
                    // locate along axis 0
                    const VectorXd& ax = g.axes[0];
                    const int nx = static_cast<int>(ax.size());
                    double sx = (x[0] - ax[0]) / (ax[1] - ax[0]);
                    sx = std::min(std::max(sx, 0.0), double(nx - 1));
                    int ix = std::min(static_cast<int>(sx), nx - 2);
                    const double wx = sx - ix;
                    if (g.dim() == 1)
                        return (1 - wx) * slab(ix, col) + wx * slab(ix + 1, col);
                    const VectorXd& ay = g.axes[1];
                    const int ny = static_cast<int>(ay.size());
                    double sy = (x[1] - ay[0]) / (ay[1] - ay[0]);
                    sy = std::min(std::max(sy, 0.0), double(ny - 1));
                    int iy = std::min(static_cast<int>(sy), ny - 2);
                    const double wy = sy - iy;
                    const int f00 = ix * ny + iy;
                    return (1 - wx) * ((1 - wy) * slab(f00, col) + wy * slab(f00 + 1, col)) +
                           wx * ((1 - wy) * slab(f00 + ny, col) + wy * slab(f00 + ny + 1, col));
                };
                row.rates[j] = (1 - wt) * sample(k) + wt * sample(k + 1);
                sum += row.rates[j];
            }
            row.rates[source] = -sum;
            return row;
        }
        case Kind::derived: {
            VectorXd values(m_);
            field_->eval_all_regimes(t, x, values);
            double sum = 0;
            for (int j = 0; j < m_; ++j) {
                if (j == source) continue;
                const double e = (values[j] - costs_(source, j) - values[source]) / temperature_;
                if (e > exponent_cap_) {
                    std::ostringstream os;
                    os << "policy: intensity exponent " << e << " for pair (" << source << "->"
                       << j << ") exceeds cap " << exponent_cap_;
                    throw OverflowError(os.str());
                }
                row.rates[j] = std::exp(e);
                sum += row.rates[j];
            }
            row.rates[source] = -sum;
            return row;
        }
        default:
            throw ValidationError("policy: empty policy");
    }
}

void GeneratorPolicy::generator_at(double t, const VectorXd& x, MatrixXd& out) const {
    out.resize(m_, m_);
    for (int i = 0; i < m_; ++i) out.row(i) = row_at(t, x, i).rates.transpose();
}

double GeneratorPolicy::sup_rate_distance(const GeneratorPolicy& other,
                                          const SpaceTimeGrid& grid) const {
    double sup = 0;
    MatrixXd a, b;
    for (int k = 0; k <= grid.time_steps; ++k)
        for (int i = 0; i < m_; ++i) {
            off_diagonal_rates(grid, k, i, a);
            other.off_diagonal_rates(grid, k, i, b);
            sup = std::max(sup, (a - b).cwiseAbs().maxCoeff());
        }
    return sup;
}

}  // namespace switching
