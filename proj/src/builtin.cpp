#include "switching/builtin.hpp"

#include <cmath>

namespace switching {

using nlohmann::json;

namespace {

json regulator_defaults() {
    return json{{"model", "regulator"},
                {"params", {{"mu0", -2.0}, {"mu1", 2.0}, {"sigma", 0.5}}},
                {"costs", {{0.0, 0.5}, {0.5, 0.0}}},
                {"lambda", 0.2},
                {"horizon", 1.0}};
}

json put_options_defaults() {
    return json{{"model", "put-options"},
                {"params",
                 {{"muA", 0.1},
                  {"sigmaA", 0.2},
                  {"muB", 0.05},
                  {"sigmaB", 0.1},
                  {"rate", 0.05},
                  {"strike", 1.0},
                  {"rho", 1.0}}},
                {"costs", {{0.0, 0.02, 0.01}, {0.02, 0.0, 0.01}, {0.02, 0.02, 0.0}}},
                {"lambda", 0.1},
                {"horizon", 1.0}};
}

json symmetric_defaults() {
    return json{{"model", "symmetric"},
                {"params",
                 {{"drifts", {-1.0, 1.0}},
                  {"sigma", 0.5},
                  {"terminal", 0.0},
                  {"terminal_wave", 0.0}}},
                {"costs", {{0.0, 0.5}, {0.5, 0.0}}},
                {"lambda", 0.2},
                {"horizon", 1.0}};
}

MatrixXd costs_from(const json& descriptor, int m) {
    const auto& c = descriptor.at("costs");
    if (!c.is_array() || static_cast<int>(c.size()) != m)
        throw ValidationError("descriptor: costs must be an m x m array");
    MatrixXd g(m, m);
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(c[i].size()) != m)
            throw ValidationError("descriptor: costs must be an m x m array");
        for (int j = 0; j < m; ++j) g(i, j) = c[i][j].get<double>();
    }
    return g;
}

SwitchingModel make_regulator(const json& d) {
    const auto& p = d.at("params");
    const double mu0 = p.at("mu0").get<double>();
    const double mu1 = p.at("mu1").get<double>();
    const double sigma = p.at("sigma").get<double>();

    SwitchingModel model;
    model.num_regimes = 2;
    model.state_dim = 1;
    model.noise_dim = 1;
    model.drift = [mu0, mu1](double, const VectorXd&, int i, VectorXd& out) {
        out[0] = i == 0 ? mu0 : mu1;
    };
    model.vol = [sigma](double, const VectorXd&, int, MatrixXd& out) { out(0, 0) = sigma; };
    model.running_reward = [](double, const VectorXd& x, int) {
        return 2.0 * std::exp(-2.0 * x[0] * x[0]) - 0.1;
    };
    model.terminal_reward = [](const VectorXd& x) {
        return 2.0 * std::exp(-2.0 * x[0] * x[0]);
    };
    model.switch_cost = costs_from(d, 2);
    model.temperature = d.at("lambda").get<double>();
    model.horizon = d.at("horizon").get<double>();
    // sup |f| + |h| = 1.9 + 2.0, attained at x = 0
    model.reward_bound = 3.9;
    model.time_invariant = true;
    model.tag = "regulator";
    return model;
}

SwitchingModel make_put_options(const json& d) {
    const auto& p = d.at("params");
    const double muA = p.at("muA").get<double>();
    const double sigmaA = p.at("sigmaA").get<double>();
    const double muB = p.at("muB").get<double>();
    const double sigmaB = p.at("sigmaB").get<double>();
    const double rate = p.at("rate").get<double>();
    const double strike = p.at("strike").get<double>();
    const double rho = p.value("rho", 1.0);
    if (rho < -1.0 || rho > 1.0)
        throw ValidationError("put-options: rho must be in [-1, 1]");

    SwitchingModel model;
    model.num_regimes = 3;
    model.state_dim = 2;
    model.noise_dim = 2;
    // Stock dynamics do not depend on the regime the wealth sits in.
    model.drift = [muA, muB](double, const VectorXd& x, int, VectorXd& out) {
        out[0] = muA * x[0];
        out[1] = muB * x[1];
    };
    const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    model.vol = [sigmaA, sigmaB, rho, rho_bar](double, const VectorXd& x, int, MatrixXd& out) {
        out(0, 0) = sigmaA * x[0];
        out(0, 1) = 0.0;
        out(1, 0) = rho * sigmaB * x[1];
        out(1, 1) = rho_bar * sigmaB * x[1];
    };
    model.running_reward = [strike, rate](double, const VectorXd& x, int i) {
        if (i == 0) return std::max(strike - x[0], 0.0);
        if (i == 1) return std::max(strike - x[1], 0.0);
        return rate * strike;
    };
    model.terminal_reward = [](const VectorXd&) { return 0.0; };
    model.switch_cost = costs_from(d, 3);
    model.temperature = d.at("lambda").get<double>();
    model.horizon = d.at("horizon").get<double>();
    // puts pay at most the strike, the savings leg r * strike less than that
    model.reward_bound = strike;
    model.time_invariant = true;
    model.tag = "put-options";
    return model;
}

// Equal coefficients and constant rewards across regimes; the value function
// is spatially flat and known in closed form, which makes this family the
// analytic reference for solver tests. terminal_wave != 0 adds a sin(wave x)
// (or sin(wave x) sin(wave y)) terminal profile that keeps the regime
// symmetry but exercises the spatial operator.
SwitchingModel make_symmetric(const json& d) {
    const auto& p = d.at("params");
    std::vector<double> drifts = p.at("drifts").get<std::vector<double>>();
    const double sigma = p.at("sigma").get<double>();
    const double terminal = p.value("terminal", 0.0);
    const double wave = p.value("terminal_wave", 0.0);
    const int dim = p.value("dim", 1);
    const int m = static_cast<int>(drifts.size());
    if (m < 2) throw ValidationError("symmetric: need at least two drift entries");
    if (dim < 1 || dim > 2) throw ValidationError("symmetric: dim must be 1 or 2");

    SwitchingModel model;
    model.num_regimes = m;
    model.state_dim = dim;
    model.noise_dim = dim;
    model.drift = [drifts](double, const VectorXd&, int i, VectorXd& out) {
        out.setConstant(drifts[i]);
    };
    model.vol = [sigma](double, const VectorXd&, int, MatrixXd& out) {
        out.setZero();
        for (int a = 0; a < out.rows(); ++a) out(a, a) = sigma;
    };
    model.running_reward = [](double, const VectorXd&, int) { return 0.0; };
    if (wave == 0.0) {
        model.terminal_reward = [terminal](const VectorXd&) { return terminal; };
        model.reward_bound = std::abs(terminal);
    } else if (dim == 1) {
        model.terminal_reward = [terminal, wave](const VectorXd& x) {
            return terminal + std::sin(wave * x[0]);
        };
        model.reward_bound = std::abs(terminal) + 1.0;
    } else {
        model.terminal_reward = [terminal, wave](const VectorXd& x) {
            return terminal + std::sin(wave * x[0]) * std::sin(wave * x[1]);
        };
        model.reward_bound = std::abs(terminal) + 1.0;
    }
    model.switch_cost = costs_from(d, m);
    model.temperature = d.at("lambda").get<double>();
    model.horizon = d.at("horizon").get<double>();
    model.time_invariant = true;
    model.tag = "symmetric";
    return model;
}

}  // namespace

json default_descriptor(const std::string& family) {
    if (family == "regulator") return regulator_defaults();
    if (family == "put-options") return put_options_defaults();
    if (family == "symmetric") return symmetric_defaults();
    throw ValidationError("unknown model family: " + family);
}

SwitchingModel model_from_descriptor(const json& descriptor) {
    if (!descriptor.contains("model"))
        throw ValidationError("descriptor: missing 'model' field");
    const std::string family = descriptor.at("model").get<std::string>();

    // Merge user fields over the family defaults so partial descriptors work.
    json merged = default_descriptor(family);
    for (const auto& [key, value] : descriptor.items()) {
        if (key == "params" && value.is_object()) {
            for (const auto& [pk, pv] : value.items()) merged["params"][pk] = pv;
        } else {
            merged[key] = value;
        }
    }

    SwitchingModel model;
    if (family == "regulator")
        model = make_regulator(merged);
    else if (family == "put-options")
        model = make_put_options(merged);
    else
        model = make_symmetric(merged);
    model.validate();
    return model;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t descriptor_hash(const json& descriptor) {
    // nlohmann::json objects keep keys sorted, so dump() is canonical.
    return fnv1a64(descriptor.dump());
}

}  // namespace switching
