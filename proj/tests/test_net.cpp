#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "switching/net.hpp"
#include "switching/rl.hpp"
#include "switching/rng.hpp"

using namespace switching;

namespace {

// scale-guarded relative error used by every gradient check
double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// central finite difference of a scalar function of the parameter vector
template <typename F>
double fd(const F& f, VectorXd params, int coord, double h = 1e-5) {
    params[coord] += h;
    const double up = f(params);
    params[coord] -= 2 * h;
    const double down = f(params);
    return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("architecture bookkeeping") {
    Architecture arch;
    arch.input_dim = 4;
    arch.hidden = {128, 128};
    arch.activations = {Activation::relu, Activation::tanh};
    arch.output_dim = 1;
    CHECK(arch.param_count() == 4 * 128 + 128 + 128 * 128 + 128 + 128 + 1);

    Architecture bad = arch;
    bad.activations = {Activation::relu};
    CHECK_THROWS_AS(Mlp{bad}, ValidationError);

    CHECK(activation_from_string("tanh") == Activation::tanh);
    CHECK_THROWS_AS(activation_from_string("gelu"), ValidationError);
}

TEST_CASE("forward pass matches a hand computation") {
    Architecture arch;
    arch.input_dim = 2;
    arch.hidden = {2};
    arch.activations = {Activation::tanh};
    arch.output_dim = 1;
    Mlp net(arch);

    // params: W0 (2x2 column-major), b0 (2), W1 (1x2), b1 (1)
    VectorXd p(9);
    p << 1.0, -0.5, 0.25, 2.0, 0.1, -0.2, 3.0, -1.0, 0.7;
    MatrixXd in(2, 1);
    in << 0.3, -0.6;
    MatrixXd out;
    net.forward(p, in, out);

    const double z0 = 1.0 * 0.3 + 0.25 * -0.6 + 0.1;
    const double z1 = -0.5 * 0.3 + 2.0 * -0.6 - 0.2;
    const double expect = 3.0 * std::tanh(z0) - 1.0 * std::tanh(z1) + 0.7;
    CHECK(out(0, 0) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("batched forward equals per-sample forward") {
    Architecture arch;
    arch.input_dim = 3;
    arch.hidden = {16, 8};
    arch.activations = {Activation::relu, Activation::tanh};
    arch.output_dim = 2;
    Mlp net(arch);
    const VectorXd p = net.init_params(5);

    std::mt19937_64 rng = make_engine(6);
    std::uniform_real_distribution<double> uni(-2, 2);
    MatrixXd batch(3, 10);
    for (int c = 0; c < 10; ++c)
        for (int r = 0; r < 3; ++r) batch(r, c) = uni(rng);

    MatrixXd out_batch, out_single;
    net.forward(p, batch, out_batch);
    for (int c = 0; c < 10; ++c) {
        net.forward(p, batch.col(c), out_single);
        CHECK((out_batch.col(c) - out_single.col(0)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("init is deterministic, fan-in scaled, zero-biased") {
    Architecture arch;
    arch.input_dim = 16;
    arch.hidden = {64};
    arch.activations = {Activation::relu};
    arch.output_dim = 1;
    Mlp net(arch);
    const VectorXd a = net.init_params(11), b = net.init_params(11), c = net.init_params(12);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
    // first layer weights bounded by 1/sqrt(16), its biases exactly zero
    CHECK(a.head(16 * 64).cwiseAbs().maxCoeff() <= 0.25);
    CHECK(a.segment(16 * 64, 64).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weighted reverse pass agrees with finite differences") {
    Architecture arch;
    arch.input_dim = 3;
    arch.hidden = {12, 7};
    arch.activations = {Activation::tanh, Activation::relu};
    arch.output_dim = 3;
    Mlp net(arch);
    const VectorXd p0 = net.init_params(21);

    std::mt19937_64 rng = make_engine(22);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    const int M = 5;
    MatrixXd inputs(3, M);
    for (int c = 0; c < M; ++c)
        for (int r = 0; r < 3; ++r) inputs(r, c) = uni(rng);
    VectorXd weights(M);
    std::vector<int> rows(M);
    for (int c = 0; c < M; ++c) {
        weights[c] = uni(rng);
        rows[c] = c % 3;
    }

    auto scalar = [&](const VectorXd& p) {
        MatrixXd out;
        net.forward(p, inputs, out);
        double s = 0;
        for (int c = 0; c < M; ++c) s += weights[c] * out(rows[c], c);
        return s;
    };

    MlpWorkspace ws;
    MatrixXd out;
    net.forward(p0, inputs, out, &ws);
    VectorXd grad;
    net.backward_weighted(p0, ws, weights, rows, grad);

    std::uniform_int_distribution<int> coord(0, net.param_count() - 1);
    for (int probe = 0; probe < 60; ++probe) {
        const int c = coord(rng);
        CHECK(rel_err(grad[c], fd(scalar, p0, c)) < 1e-7);
    }
}

TEST_CASE("value approximator structure") {
    ValueNetConfig cfg;
    cfg.hidden = {8};
    cfg.activations = {Activation::tanh};
    TerminalRewardFn h = [](const VectorXd& x) { return x[0] * x[0]; };
    ValueApproximator net(cfg, 2, 1, 1.0, h);
    CHECK(net.feature_dim() == 4);  // t, x, onehot(2)

    const VectorXd p = net.init_params(31);
    VectorXd x(1);
    x[0] = 0.7;

    SUBCASE("terminal constraint holds structurally with zero gradient") {
        CHECK(net.value(p, 1.0, x, 0) == doctest::Approx(0.49).epsilon(1e-15));
        VectorXd grad;
        net.gradient(p, 1.0, x, 1, grad);
        CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero parameters reduce to the terminal profile") {
        const VectorXd zero = VectorXd::Zero(net.param_count());
        CHECK(net.value(zero, 0.3, x, 0) == doctest::Approx(0.49).epsilon(1e-15));
    }
    SUBCASE("parameter count mismatch is rejected") {
        VectorXd bad = VectorXd::Zero(net.param_count() + 1);
        CHECK_THROWS_AS(net.value(bad, 0.5, x, 0), ValidationError);
    }
    SUBCASE("batched values match single evaluations") {
        MatrixXd X(1, 3);
        X << -0.5, 0.1, 0.9;
        MatrixXd vals;
        net.values_batch(p, 0.4, X, vals);
        for (int b = 0; b < 3; ++b)
            for (int j = 0; j < 2; ++j)
                CHECK(vals(j, b) ==
                      doctest::Approx(net.value(p, 0.4, X.col(b), j)).epsilon(1e-14));
    }
}

TEST_CASE("per-regime heads variant") {
    ValueNetConfig cfg;
    cfg.hidden = {6};
    cfg.activations = {Activation::tanh};
    cfg.per_regime_heads = true;
    TerminalRewardFn h = [](const VectorXd&) { return 0.0; };
    ValueApproximator net(cfg, 3, 2, 1.0, h);
    CHECK(net.feature_dim() == 3);  // t + two state coordinates
    CHECK(net.architecture().output_dim == 3);

    const VectorXd p = net.init_params(41);
    VectorXd x(2);
    x << 0.2, -0.4;
    MatrixXd X(2, 1);
    X.col(0) = x;
    MatrixXd vals;
    net.values_batch(p, 0.25, X, vals);
    for (int j = 0; j < 3; ++j)
        CHECK(vals(j, 0) == doctest::Approx(net.value(p, 0.25, x, j)).epsilon(1e-14));
}

TEST_CASE("value-net gradients match central differences on the built-in shapes") {
    struct Case {
        ValueNetConfig cfg;
        int m, n;
    };
    std::vector<Case> cases;
    {
        ValueNetConfig c;  // regulator shape
        c.hidden = {128, 128};
        c.activations = {Activation::relu, Activation::tanh};
        cases.push_back({c, 2, 1});
    }
    {
        ValueNetConfig c;  // selection-problem shape
        c.hidden = {128, 128};
        c.activations = {Activation::tanh, Activation::tanh};
        cases.push_back({c, 3, 2});
    }
    {
        ValueNetConfig c;  // two-parameter affine family
        c.include_time = false;
        c.include_regime = false;
        cases.push_back({c, 2, 1});
    }

    TerminalRewardFn h = [](const VectorXd& x) { return std::exp(-x.squaredNorm()); };
    std::mt19937_64 rng = make_engine(77);
    std::uniform_real_distribution<double> uni(-1, 1);

    for (const auto& kase : cases) {
        ValueApproximator net(kase.cfg, kase.m, kase.n, 1.0, h);
        const VectorXd p = net.init_params(101);
        VectorXd x(kase.n);
        for (int d = 0; d < kase.n; ++d) x[d] = uni(rng);
        const double t = 0.35;
        const int regime = 1;

        VectorXd grad;
        net.gradient(p, t, x, regime, grad);
        auto scalar = [&](const VectorXd& q) { return net.value(q, t, x, regime); };

        std::uniform_int_distribution<int> coord(0, net.param_count() - 1);
        double worst = 0;
        for (int probe = 0; probe < 100; ++probe) {
            const int c = coord(rng);
            worst = std::max(worst, rel_err(grad[c], fd(scalar, p, c)));
        }
        CAPTURE(kase.cfg.hidden.size());
        CHECK(worst < 1e-5);
    }
}
