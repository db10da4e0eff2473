#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "switching/builtin.hpp"
#include "switching/io.hpp"
#include "switching/pde.hpp"
#include "switching/rl.hpp"
#include "switching/rng.hpp"
#include "test_util.hpp"

using namespace switching;
using testutil::simple_model;

namespace {

// v(t, x, i) = (T - t) * b_i via per-regime heads with no hidden layers:
// params layout is W (m x feature_dim column-major) then b (m)
ValueApproximator head_net(int m, int state_dim, double horizon, TerminalRewardFn h) {
    ValueNetConfig cfg;
    cfg.per_regime_heads = true;
    return ValueApproximator(cfg, m, state_dim, horizon, std::move(h));
}

// affine two-parameter family v = h + (T - t)(w x + b)
ValueApproximator toy_net(double horizon = 1.0) {
    ValueNetConfig cfg;
    cfg.include_time = false;
    cfg.include_regime = false;
    return ValueApproximator(cfg, 2, 1, horizon, [](const VectorXd&) { return 0.0; });
}

SwitchingModel toy_model() {
    return simple_model(2, 0.2, 1.0, 0.5, {-1.0, 1.0}, 0.5);
}

// direct least-squares solution of the two-parameter orthogonality system
// over a fixed batch: Psi(xi) = c - D xi with test functions
// (T - t)(x, 1); independent of the train() code path
Eigen::Vector2d toy_equilibrium(const SwitchingModel& model, const SimConfig& sim) {
    const double pi_rate = std::exp(-model.switch_cost(0, 1) / model.temperature);
    const GeneratorPolicy policy = GeneratorPolicy::constant(
        (MatrixXd(2, 2) << -pi_rate, pi_rate, pi_rate, -pi_rate).finished());
    const double lam_entropy =
        model.temperature * (pi_rate - pi_rate * std::log(pi_rate));

    const auto paths = simulate_batch(model, policy, sim, VectorXd::Zero(1), 0);
    Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    const double T = model.horizon;
    for (const auto& p : paths) {
        const int K = static_cast<int>(p.rewards.size());
        for (int k = 0; k < K; ++k) {
            const Eigen::Vector2d phi_k =
                (T - p.times[k]) * Eigen::Vector2d(p.states(k, 0), 1.0);
            const Eigen::Vector2d phi_next =
                (T - p.times[k + 1]) * Eigen::Vector2d(p.states(k + 1, 0), 1.0);
            const double r = lam_entropy * sim.dt -
                             model.switch_cost(p.regimes[k], p.regimes[k + 1]);
            D += phi_k * (phi_k - phi_next).transpose();
            c += phi_k * r;
        }
    }
    return D.fullPivLu().solve(c);
}

}  // namespace

TEST_CASE("policy from parameters") {
    const SwitchingModel model = toy_model();
    auto net = head_net(2, 1, 1.0, [](const VectorXd&) { return 0.0; });
    REQUIRE(net.param_count() == 2 * 2 + 2);  // W(2x2) + b(2)

    SUBCASE("symmetric output gives the constant rate") {
        VectorXd p = VectorXd::Zero(net.param_count());
        const MatrixXd gen =
            policy_from_params(net, p, model, 0.0, VectorXd::Zero(1));
        CHECK(gen(0, 1) == doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
        CHECK(gen(1, 0) == doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
        CHECK(gen(0, 0) == doctest::Approx(-gen(0, 1)).epsilon(1e-12));
    }
    SUBCASE("value difference of the cost size gives rate one") {
        VectorXd p = VectorXd::Zero(net.param_count());
        p[4 + 1] = 0.5;  // head bias of regime 1: v_1 - v_0 = 0.5 at t = 0
        const MatrixXd gen = policy_from_params(net, p, model, 0.0, VectorXd::Zero(1));
        CHECK(gen(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
        // row sums vanish
        CHECK(gen.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("delta xi brackets") {
    auto net = head_net(2, 1, 1.0, [](const VectorXd&) { return 0.0; });
    const VectorXd p = VectorXd::Zero(net.param_count());
    const VectorXd x = VectorXd::Zero(1);

    SUBCASE("no switch, no reward, constant value") {
        SwitchingModel model = simple_model(2, 1e-4, 1.0, 0.5, {0.0, 0.0}, 0.5);
        // rates underflow at lambda = 1e-3, so the entropy term is exactly zero
        CHECK(delta_xi(net, p, model, 0.2, x, 0, x, 0, 0.0, 0.01) == 0.0);
    }
    SUBCASE("switch charges exactly the cost") {
        SwitchingModel model = simple_model(2, 1e-4, 1.0, 0.5, {0.0, 0.0}, 0.5);
        CHECK(delta_xi(net, p, model, 0.2, x, 0, x, 1, 0.0, 0.01) ==
              doctest::Approx(-0.5).epsilon(1e-15));
    }
}

TEST_CASE("orthogonality statistic vanishes at the tabulated reference solution") {
    const auto model = model_from_descriptor(default_descriptor("regulator"));
    const auto grid = SpaceTimeGrid::uniform(1.0, 800, {{-4.0, 4.0}}, {601});
    const ValueField field = solve_exploratory_hjb(model, grid);
    const GeneratorPolicy policy = GeneratorPolicy::derived(field, model);
    const ValueFn value = [&](double t, const VectorXd& x, int i) {
        return field.eval(t, x, i);
    };

    // weighted brackets do not enjoy the telescoping cancellation of the
    // plain martingale sum, so the step must be small enough to keep the
    // quadrature bias under the statistical band
    SimConfig sim;
    sim.dt = 0.002;
    sim.steps = 500;
    sim.batch = 10000;
    sim.seed = 2024;
    const auto paths = simulate_batch(model, policy, sim, VectorXd::Zero(1), 0);

    // test-function proxy for dv/dxi: (T - t) (1, x, 1{i=0})
    const int F = 3;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d sumsq = Eigen::Vector3d::Zero();
    for (const auto& p : paths) {
        const auto dm = martingale_increments(p, value, model, &policy);
        Eigen::Vector3d psi = Eigen::Vector3d::Zero();
        for (std::size_t k = 0; k < dm.size(); ++k) {
            const double w = 1.0 - p.times[k];
            const Eigen::Vector3d phi(w, w * p.states(k, 0),
                                      w * (p.regimes[k] == 0 ? 1.0 : 0.0));
            psi += phi * dm[k];
        }
        sum += psi;
        sumsq += psi.cwiseProduct(psi);
    }
    const double n = sim.batch;
    for (int c = 0; c < F; ++c) {
        const double mean = sum[c] / n;
        const double var = (sumsq[c] - n * mean * mean) / (n - 1);
        const double se = std::sqrt(var / n);
        CAPTURE(c);
        CHECK(std::abs(mean) <= 3 * se);
    }
}

TEST_CASE("zero-episode training returns the initial parameters") {
    const SwitchingModel model = toy_model();
    auto net = toy_net();
    const VectorXd init = net.init_params(1);
    SimConfig sim;
    sim.dt = 0.05;
    sim.steps = 20;
    TrainConfig cfg;
    cfg.episodes = 0;
    cfg.batch = 1;
    cfg.x0 = VectorXd::Zero(1);
    const auto res = train(net, model, sim, cfg, make_environment(model, sim.dt), init);
    CHECK((res.params - init).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.log.empty());
}

TEST_CASE("training is deterministic given the seed") {
    const SwitchingModel model = toy_model();
    auto net = toy_net();
    SimConfig sim;
    sim.dt = 0.05;
    sim.steps = 20;
    TrainConfig cfg;
    cfg.episodes = 25;
    cfg.batch = 4;
    cfg.schedule = RateSchedule::constant;
    cfg.base_rate = 0.02;
    cfg.seed = 77;
    cfg.x0 = VectorXd::Zero(1);
    const VectorXd init = VectorXd::Zero(net.param_count());
    const auto a = train(net, model, sim, cfg, make_environment(model, sim.dt), init);
    const auto b = train(net, model, sim, cfg, make_environment(model, sim.dt), init);
    CHECK((a.params - b.params).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
}

TEST_CASE("offline and online runs both converge on the affine toy") {
    const SwitchingModel model = toy_model();
    auto net = toy_net();
    SimConfig sim;
    sim.dt = 0.05;
    sim.steps = 20;
    sim.batch = 60000;
    sim.seed = 555;
    const Eigen::Vector2d target = toy_equilibrium(model, sim);
    // the policy here is constant, so the analytic fixed point is
    // (w, b) = (0, lambda e^{-g/lambda})
    CHECK(std::abs(target[0]) < 5e-3);
    CHECK(std::abs(target[1] - 0.2 * std::exp(-2.5)) < 5e-3);

    VectorXd init(2);
    init << 0.5, 0.5;

    TrainConfig cfg;
    cfg.batch = 1;
    cfg.episodes = 4000;
    cfg.schedule = RateSchedule::constant;
    cfg.base_rate = 0.01;
    cfg.seed = 99;
    cfg.x0 = VectorXd::Zero(1);

    SimConfig train_sim = sim;
    train_sim.batch = 1;

    cfg.mode = TrainMode::offline;
    const auto off = train(net, model, train_sim, cfg, make_environment(model, sim.dt), init);
    cfg.mode = TrainMode::online;
    const auto on = train(net, model, train_sim, cfg, make_environment(model, sim.dt), init);

    CHECK((off.params - Eigen::Vector2d(target)).norm() < 0.05);
    CHECK((on.params - Eigen::Vector2d(target)).norm() < 0.05);
    // same seed, different update rules, different trajectories
    CHECK((off.params - on.params).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("divergence guard aborts") {
    const SwitchingModel model = toy_model();
    auto net = toy_net();
    SimConfig sim;
    sim.dt = 0.05;
    sim.steps = 20;
    TrainConfig cfg;
    cfg.episodes = 400;
    cfg.batch = 1;
    cfg.schedule = RateSchedule::constant;
    cfg.base_rate = 1e5;
    cfg.seed = 3;
    cfg.x0 = VectorXd::Zero(1);
    CHECK_THROWS_AS(
        train(net, model, sim, cfg, make_environment(model, sim.dt), net.init_params(5)),
        SolverError);
}

TEST_CASE("checkpoints round-trip bit-exact and catch tampering") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "switching-ckpt-test";
    fs::create_directories(dir);
    const std::string path = (dir / "net.ckpt").string();

    ValueNetConfig cfg;
    cfg.hidden = {16};
    cfg.activations = {Activation::tanh};
    ValueApproximator net(cfg, 2, 1, 1.0,
                          [](const VectorXd& x) { return std::exp(-x.squaredNorm()); });
    const VectorXd params = net.init_params(7);
    save_checkpoint(path, net, params, 0x1234u, {7, 8, 9});

    SUBCASE("round trip") {
        const Checkpoint cp = load_checkpoint(path);
        CHECK(cp.model_hash == 0x1234u);
        CHECK(cp.seeds == std::vector<std::uint64_t>{7, 8, 9});
        CHECK((cp.params - params).cwiseAbs().maxCoeff() == 0.0);
        CHECK((load_checkpoint_params(path, net) - params).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("architecture mismatch is a typed error") {
        ValueNetConfig other = cfg;
        other.hidden = {8};
        ValueApproximator wrong(other, 2, 1, 1.0, [](const VectorXd&) { return 0.0; });
        CHECK_THROWS_AS(load_checkpoint_params(path, wrong), ValidationError);
    }
    SUBCASE("tampered payload is rejected") {
        std::string text;
        {
            std::ifstream in(path);
            std::getline(in, text);
        }
        const auto pos = text.find("params_hex");
        text[pos + 20] = text[pos + 20] == '0' ? '1' : '0';
        {
            std::ofstream out(path, std::ios::trunc);
            out << text << "\n";
        }
        CHECK_THROWS_AS(load_checkpoint(path), IoError);
    }
    fs::remove_all(dir);
}

TEST_CASE("exploring starts cover the requested box") {
    const SwitchingModel model = toy_model();
    auto net = toy_net();
    SimConfig sim;
    sim.dt = 0.1;
    sim.steps = 10;
    TrainConfig cfg;
    cfg.episodes = 3;
    cfg.batch = 8;
    cfg.schedule = RateSchedule::constant;
    cfg.base_rate = 1e-3;
    cfg.seed = 12;
    cfg.exploring_starts = true;
    cfg.start_lo = VectorXd::Constant(1, -2.0);
    cfg.start_hi = VectorXd::Constant(1, 2.0);
    const auto res =
        train(net, model, sim, cfg, make_environment(model, sim.dt), net.init_params(2));
    CHECK(res.log.size() == 3);
    CHECK(res.total_steps == 3 * 8 * 10);
}
