#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "switching/builtin.hpp"
#include "switching/pde.hpp"
#include "switching/rng.hpp"
#include "switching/simulate.hpp"
#include "test_util.hpp"

using namespace switching;
using testutil::simple_model;

TEST_CASE("identical seeds give bit-identical batches") {
    const auto model = model_from_descriptor(default_descriptor("regulator"));
    const GeneratorPolicy policy =
        GeneratorPolicy::constant((MatrixXd(2, 2) << -0.5, 0.5, 0.5, -0.5).finished());
    SimConfig sim;
    sim.dt = 0.01;
    sim.steps = 100;
    sim.batch = 8;
    sim.seed = 42;

    const VectorXd x0 = VectorXd::Zero(1);
    const auto a = simulate_batch(model, policy, sim, x0, 0);
    const auto b = simulate_batch(model, policy, sim, x0, 0);
    REQUIRE(a.size() == b.size());
    for (std::size_t p = 0; p < a.size(); ++p) {
        CHECK((a[p].states - b[p].states).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a[p].noise - b[p].noise).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a[p].regimes - b[p].regimes).cwiseAbs().maxCoeff() == 0);
        a[p].validate(model.num_regimes);
    }

    SimConfig other = sim;
    other.seed = 43;
    const auto c = simulate_batch(model, policy, other, x0, 0);
    CHECK((a[0].noise - c[0].noise).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("zero intensities never switch and drop the entropy term") {
    SwitchingModel model = simple_model(2, 0.2, 1.0, 0.5, {1.0, -1.0}, 0.3, {},
                                        [](const VectorXd& x) { return x[0]; });
    SimConfig sim;
    sim.dt = 0.02;
    sim.steps = 50;
    sim.batch = 16;
    sim.seed = 9;
    const auto paths = simulate_batch(model, GeneratorPolicy::zero(2), sim, VectorXd::Zero(1), 0);
    for (const auto& p : paths) {
        CHECK(p.jumps.empty());
        CHECK((p.regimes.array() == 0).all());
        // payoff reduces to h(X_T): f = 0 and R(0) = 0
        CHECK(episode_payoff(p, model, GeneratorPolicy::zero(2)) ==
              doctest::Approx(p.states(50, 0)).epsilon(1e-12));
    }
}

TEST_CASE("unit transition mass switches deterministically") {
    const SwitchingModel model = simple_model(2, 0.2, 1.0, 0.5, {0.0, 0.0}, 0.5);
    MatrixXd gen(2, 2);
    gen << -10.0, 10.0, 0.0, 0.0;  // pi_01 dt = 1 at dt = 0.1
    SimConfig sim;
    sim.dt = 0.1;
    sim.steps = 10;
    sim.batch = 4;
    sim.seed = 7;
    const auto paths = simulate_batch(model, GeneratorPolicy::constant(gen), sim,
                                      VectorXd::Zero(1), 0);
    for (const auto& p : paths) {
        CHECK(p.regimes[0] == 0);
        for (int k = 1; k <= 10; ++k) CHECK(p.regimes[k] == 1);  // switches once, then absorbs
        REQUIRE(p.jumps.size() == 1);
        CHECK(p.jumps[0].step == 0);
        CHECK(p.jumps[0].from == 0);
        CHECK(p.jumps[0].to == 1);
    }
}

TEST_CASE("single-step transition frequencies match the categorical law") {
    const SwitchingModel model = simple_model(3, 0.2, 1.0, 0.5, {0.0, 0.0, 0.0}, 0.5);
    std::mt19937_64 rng = make_engine(123);
    const double dt = 0.05;
    std::uniform_real_distribution<double> uni(0.0, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::Vector3d off(0.0, uni(rng), uni(rng));
        const auto row = RegimeIntensityRow::from_off_diagonal(0, off);
        const int draws = 100000;
        Eigen::Vector3i counts = Eigen::Vector3i::Zero();
        VectorXd x = VectorXd::Zero(1);
        for (int d = 0; d < draws; ++d) {
            const auto out = step(0.0, x, 0, row, model, dt, rng);
            counts[out.regime] += 1;
        }
        for (int j = 1; j < 3; ++j) {
            const double p = row.rates[j] * dt;
            const double se = std::sqrt(p * (1 - p) / draws);
            CHECK(std::abs(double(counts[j]) / draws - p) <= 3 * se + 1e-12);
        }
    }
}

TEST_CASE("clamped transition mass is rescaled and counted") {
    const SwitchingModel model = simple_model(2, 0.2, 1.0, 0.5, {0.0, 0.0}, 0.5);
    MatrixXd gen(2, 2);
    gen << -300.0, 300.0, 300.0, -300.0;  // mass 3 at dt = 0.01
    SimConfig sim;
    sim.dt = 0.01;
    sim.steps = 100;
    sim.batch = 2;
    sim.seed = 5;
    const auto paths =
        simulate_batch(model, GeneratorPolicy::constant(gen), sim, VectorXd::Zero(1), 0);
    for (const auto& p : paths) {
        CHECK(p.clamped_steps == 100);
        for (int k = 0; k < 100; ++k) CHECK(p.regimes[k + 1] != p.regimes[k]);
    }
    SimConfig strict = sim;
    strict.clamp_intensity = false;
    CHECK_THROWS_AS(
        simulate_batch(model, GeneratorPolicy::constant(gen), strict, VectorXd::Zero(1), 0),
        SolverError);
}

TEST_CASE("environment callback advances under the pre-jump regime") {
    const auto model = model_from_descriptor(default_descriptor("regulator"));
    const auto env = make_environment(model, 0.01);
    std::mt19937_64 rng_env = make_engine(11), rng_ref = make_engine(11);
    VectorXd x = VectorXd::Constant(1, 0.3), x_out(1);
    double reward = 0;
    env(0.2, x, 0, 1, rng_env, x_out, reward);  // action switches, dynamics must not
    CHECK(reward == doctest::Approx(2.0 * std::exp(-2.0 * 0.09) - 0.1));
    std::normal_distribution<double> normal(0, 1);
    const double z = normal(rng_ref);
    CHECK(x_out[0] == doctest::Approx(0.3 - 2.0 * 0.01 + 0.5 * 0.1 * z).epsilon(1e-13));
}

TEST_CASE("martingale increments") {
    SUBCASE("flat value, no rewards, frozen regime: identically zero") {
        SwitchingModel model = simple_model(2, 1e-4, 1.0, 0.5, {0.0, 0.0}, 0.5);
        SimConfig sim;
        sim.dt = 0.05;
        sim.steps = 20;
        sim.batch = 4;
        sim.seed = 3;
        const auto paths =
            simulate_batch(model, GeneratorPolicy::zero(2), sim, VectorXd::Zero(1), 0);
        const ValueFn flat = [](double, const VectorXd&, int) { return 1.0; };
        for (const auto& p : paths)
            for (double dm : martingale_increments(p, flat, model))
                CHECK(dm == 0.0);  // rates underflow, entropy is exactly zero
    }
    SUBCASE("switch with everything else zero charges the cost") {
        SwitchingModel model = simple_model(2, 1e-4, 1.0, 0.5, {0.0, 0.0}, 0.5);
        MatrixXd gen(2, 2);
        gen << -20.0, 20.0, 0.0, 0.0;
        SimConfig sim;
        sim.dt = 0.05;
        sim.steps = 20;
        sim.batch = 1;
        sim.seed = 3;
        const auto paths = simulate_batch(model, GeneratorPolicy::constant(gen), sim,
                                          VectorXd::Zero(1), 0);
        const ValueFn flat = [](double, const VectorXd&, int) { return 0.0; };
        const GeneratorPolicy policy = GeneratorPolicy::zero(2);  // entropy term off
        const auto dm = martingale_increments(paths[0], flat, model, &policy);
        REQUIRE(paths[0].jumps.size() == 1);
        for (int k = 0; k < 20; ++k)
            CHECK(dm[k] == (k == paths[0].jumps[0].step ? -0.5 : 0.0));
    }
    SUBCASE("symmetric model: exact closed-form value gives mean zero") {
        const SwitchingModel model = simple_model(2, 0.2, 1.0, 0.5, {-1.0, 1.0}, 0.5);
        const double alpha = 0.2 * std::exp(-2.5);
        const ValueFn value = [&](double t, const VectorXd&, int) {
            return alpha * (1.0 - t);
        };
        const double rate = std::exp(-2.5);
        const GeneratorPolicy policy = GeneratorPolicy::constant(
            (MatrixXd(2, 2) << -rate, rate, rate, -rate).finished());
        SimConfig sim;
        sim.dt = 0.01;
        sim.steps = 100;
        sim.batch = 20000;
        sim.seed = 17;
        const BatchStats st =
            martingale_total_stats(model, policy, value, sim, VectorXd::Zero(1), 0);
        CHECK(std::abs(st.mean) <= 3 * st.std_error);

        // planted bias v + eps t shows up as eps T and is detected loudly
        const double eps = 0.1;
        const ValueFn biased = [&](double t, const VectorXd& x, int i) {
            return value(t, x, i) + eps * t;
        };
        const BatchStats bad =
            martingale_total_stats(model, policy, biased, sim, VectorXd::Zero(1), 0);
        CHECK(std::abs(bad.mean) > 5 * bad.std_error);
        CHECK(bad.mean == doctest::Approx(eps * 1.0).epsilon(0.05));
    }
}

TEST_CASE("payoff statistics agree with per-path payoffs") {
    const auto model = model_from_descriptor(default_descriptor("regulator"));
    const ValueField field = solve_exploratory_hjb(
        model, SpaceTimeGrid::uniform(1.0, 100, {{-3.0, 3.0}}, {121}));
    const GeneratorPolicy policy = GeneratorPolicy::derived(field, model);
    SimConfig sim;
    sim.dt = 0.01;
    sim.steps = 100;
    sim.batch = 64;
    sim.seed = 21;
    const VectorXd x0 = VectorXd::Zero(1);

    const auto paths = simulate_batch(model, policy, sim, x0, 0);
    double mean = 0;
    for (const auto& p : paths) mean += episode_payoff(p, model, policy);
    mean /= sim.batch;
    const BatchStats st = payoff_stats(model, policy, sim, x0, 0);
    CHECK(st.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(st.n == 64);
}

TEST_CASE("exact exponential kernel matches the generator exponential") {
    const SwitchingModel model = simple_model(2, 0.2, 1.0, 0.5, {0.0, 0.0}, 0.5);
    MatrixXd gen(2, 2);
    gen << -2.0, 2.0, 1.0, -1.0;
    SimConfig sim;
    sim.dt = 0.25;
    sim.steps = 4;
    sim.batch = 40000;
    sim.seed = 29;
    sim.exact_exponential_kernel = true;
    const auto paths =
        simulate_batch(model, GeneratorPolicy::constant(gen), sim, VectorXd::Zero(1), 0);
    // frequency of leaving regime 0 on the first step vs expm row
    int switched = 0;
    for (const auto& p : paths) switched += p.regimes[1] == 1 ? 1 : 0;
    const MatrixXd kernel = (gen * sim.dt).exp();
    const double p01 = kernel(0, 1);
    const double se = std::sqrt(p01 * (1 - p01) / sim.batch);
    CHECK(std::abs(double(switched) / sim.batch - p01) <= 3 * se);
    // visibly different from the first-order kernel at this coarse step
    CHECK(std::abs(p01 - 2.0 * sim.dt) > 5 * se);
}
