#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "switching/builtin.hpp"
#include "switching/model.hpp"
#include "test_util.hpp"

using namespace switching;
using testutil::simple_model;

TEST_CASE("entropy regularizer closed forms") {
    RegimeIntensityRow row = RegimeIntensityRow::from_off_diagonal(0, Eigen::Vector2d(0, 1));
    CHECK(entropy_regularizer(row) == doctest::Approx(1.0).epsilon(1e-14));

    row = RegimeIntensityRow::from_off_diagonal(0, Eigen::Vector2d(0, 0));
    CHECK(entropy_regularizer(row) == 0.0);  // 0 log 0 = 0

    const double e = std::exp(1.0);
    row = RegimeIntensityRow::from_off_diagonal(1, Eigen::Vector3d(e, 0, e));
    CHECK(entropy_regularizer(row) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("intensity row validation") {
    RegimeIntensityRow row;
    row.source = 0;
    row.rates = Eigen::Vector2d(-1.0, 1.0);
    CHECK_NOTHROW(row.validate());
    row.rates = Eigen::Vector2d(-1.0, 1.0 + 1e-6);
    CHECK_THROWS_AS(row.validate(), ValidationError);
    row.rates = Eigen::Vector2d(0.5, -0.5);
    row.source = 0;
    CHECK_THROWS_AS(row.validate(), ValidationError);  // negative off-diagonal
}

TEST_CASE("optimal intensity formula") {
    SwitchingModel model = simple_model(2, 0.2, 1.0, 0.5, {0.0, 0.0}, 1.0);

    SUBCASE("difference equal to the cost gives unit rate") {
        Eigen::Vector2d v(0.0, 0.5);
        const auto row = optimal_intensity(v, 0, model);
        CHECK(row.rates[1] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(row.rates[0] == doctest::Approx(-1.0).epsilon(1e-15));
    }
    SUBCASE("direct evaluation at lambda 1 and zero cost") {
        SwitchingModel free_switch = model;  // bypasses validate: test-only zero cost
        free_switch.temperature = 1.0;
        free_switch.switch_cost.setZero();
        const auto row = optimal_intensity(Eigen::Vector2d(0.0, -1.0), 0, free_switch);
        CHECK(row.rates[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    }
    SUBCASE("overflow guard names the pair") {
        Eigen::Vector2d v(0.0, 200.0);
        CHECK_THROWS_WITH_AS(optimal_intensity(v, 0, model),
                             doctest::Contains("(0->1)"), OverflowError);
        CHECK_NOTHROW(optimal_intensity(v, 0, model, 1e4));
    }
    SUBCASE("shift invariance in the value vector") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> uni(-5, 5);
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::Vector3d v(uni(rng), uni(rng), uni(rng));
            const double c = uni(rng);
            SwitchingModel m3 = simple_model(3, 0.3, 1.0, 0.4, {0, 0, 0}, 1.0);
            const auto a = optimal_intensity(v, 1, m3);
            const auto b = optimal_intensity(v.array() + c, 1, m3);
            CHECK((a.rates - b.rates).cwiseAbs().maxCoeff() <=
                  1e-12 * std::max(1.0, a.rates.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("entropy is concave in the off-diagonal rates") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(0.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::Vector3d a(0, uni(rng), uni(rng)), b(0, uni(rng), uni(rng));
        const auto ra = RegimeIntensityRow::from_off_diagonal(0, a);
        const auto rb = RegimeIntensityRow::from_off_diagonal(0, b);
        const auto rm = RegimeIntensityRow::from_off_diagonal(0, 0.5 * (a + b));
        CHECK(entropy_regularizer(rm) >=
              0.5 * (entropy_regularizer(ra) + entropy_regularizer(rb)) - 1e-12);
    }
}

TEST_CASE("hamiltonian at the optimizer reduces to the exponential sum") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    SwitchingModel model = simple_model(3, 0.25, 1.0, 0.3, {0, 0, 0}, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Vector3d v(uni(rng), uni(rng), uni(rng));
        for (int i = 0; i < 3; ++i) {
            const auto row = optimal_intensity(v, i, model);
            double expected = 0;
            for (int j = 0; j < 3; ++j)
                if (j != i)
                    expected += std::exp((v[j] - model.switch_cost(i, j) - v[i]) /
                                         model.temperature);
            expected *= model.temperature;
            CHECK(hamiltonian(row, v, model) == doctest::Approx(expected).epsilon(1e-10));
        }
    }
}

TEST_CASE("bound constant") {
    SUBCASE("regulator value") {
        const auto model = model_from_descriptor(default_descriptor("regulator"));
        CHECK(model.reward_bound == doctest::Approx(3.9));
        CHECK(bound_constant(model) ==
              doctest::Approx(3.9 + 0.2 * std::exp(-2.5)).epsilon(1e-12));
        CHECK(bound_constant(model) == doctest::Approx(3.916417).epsilon(1e-6));
        CHECK(value_bound(model, model.horizon) == doctest::Approx(3.9));
        // declared bound dominates a dense scan of |f| + |h|
        const double scanned = scan_reward_bound(model, VectorXd::Constant(1, -3.0),
                                                 VectorXd::Constant(1, 3.0), 6001);
        CHECK(scanned <= model.reward_bound + 1e-12);
        CHECK(scanned == doctest::Approx(3.9).epsilon(1e-6));
    }
    SUBCASE("large temperature asymptote") {
        SwitchingModel model = simple_model(2, 1000.0, 1.0, 0.5, {0, 0}, 1.0);
        model.reward_bound = 1.0;
        const double asymptote = model.reward_bound + model.temperature * (2 - 1);
        CHECK(std::abs(bound_constant(model) - asymptote) <= 0.01 * asymptote);
    }
    SUBCASE("huge costs underflow to K_fh") {
        SwitchingModel model = simple_model(2, 0.2, 1.0, 1e4, {0, 0}, 1.0);
        model.reward_bound = 2.5;
        CHECK(bound_constant(model) == doctest::Approx(2.5).epsilon(1e-12));
    }
}

TEST_CASE("model validation") {
    SwitchingModel good = simple_model(2, 0.2, 1.0, 0.5, {-1, 1}, 0.5);
    CHECK_NOTHROW(good.validate());

    SUBCASE("single regime rejected") {
        SwitchingModel bad = good;
        bad.num_regimes = 1;
        bad.switch_cost = MatrixXd::Zero(1, 1);
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
    SUBCASE("nonzero diagonal cost rejected") {
        SwitchingModel bad = good;
        bad.switch_cost(0, 0) = 0.1;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
    SUBCASE("zero off-diagonal cost rejected") {
        SwitchingModel bad = good;
        bad.switch_cost(0, 1) = 0.0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
    SUBCASE("triangle condition enforced") {
        SwitchingModel bad = simple_model(3, 0.2, 1.0, 0.5, {0, 0, 0}, 1.0);
        bad.switch_cost(0, 2) = 1.5;  // worse than 0 -> 1 -> 2 at 1.0
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
    SUBCASE("nonpositive temperature and horizon rejected") {
        SwitchingModel bad = good;
        bad.temperature = 0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        bad = good;
        bad.horizon = -1;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
}

TEST_CASE("builtin descriptors") {
    SUBCASE("regulator defaults") {
        const auto model = model_from_descriptor(default_descriptor("regulator"));
        CHECK(model.num_regimes == 2);
        CHECK(model.temperature == 0.2);
        CHECK(model.horizon == 1.0);
        VectorXd x0 = VectorXd::Zero(1);
        CHECK(model.running_reward(0, x0, 0) == doctest::Approx(1.9));
        CHECK(model.terminal_reward(x0) == doctest::Approx(2.0));
        VectorXd mu(1);
        model.drift(0, x0, 0, mu);
        CHECK(mu[0] == -2.0);
        model.drift(0, x0, 1, mu);
        CHECK(mu[0] == 2.0);
        CHECK(model.switch_cost(0, 1) == 0.5);
    }
    SUBCASE("put-options defaults") {
        const auto model = model_from_descriptor(default_descriptor("put-options"));
        CHECK(model.num_regimes == 3);
        CHECK(model.state_dim == 2);
        CHECK(model.temperature == 0.1);
        Eigen::Vector2d s(0.8, 1.5);
        CHECK(model.running_reward(0, s, 0) == doctest::Approx(0.2));
        CHECK(model.running_reward(0, s, 1) == 0.0);
        CHECK(model.running_reward(0, s, 2) == doctest::Approx(0.05));
        CHECK(model.terminal_reward(s) == 0.0);
        CHECK(model.switch_cost(0, 2) == 0.01);
        CHECK(model.switch_cost(2, 0) == 0.02);
        MatrixXd sigma(2, 2);
        model.vol(0, s, 0, sigma);
        CHECK(sigma(0, 0) == doctest::Approx(0.2 * 0.8));
        CHECK(sigma(1, 0) == doctest::Approx(0.1 * 1.5));  // rho defaults to 1
        CHECK(sigma(1, 1) == 0.0);
    }
    SUBCASE("partial descriptor merges over defaults") {
        nlohmann::json d = {{"model", "regulator"}, {"lambda", 0.05}};
        const auto model = model_from_descriptor(d);
        CHECK(model.temperature == 0.05);
        CHECK(model.horizon == 1.0);
    }
    SUBCASE("unknown family rejected") {
        CHECK_THROWS_AS(model_from_descriptor({{"model", "nope"}}), ValidationError);
        CHECK_THROWS_AS(model_from_descriptor(nlohmann::json::object()), ValidationError);
    }
    SUBCASE("descriptor hash is canonical") {
        nlohmann::json a = {{"model", "regulator"}, {"lambda", 0.2}};
        nlohmann::json b = {{"lambda", 0.2}, {"model", "regulator"}};
        CHECK(descriptor_hash(a) == descriptor_hash(b));
        nlohmann::json c = {{"model", "regulator"}, {"lambda", 0.1}};
        CHECK(descriptor_hash(a) != descriptor_hash(c));
    }
}
