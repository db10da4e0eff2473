#pragma once

#include <cmath>
#include <vector>

#include "switching/model.hpp"

namespace switching::testutil {

// minimal constant-coefficient model for unit tests; costs constant g.
inline SwitchingModel simple_model(int m, double lambda, double horizon, double g,
                                   std::vector<double> drifts, double sigma,
                                   RunningRewardFn f = {}, TerminalRewardFn h = {}) {
    SwitchingModel model;
    model.num_regimes = m;
    model.state_dim = 1;
    model.noise_dim = 1;
    model.drift = [drifts](double, const VectorXd&, int i, VectorXd& out) {
        out[0] = drifts[i];
    };
    model.vol = [sigma](double, const VectorXd&, int, MatrixXd& out) { out(0, 0) = sigma; };
    model.running_reward = f ? f : [](double, const VectorXd&, int) { return 0.0; };
    model.terminal_reward = h ? h : [](const VectorXd&) { return 0.0; };
    model.switch_cost = MatrixXd::Constant(m, m, g);
    model.switch_cost.diagonal().setZero();
    model.temperature = lambda;
    model.horizon = horizon;
    model.reward_bound = 0.0;
    model.time_invariant = true;
    model.tag = "test";
    return model;
}

}  // namespace switching::testutil
