// switchx: reference solvers, policy-evaluation training, and the acceptance
// suite behind one command-line surface. See README for examples.
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "switching/acceptance.hpp"
#include "switching/builtin.hpp"
#include "switching/classical.hpp"
#include "switching/io.hpp"
#include "switching/pde.hpp"
#include "switching/policy_iteration.hpp"
#include "switching/rl.hpp"
#include "switching/rng.hpp"
#include "switching/simulate.hpp"

namespace fs = std::filesystem;
using namespace switching;
using nlohmann::json;

namespace {

struct CliConfig {
    std::string family = "regulator";
    std::string model_json;  // descriptor file for --family custom-json
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> lambda_sweep;

    std::vector<double> box;      // lo,hi per axis
    std::vector<int> grid_nodes;  // per axis
    int grid_steps = 0;

    int episodes = -1;
    int batch = -1;
    int steps = -1;  // simulation steps per episode
    double rate = std::numeric_limits<double>::quiet_NaN();
    std::string schedule;  // adam | constant | robbins-monro
    std::string mode = "offline";
    double rm_A = 1.0, rm_B = 1.0, rm_nu = 1.0;

    std::uint64_t seed = 0;
    double slice_t = 0.5;
    double slice_fix = 1.0;
    std::string out;
    int max_iters = 12;
    double tol = 1e-8;
};

std::string default_out_root() {
    if (const char* env = std::getenv("SWITCHX_OUT")) return env;
    return "switchx-out";
}

// fill unset config fields from a JSON file; flags already parsed win
void merge_config_file(CliConfig& cfg, const json& file, const CLI::App& app) {
    auto take = [&](const char* flag, auto& field, const char* key) {
        const CLI::Option* opt = app.get_option_no_throw(flag);
        if (opt && opt->count() > 0) return;  // explicit flag wins
        if (file.contains(key)) field = file.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("--family", cfg.family, "family");
    take("--model-json", cfg.model_json, "model_json");
    take("--lambda", cfg.lambda, "lambda");
    take("--lambda-sweep", cfg.lambda_sweep, "lambda_sweep");
    take("--box", cfg.box, "box");
    take("--grid-nodes", cfg.grid_nodes, "grid_nodes");
    take("--grid-steps", cfg.grid_steps, "grid_steps");
    take("--episodes", cfg.episodes, "episodes");
    take("--batch", cfg.batch, "batch");
    take("--steps", cfg.steps, "steps");
    take("--rate", cfg.rate, "rate");
    take("--schedule", cfg.schedule, "schedule");
    take("--mode", cfg.mode, "mode");
    take("--seed", cfg.seed, "seed");
    take("--slice-t", cfg.slice_t, "slice_t");
    take("--slice-fix", cfg.slice_fix, "slice_fix");
    take("--out", cfg.out, "out");
    take("--max-iters", cfg.max_iters, "max_iters");
    take("--tol", cfg.tol, "tol");
}

json build_descriptor(const CliConfig& cfg) {
    json descriptor;
    if (cfg.family == "custom-json") {
        if (cfg.model_json.empty())
            throw ValidationError("custom-json family needs --model-json FILE");
        std::ifstream in(cfg.model_json);
        if (!in) throw ValidationError("model descriptor not found: " + cfg.model_json);
        try {
            descriptor = json::parse(in);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("model descriptor: ") + e.what());
        }
    } else {
        descriptor = default_descriptor(cfg.family);
    }
    if (!std::isnan(cfg.lambda)) descriptor["lambda"] = cfg.lambda;
    return descriptor;
}

SpaceTimeGrid build_grid(const CliConfig& cfg, const SwitchingModel& model) {
    std::vector<std::pair<double, double>> box;
    std::vector<int> nodes;
    int steps;
    if (model.state_dim == 1) {
        box = {{-3.0, 3.0}};
        nodes = {601};
        steps = 2000;
    } else {
        box = {{0.0, 3.0}, {0.0, 3.0}};
        nodes = {201, 201};
        steps = 1500;
    }
    if (!cfg.box.empty()) {
        if (static_cast<int>(cfg.box.size()) != 2 * model.state_dim)
            throw ValidationError("--box needs lo,hi per spatial axis");
        box.clear();
        for (int a = 0; a < model.state_dim; ++a)
            box.push_back({cfg.box[2 * a], cfg.box[2 * a + 1]});
    }
    if (!cfg.grid_nodes.empty()) {
        if (static_cast<int>(cfg.grid_nodes.size()) != model.state_dim)
            throw ValidationError("--grid-nodes needs one count per spatial axis");
        nodes = cfg.grid_nodes;
    }
    if (cfg.grid_steps > 0) steps = cfg.grid_steps;
    return SpaceTimeGrid::uniform(model.horizon, steps, box, nodes);
}

std::vector<double> slice_coords(const SwitchingModel& model) {
    // central stretch of the default truncation box
    const double lo = model.state_dim == 1 ? -2.0 : 0.0;
    const double hi = model.state_dim == 1 ? 2.0 : 3.0;
    std::vector<double> xs;
    for (int p = 0; p <= 80; ++p) xs.push_back(lo + (hi - lo) * p / 80.0);
    return xs;
}

int cmd_solve(const CliConfig& cfg) {
    const json descriptor = build_descriptor(cfg);
    const SwitchingModel model = model_from_descriptor(descriptor);
    const std::uint64_t model_hash = descriptor_hash(descriptor);
    const SpaceTimeGrid grid = build_grid(cfg, model);

    const auto pre = preflight(model, grid);
    if (!pre.elliptic)
        std::cerr << "preflight: diffusion matrix is degenerate (min eigenvalue "
                  << pre.min_ellipticity << "); proceeding with the monotone scheme\n";

    const fs::path out = cfg.out.empty() ? fs::path(default_out_root()) / "solve"
                                         : fs::path(cfg.out);
    fs::create_directories(out);
    std::vector<std::string> outputs;

    const ValueField direct = solve_exploratory_hjb(model, grid);
    save_value_field(direct, (out / "value_exploratory").string(), model_hash);
    outputs.push_back((out / "value_exploratory.json").string());
    outputs.push_back((out / "value_exploratory.bin").string());

    IterateOptions iopt;
    iopt.max_iters = cfg.max_iters;
    iopt.tol = cfg.tol;
    iopt.reference = &direct;
    const IterateResult it = iterate(model, grid, std::nullopt, iopt);
    write_iteration_report_csv(it.report, (out / "iteration_report.csv").string());
    outputs.push_back((out / "iteration_report.csv").string());
    std::cout << "policy iteration: " << (it.report.converged ? "converged" : "NOT converged")
              << " in " << it.report.iterations << " iterations, final gap "
              << it.field.sup_distance(direct) << "\n";

    if (!cfg.lambda_sweep.empty()) {
        const auto rows = lambda_sweep(model, grid, cfg.lambda_sweep);
        write_sweep_csv(rows, (out / "sweep.csv").string());
        outputs.push_back((out / "sweep.csv").string());
        const ValueField vi = solve_variational_inequality(model, grid);
        save_value_field(vi, (out / "value_vi").string(), model_hash);
        outputs.push_back((out / "value_vi.json").string());
        outputs.push_back((out / "value_vi.bin").string());
    }

    // plot data: value slices at t = slice_t for each axis
    for (int axis = 0; axis < model.state_dim; ++axis) {
        const auto xs = slice_coords(model);
        std::vector<std::vector<double>> cols(model.num_regimes,
                                              std::vector<double>(xs.size()));
        VectorXd x(model.state_dim);
        for (std::size_t p = 0; p < xs.size(); ++p) {
            for (int a = 0; a < model.state_dim; ++a) x[a] = cfg.slice_fix;
            x[axis] = xs[p];
            for (int i = 0; i < model.num_regimes; ++i)
                cols[i][p] = direct.eval(cfg.slice_t, x, i);
        }
        const std::string name = model.state_dim == 1
                                     ? std::string("value_slice.csv")
                                     : "value_slice_axis" + std::to_string(axis) + ".csv";
        write_value_slice_csv((out / name).string(), xs, cols);
        outputs.push_back((out / name).string());
    }

    json snapshot = descriptor;
    snapshot["grid"] = {{"steps", grid.time_steps}, {"nodes", grid.num_space_nodes()}};
    snapshot["max_iters"] = cfg.max_iters;
    snapshot["tol"] = cfg.tol;
    write_manifest((out / "manifest.json").string(), snapshot, cfg.seed, model_hash, outputs);
    std::cout << "wrote " << outputs.size() + 1 << " files under " << out << "\n";
    return 0;
}

int cmd_train(const CliConfig& cfg) {
    const json descriptor = build_descriptor(cfg);
    const SwitchingModel model = model_from_descriptor(descriptor);
    const std::uint64_t model_hash = descriptor_hash(descriptor);
    const bool regulator_like = model.state_dim == 1;

    ValueNetConfig ncfg;
    ncfg.hidden = {128, 128};
    ncfg.activations = regulator_like
                           ? std::vector<Activation>{Activation::relu, Activation::tanh}
                           : std::vector<Activation>{Activation::tanh, Activation::tanh};
    ValueApproximator net(ncfg, model.num_regimes, model.state_dim, model.horizon,
                          model.terminal_reward);

    SimConfig sim;
    sim.steps = cfg.steps > 0 ? cfg.steps : (regulator_like ? 100 : 50);
    sim.dt = model.horizon / sim.steps;
    sim.seed = cfg.seed;

    TrainConfig tcfg;
    tcfg.episodes = cfg.episodes >= 0 ? cfg.episodes : 1000;
    tcfg.batch = cfg.batch > 0 ? cfg.batch : (regulator_like ? 64 : 512);
    tcfg.base_rate = !std::isnan(cfg.rate) ? cfg.rate : (regulator_like ? 1e-3 : 1e-4);
    tcfg.schedule = RateSchedule::adaptive_moment;
    if (cfg.schedule == "constant") tcfg.schedule = RateSchedule::constant;
    if (cfg.schedule == "robbins-monro") tcfg.schedule = RateSchedule::robbins_monro;
    tcfg.rm_A = cfg.rm_A;
    tcfg.rm_B = cfg.rm_B;
    tcfg.rm_nu = cfg.rm_nu;
    tcfg.mode = cfg.mode == "online" ? TrainMode::online : TrainMode::offline;
    tcfg.seed = cfg.seed;
    tcfg.exploring_starts = true;
    tcfg.start_lo = VectorXd::Constant(model.state_dim, regulator_like ? -2.0 : 0.1);
    tcfg.start_hi = VectorXd::Constant(model.state_dim, regulator_like ? 2.0 : 3.0);

    const fs::path out = cfg.out.empty() ? fs::path(default_out_root()) / "train"
                                         : fs::path(cfg.out);
    fs::create_directories(out);

    const VectorXd init = net.init_params(cfg.seed);
    TrainResult res;
    try {
        res = train(net, model, sim, tcfg, make_environment(model, sim.dt), init);
    } catch (const SolverError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 3;
    }
    if (res.log.empty()) res.params = init;

    std::vector<std::string> outputs;
    save_checkpoint((out / "checkpoint.ckpt").string(), net, res.params, model_hash,
                    {cfg.seed});
    outputs.push_back((out / "checkpoint.ckpt").string());
    write_training_log_csv(res.log, (out / "training_log.csv").string());
    outputs.push_back((out / "training_log.csv").string());

    for (int axis = 0; axis < model.state_dim; ++axis) {
        const auto xs = slice_coords(model);
        std::vector<std::vector<double>> vals(model.num_regimes,
                                              std::vector<double>(xs.size()));
        std::vector<std::vector<double>> probs;
        for (int i = 0; i < model.num_regimes; ++i)
            for (int j = 0; j < model.num_regimes; ++j)
                if (i != j) probs.emplace_back(xs.size());
        VectorXd x(model.state_dim);
        for (std::size_t p = 0; p < xs.size(); ++p) {
            for (int a = 0; a < model.state_dim; ++a) x[a] = cfg.slice_fix;
            x[axis] = xs[p];
            for (int i = 0; i < model.num_regimes; ++i)
                vals[i][p] = net.value(res.params, cfg.slice_t, x, i);
            const MatrixXd gen = policy_from_params(net, res.params, model, cfg.slice_t, x);
            int col = 0;
            for (int i = 0; i < model.num_regimes; ++i)
                for (int j = 0; j < model.num_regimes; ++j)
                    if (i != j) probs[col++][p] = std::min(gen(i, j) * sim.dt, 1.0);
        }
        const std::string suffix =
            model.state_dim == 1 ? std::string(".csv") : "_axis" + std::to_string(axis) + ".csv";
        write_value_slice_csv((out / ("value_slice" + suffix)).string(), xs, vals);
        outputs.push_back((out / ("value_slice" + suffix)).string());
        write_probability_slice_csv((out / ("probability_slice" + suffix)).string(), xs,
                                    model.num_regimes, probs);
        outputs.push_back((out / ("probability_slice" + suffix)).string());
    }

    json snapshot = descriptor;
    snapshot["train"] = {{"episodes", tcfg.episodes},
                         {"batch", tcfg.batch},
                         {"rate", tcfg.base_rate},
                         {"mode", cfg.mode},
                         {"steps", sim.steps}};
    write_manifest((out / "manifest.json").string(), snapshot, cfg.seed, model_hash, outputs);

    if (!res.log.empty())
        std::cout << "final loss " << res.log.back().loss << " after "
                  << res.log.back().episode << " updates\n";
    std::cout << "wrote " << outputs.size() + 1 << " files under " << out << "\n";
    return 0;
}

int cmd_verify(std::uint64_t seed, int coarsen, const std::vector<int>& only) {
    AcceptanceOptions opt;
    opt.seed = seed;
    opt.coarsen = coarsen;
    opt.only = only;
    const auto results = run_acceptance(opt, std::cout);
    int failures = 0;
    for (const auto& r : results) failures += r.pass ? 0 : 1;
    std::cout << results.size() - failures << "/" << results.size() << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exploratory optimal switching toolkit"};
    app.require_subcommand(1);

    CliConfig cfg;
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (flags win)");
        sub->add_option("--family", cfg.family, "regulator | put-options | custom-json")
            ->check(CLI::IsMember({"regulator", "put-options", "custom-json"}));
        sub->add_option("--model-json", cfg.model_json, "descriptor file for custom-json");
        sub->add_option("--lambda", cfg.lambda, "temperature override");
        sub->add_option("--seed", cfg.seed, "master seed");
        sub->add_option("--out", cfg.out, "output directory (default $SWITCHX_OUT)");
        sub->add_option("--slice-t", cfg.slice_t, "time for plot-data slices");
        sub->add_option("--slice-fix", cfg.slice_fix, "fixed coordinate for 2-D slices");
    };

    CLI::App* solve = app.add_subcommand("solve", "reference PDE solves + policy iteration");
    add_common(solve);
    solve->add_option("--lambda-sweep", cfg.lambda_sweep,
                      "descending temperatures for the VI comparison")
        ->delimiter(',');
    solve->add_option("--box", cfg.box, "lo,hi per spatial axis")->delimiter(',');
    solve->add_option("--grid-nodes", cfg.grid_nodes, "nodes per spatial axis")
        ->delimiter(',');
    solve->add_option("--grid-steps", cfg.grid_steps, "time steps");
    solve->add_option("--max-iters", cfg.max_iters, "policy iteration cap");
    solve->add_option("--tol", cfg.tol, "policy iteration tolerance");

    CLI::App* train_cmd = app.add_subcommand("train", "martingale policy evaluation");
    add_common(train_cmd);
    train_cmd->add_option("--episodes", cfg.episodes, "parameter updates");
    train_cmd->add_option("--batch", cfg.batch, "episodes per update");
    train_cmd->add_option("--steps", cfg.steps, "time steps per episode");
    train_cmd->add_option("--rate", cfg.rate, "learning rate");
    train_cmd->add_option("--schedule", cfg.schedule, "adam | constant | robbins-monro")
        ->check(CLI::IsMember({"adam", "constant", "robbins-monro", ""}));
    train_cmd->add_option("--mode", cfg.mode, "offline | online")
        ->check(CLI::IsMember({"offline", "online"}));
    train_cmd->add_option("--rm-A", cfg.rm_A, "robbins-monro A");
    train_cmd->add_option("--rm-B", cfg.rm_B, "robbins-monro B");
    train_cmd->add_option("--rm-nu", cfg.rm_nu, "robbins-monro nu");

    std::uint64_t verify_seed = 2025;
    int coarsen = 1;
    std::vector<int> only;
    CLI::App* verify = app.add_subcommand("verify", "run the acceptance criteria");
    verify->add_option("--seed", verify_seed, "seed for the Monte Carlo criteria");
    verify->add_option("--coarsen", coarsen,
                       "coarsen reference grids (demonstrates sensitivity)");
    verify->add_option("--only", only, "criterion ids")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "config file not found: " << config_path << "\n";
                return 1;
            }
            json file;
            try {
                file = json::parse(in);
            } catch (const json::exception& e) {
                std::cerr << "config file: " << e.what() << "\n";
                return 1;
            }
            merge_config_file(cfg, file, *sub);
        }
        if (sub == solve) return cmd_solve(cfg);
        if (sub == train_cmd) return cmd_train(cfg);
        return cmd_verify(verify_seed, coarsen, only);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
