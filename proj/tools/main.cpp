// Command-line front end: scenario generation, single-shot and receding-
// horizon solves, parameter sweeps, and the desk-scale brute-force oracle.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hvacopt/recover.hpp"
#include "hvacopt/runner.hpp"

namespace {

struct CommonOpts {
    std::string scenario;
    int zones = 5;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string label = "run";
    double rho = 15.0;
    double epsilon = 1e-2;
    double tau = 0.0;
    int max_iters = 500;
    int threads = 0;
    int horizon = 48;
    bool complete_graph = false;
    std::string init_temps;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--scenario", o.scenario, "Scenario JSON file (omit to generate)");
    cmd->add_option("--zones", o.zones, "Zone count for the generator");
    cmd->add_option("--seed", o.seed, "Generator / solver seed");
    cmd->add_option("--out-dir", o.out_dir, "Output directory");
    cmd->add_option("--label", o.label, "Artifact file prefix");
    cmd->add_option("--rho", o.rho, "Penalty parameter");
    cmd->add_option("--epsilon", o.epsilon, "Residual stopping threshold");
    cmd->add_option("--tau", o.tau, "Primal relaxation step; 0 selects 1/(1+max degree)");
    cmd->add_option("--max-iters", o.max_iters, "Iteration cap");
    cmd->add_option("--threads", o.threads, "Worker threads (0: HVACOPT_THREADS or hardware)");
    cmd->add_option("--horizon", o.horizon, "Generator horizon (stages)");
    cmd->add_flag("--complete-graph", o.complete_graph, "Couple every zone pair");
    cmd->add_option("--init-temps", o.init_temps,
                    "Comma-separated initial temperatures overriding the random draw");
}

hvacopt::ExperimentSpec to_spec(const CommonOpts& o) {
    hvacopt::ExperimentSpec spec;
    if (!o.scenario.empty()) spec.scenario_path = o.scenario;
    spec.n_zones = o.zones;
    spec.seed = o.seed;
    spec.out_dir = o.out_dir;
    spec.label = o.label;
    spec.solver.rho = o.rho;
    spec.solver.epsilon = o.epsilon;
    spec.solver.tau = o.tau;
    spec.solver.max_iters = o.max_iters;
    spec.solver.threads = o.threads;
    spec.generator.horizon = o.horizon;
    spec.generator.complete_graph = o.complete_graph;
    if (!o.init_temps.empty()) {
        std::vector<double> temps;
        std::stringstream ss(o.init_temps);
        std::string item;
        while (std::getline(ss, item, ',')) temps.push_back(std::stod(item));
        spec.generator.init_temps = temps;
    }
    return spec;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized HVAC schedule optimizer"};
    app.require_subcommand(1);

    CommonOpts gen_o, solve_o, mpc_o, sweep_o, oracle_o;
    std::string gen_out = "scenario.json";
    auto* gen = app.add_subcommand("generate", "Generate a scenario document");
    add_common(gen, gen_o);
    gen->add_option("--out", gen_out, "Scenario output path");

    auto* solve = app.add_subcommand("solve", "Single-shot decentralized solve");
    add_common(solve, solve_o);
    bool with_relaxed = false, with_nonlinear = false, with_oracle = false;
    bool repair_cap = false;
    std::string dump_stacked;
    solve->add_flag("--centralized-relaxed", with_relaxed,
                    "Also solve the relaxation centrally");
    solve->add_flag("--centralized-nonlinear", with_nonlinear,
                    "Also run the centralized local solver");
    solve->add_flag("--oracle", with_oracle, "Also run the brute-force oracle (toys)");
    solve->add_flag("--repair-cap", repair_cap,
                    "Rescale recovered flows onto the AHU cap");
    solve->add_option("--dump-stacked", dump_stacked,
                      "Write the stacked constraint blocks to this file");

    auto* mpc = app.add_subcommand("mpc", "Receding-horizon run");
    add_common(mpc, mpc_o);
    int planning_horizon = 10;
    mpc->add_option("--planning-horizon", planning_horizon, "Stages per MPC solve");

    auto* sweep = app.add_subcommand("sweep", "Penalty or zone-count sweep");
    add_common(sweep, sweep_o);
    std::string rho_list, zone_list;
    sweep->add_option("--rho-list", rho_list, "Comma-separated penalty values");
    sweep->add_option("--zones-list", zone_list, "Comma-separated zone counts");

    auto* oracle = app.add_subcommand("oracle", "Brute-force oracle on a toy instance");
    add_common(oracle, oracle_o);
    double grid_res = 0.025;
    oracle->add_option("--grid-res", grid_res, "Flow grid resolution [kg/s]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto spec = to_spec(gen_o);
            const hvacopt::Scenario sc = hvacopt::spec_scenario(spec);
            hvacopt::save_scenario(sc, gen_out);
            std::printf("wrote %s (%d zones, horizon %d, seed %llu)\n", gen_out.c_str(),
                        sc.model.zone_count(), sc.model.horizon(),
                        static_cast<unsigned long long>(sc.seed));
        } else if (solve->parsed()) {
            auto spec = to_spec(solve_o);
            spec.run_centralized_relaxed = with_relaxed;
            spec.run_centralized_nonlinear = with_nonlinear;
            spec.run_oracle = with_oracle;
            spec.repair_cap = repair_cap;
            if (!dump_stacked.empty()) {
                const hvacopt::Scenario sc = hvacopt::spec_scenario(spec);
                const auto dyn = hvacopt::build_discrete_dynamics(sc.model, sc.exo);
                const auto sys = hvacopt::StackedSystem::assemble(dyn, sc.model);
                std::ofstream os(dump_stacked);
                sys.dump(os);
            }
            const auto art = hvacopt::run_single_shot(spec);
            std::printf("%s\n", art.summary_json.c_str());
        } else if (mpc->parsed()) {
            const auto spec = to_spec(mpc_o);
            const auto art = hvacopt::run_receding_horizon(spec, planning_horizon);
            std::printf("%s\n", art.summary_json.c_str());
        } else if (sweep->parsed()) {
            const auto spec = to_spec(sweep_o);
            if (!rho_list.empty()) {
                const auto art = hvacopt::run_rho_sweep(spec, parse_doubles(rho_list));
                std::printf("%s\n", art.summary_json.c_str());
            } else if (!zone_list.empty()) {
                const auto art = hvacopt::run_zone_sweep(spec, parse_ints(zone_list));
                std::printf("%s\n", art.summary_json.c_str());
            } else {
                std::fprintf(stderr, "sweep needs --rho-list or --zones-list\n");
                return 2;
            }
        } else if (oracle->parsed()) {
            const auto spec = to_spec(oracle_o);
            const hvacopt::Scenario sc = hvacopt::spec_scenario(spec);
            const auto ref = hvacopt::brute_force_oracle(sc.model, sc.exo, grid_res);
            if (!ref) {
                std::printf("infeasible at resolution %g\n", grid_res);
                return 1;
            }
            std::printf("oracle cost %.9f (method %s)\n", ref->objective,
                        ref->method.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
