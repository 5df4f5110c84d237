#include "hvacopt/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "hvacopt/recover.hpp"

namespace hvacopt {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw SolveError("cannot write " + tmp.string());
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ordered_json violations_json(const ViolationReport& rep) {
    ordered_json v;
    v["comfort_count"] = rep.comfort.size();
    v["ahu_cap_count"] = rep.ahu_cap.size();
    v["max_comfort_excess"] = rep.max_comfort_excess;
    double cap_excess = 0.0;
    for (const auto& c : rep.ahu_cap) cap_excess = std::max(cap_excess, c.excess);
    v["max_cap_excess"] = cap_excess;
    v["feasible"] = rep.feasible();
    return v;
}

RunArtifacts finish(const ExperimentSpec& spec, ordered_json& summary,
                    const std::string& stem) {
    std::filesystem::create_directories(spec.out_dir);
    RunArtifacts art;
    art.summary_path = spec.out_dir / (stem + "_summary.json");
    art.summary_json = summary.dump(2) + "\n";
    validate_summary(art.summary_json);
    atomic_write(art.summary_path, art.summary_json);
    return art;
}

}  // namespace

Scenario spec_scenario(const ExperimentSpec& spec) {
    if (!spec.scenario_path.empty()) return load_scenario(spec.scenario_path);
    return generate_scenario(spec.n_zones, spec.seed, spec.generator);
}

void write_schedule_csv(const std::filesystem::path& path, const BuildingModel& model,
                        const ExogenousSeries& exo, const Schedule& schedule) {
    std::string text =
        "stage,zone,temp_c,flow_kg_s,cooling_kgK_s,price,stage_cooling_kw,stage_fan_kw\n";
    const int T = model.horizon();
    for (int t = 0; t < T; ++t) {
        const auto& sp = schedule.cost.per_stage[static_cast<size_t>(t)];
        for (int i = 0; i < model.zone_count(); ++i) {
            text += std::to_string(t) + "," + std::to_string(i) + "," +
                    fmt(schedule.temps(i, t)) + "," + fmt(schedule.flows(i, t)) + "," +
                    fmt(schedule.x_cool(i, t)) + "," + fmt(exo.price[t]) + "," +
                    fmt(sp.cooling_kw) + "," + fmt(sp.fan_kw) + "\n";
        }
    }
    atomic_write(path, text);
}

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<ConvergenceRecord>& trace) {
    std::string text =
        "iteration,residual,objective,dyn_residual,flow_residual,cap_residual,"
        "wall_seconds\n";
    for (const auto& r : trace) {
        text += std::to_string(r.iteration) + "," + fmt(r.residual) + "," +
                fmt(r.objective) + "," + fmt(r.dyn_residual) + "," +
                fmt(r.flow_residual) + "," + fmt(r.cap_residual) + "," +
                fmt(r.wall_seconds) + "\n";
    }
    atomic_write(path, text);
}

void validate_summary(const std::string& summary_json) {
    ordered_json j;
    try {
        j = ordered_json::parse(summary_json);
    } catch (const std::exception& e) {
        throw SolveError(std::string("summary is not valid JSON: ") + e.what());
    }
    const auto need = [&](const char* key, bool numeric) {
        if (!j.contains(key)) throw SolveError(std::string("summary missing key ") + key);
        if (numeric && !j.at(key).is_number())
            throw SolveError(std::string("summary key not numeric: ") + key);
    };
    need("mode", false);
    need("zones", true);
    need("horizon", true);
    need("seed", true);
    need("wall_seconds", true);
    if (!j.contains("solver") || !j.at("solver").is_object())
        throw SolveError("summary missing solver object");
}

RunArtifacts run_single_shot(const ExperimentSpec& spec) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = spec_scenario(spec);

    const AdalRun run = adal_solve(sc.model, sc.exo, spec.solver);
    const Schedule recovered = recover_schedule(run.solution, sc.model, sc.exo,
                                                spec.repair_cap);
    const ViolationReport audit = validate_schedule(recovered, sc.model, sc.exo);

    ordered_json summary;
    summary["mode"] = "single-shot";
    summary["label"] = spec.label;
    summary["zones"] = sc.model.zone_count();
    summary["horizon"] = sc.model.horizon();
    summary["seed"] = sc.seed;
    summary["solver"] = {{"rho", spec.solver.rho},
                         {"epsilon", spec.solver.epsilon},
                         {"tau", spec.solver.tau},
                         {"max_iters", spec.solver.max_iters},
                         {"threads", spec.solver.threads}};
    summary["adal"] = {{"iterations", run.solution.iterations},
                       {"converged", run.solution.converged},
                       {"residual", run.solution.residual},
                       {"relaxed_objective", run.solution.objective},
                       {"subproblem_failures", run.solution.subproblem_failures},
                       {"subproblem_seconds", run.solution.subproblem_seconds}};
    summary["recovered"] = {{"cost_total", recovered.cost.total},
                            {"cost_cooling", recovered.cost.cooling_cost},
                            {"cost_fan", recovered.cost.fan_cost},
                            {"violations", violations_json(audit)}};
    summary["checks"] = ordered_json::object();
    summary["checks"]["relaxed_objective_below_recovered_cost"] =
        run.solution.objective <= recovered.cost.total + 1e-9;

    if (spec.run_centralized_relaxed) {
        const CentralizedRelaxed cr = solve_centralized_relaxed(sc.model, sc.exo);
        summary["centralized_relaxed"] = {
            {"objective", cr.reference.objective},
            {"outer_iterations", cr.reference.iterations},
            {"residual", cr.reference.solver_residual},
            {"recovered_cost", cr.reference.schedule.cost.total}};
        summary["checks"]["adal_matches_centralized_relaxed_1pct"] =
            std::abs(run.solution.objective - cr.reference.objective) <=
            0.01 * std::max(1.0, std::abs(cr.reference.objective));
    }
    if (spec.run_centralized_nonlinear) {
        const ReferenceSolution nl = solve_centralized_nonlinear(
            sc.model, sc.exo, 1e-7, 6, sc.seed + 17, &recovered.flows);
        summary["centralized_nonlinear"] = {{"cost", nl.objective},
                                            {"restart", nl.iterations}};
        const double base = std::max(std::abs(nl.objective), 1e-12);
        summary["gaps"] = {
            {"recovered_vs_nonlinear", (recovered.cost.total - nl.objective) / base}};
        if (summary.contains("centralized_relaxed")) {
            summary["gaps"]["relaxed_vs_nonlinear"] =
                (nl.objective -
                 summary["centralized_relaxed"]["objective"].get<double>()) /
                base;
        }
    }
    if (spec.run_oracle) {
        const auto oracle = brute_force_oracle(sc.model, sc.exo, spec.oracle_resolution);
        if (oracle) {
            summary["oracle"] = {{"cost", oracle->objective},
                                 {"resolution", spec.oracle_resolution}};
        } else {
            summary["oracle"] = {{"infeasible_at_resolution", true},
                                 {"resolution", spec.oracle_resolution}};
        }
    }
    summary["wall_seconds"] = seconds_since(t0);

    std::filesystem::create_directories(spec.out_dir);
    RunArtifacts art;
    art.schedule_csv = spec.out_dir / (spec.label + "_schedule.csv");
    art.convergence_csv = spec.out_dir / (spec.label + "_convergence.csv");
    write_schedule_csv(art.schedule_csv, sc.model, sc.exo, recovered);
    write_convergence_csv(art.convergence_csv, run.solution.trace);
    save_scenario(sc, spec.out_dir / (spec.label + "_scenario.json"));

    const RunArtifacts fin = finish(spec, summary, spec.label);
    art.summary_path = fin.summary_path;
    art.summary_json = fin.summary_json;
    return art;
}

RunArtifacts run_receding_horizon(const ExperimentSpec& spec, int planning_horizon) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = spec_scenario(spec);
    const int I = sc.model.zone_count();
    const int T = sc.model.horizon();
    if (planning_horizon < 1 || planning_horizon > T)
        throw ModelError("planning horizon must lie in [1, horizon]");
    const DiscreteDynamics full_dyn = build_discrete_dynamics(sc.model, sc.exo);

    Eigen::MatrixXd realized_temps(I, T);
    Eigen::MatrixXd realized_flows(I, T);
    for (int i = 0; i < I; ++i) realized_temps(i, 0) = sc.model.zone(i).t_init;

    Eigen::MatrixXd plan;  // zones x remaining-plan stages from the last success
    int fallbacks = 0;
    int solver_iters = 0;

    for (int s = 0; s < T; ++s) {
        const int H = std::min(planning_horizon, T - s);
        std::vector<ZoneParams> zones = sc.model.zones();
        for (int i = 0; i < I; ++i)
            zones[static_cast<size_t>(i)].t_init = realized_temps(i, s);
        BuildingModel step_model =
            BuildingModel::create(std::move(zones), sc.model.coupling(), sc.model.ahu(),
                                  sc.model.dt_seconds(), H);
        ExogenousSeries step_exo;
        step_exo.t_out = sc.exo.t_out.segment(s, H);
        step_exo.price = sc.exo.price.segment(s, H);
        step_exo.t_supply = sc.exo.t_supply.segment(s, H);
        step_exo.q_load = sc.exo.q_load.middleCols(s, H);

        bool solved = false;
        try {
            const AdalRun run = adal_solve(step_model, step_exo, spec.solver);
            const Schedule rec =
                recover_schedule(run.solution, step_model, step_exo, spec.repair_cap);
            plan = rec.flows;
            solver_iters += run.solution.iterations;
            solved = true;
        } catch (const std::exception&) {
            // Fall back to the previous plan shifted by one stage.
            ++fallbacks;
            if (plan.cols() > 1) {
                Eigen::MatrixXd shifted = plan.rightCols(plan.cols() - 1);
                plan = shifted;
            }
        }
        if (!solved && plan.size() == 0)
            throw SolveError("receding horizon: no plan available at stage " +
                             std::to_string(s));

        Eigen::VectorXd x_stage(I);
        for (int i = 0; i < I; ++i) {
            realized_flows(i, s) = plan(i, 0);
            x_stage[i] =
                realized_flows(i, s) * (realized_temps(i, s) - sc.exo.t_supply[s]);
        }
        if (s + 1 < T)
            realized_temps.col(s + 1) =
                simulate_step(full_dyn, realized_temps.col(s), x_stage, s);
    }

    Schedule realized;
    realized.flows = realized_flows;
    realized.temps = realized_temps;
    realized.x_cool.resize(I, T);
    for (int i = 0; i < I; ++i)
        for (int t = 0; t < T; ++t)
            realized.x_cool(i, t) =
                realized_flows(i, t) * (realized_temps(i, t) - sc.exo.t_supply[t]);
    realized.cost = schedule_cost(sc.model, sc.exo, realized.flows, realized.temps);
    realized.violations = validate_schedule(realized, sc.model, sc.exo);

    ordered_json summary;
    summary["mode"] = "receding-horizon";
    summary["label"] = spec.label;
    summary["zones"] = I;
    summary["horizon"] = T;
    summary["planning_horizon"] = planning_horizon;
    summary["seed"] = sc.seed;
    summary["solver"] = {{"rho", spec.solver.rho},
                         {"epsilon", spec.solver.epsilon},
                         {"tau", spec.solver.tau},
                         {"max_iters", spec.solver.max_iters}};
    summary["realized"] = {{"cost_total", realized.cost.total},
                           {"violations", violations_json(realized.violations)}};
    summary["fallback_steps"] = fallbacks;
    summary["total_solver_iterations"] = solver_iters;
    summary["wall_seconds"] = seconds_since(t0);

    std::filesystem::create_directories(spec.out_dir);
    RunArtifacts art;
    art.schedule_csv = spec.out_dir / (spec.label + "_realized_schedule.csv");
    write_schedule_csv(art.schedule_csv, sc.model, sc.exo, realized);

    const RunArtifacts fin = finish(spec, summary, spec.label);
    art.summary_path = fin.summary_path;
    art.summary_json = fin.summary_json;
    return art;
}

RunArtifacts run_rho_sweep(const ExperimentSpec& spec, const std::vector<double>& rhos) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = spec_scenario(spec);
    std::filesystem::create_directories(spec.out_dir);

    ordered_json summary;
    summary["mode"] = "rho-sweep";
    summary["label"] = spec.label;
    summary["zones"] = sc.model.zone_count();
    summary["horizon"] = sc.model.horizon();
    summary["seed"] = sc.seed;
    summary["solver"] = {{"epsilon", spec.solver.epsilon},
                         {"tau", spec.solver.tau},
                         {"max_iters", spec.solver.max_iters}};
    summary["cells"] = ordered_json::array();

    for (double rho : rhos) {
        SolverConfig cfg = spec.solver;
        cfg.rho = rho;
        const AdalRun run = adal_solve(sc.model, sc.exo, cfg);
        char tag[32];
        std::snprintf(tag, sizeof(tag), "%g", rho);
        write_convergence_csv(
            spec.out_dir / (spec.label + "_convergence_rho_" + tag + ".csv"),
            run.solution.trace);
        summary["cells"].push_back({{"rho", rho},
                                    {"iterations", run.solution.iterations},
                                    {"converged", run.solution.converged},
                                    {"residual", run.solution.residual},
                                    {"objective", run.solution.objective}});
    }
    summary["wall_seconds"] = seconds_since(t0);
    return finish(spec, summary, spec.label);
}

RunArtifacts run_zone_sweep(const ExperimentSpec& spec, const std::vector<int>& counts) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(spec.out_dir);

    ordered_json summary;
    summary["mode"] = "zone-sweep";
    summary["label"] = spec.label;
    summary["zones"] = 0;
    summary["horizon"] = spec.generator.horizon;
    summary["seed"] = spec.seed;
    summary["solver"] = {{"rho", spec.solver.rho},
                         {"epsilon", spec.solver.epsilon},
                         {"tau", spec.solver.tau},
                         {"max_iters", spec.solver.max_iters}};
    summary["cells"] = ordered_json::array();

    for (int n : counts) {
        const Scenario sc = generate_scenario(n, spec.seed, spec.generator);
        const AdalRun run = adal_solve(sc.model, sc.exo, spec.solver);
        const int iters = std::max(run.solution.iterations, 1);
        const double per_zone =
            run.solution.subproblem_seconds / (static_cast<double>(n) * iters);
        summary["cells"].push_back(
            {{"zones", n},
             {"iterations", run.solution.iterations},
             {"converged", run.solution.converged},
             {"residual", run.solution.residual},
             {"objective", run.solution.objective},
             {"avg_zone_solve_seconds", per_zone},
             {"avg_zone_stage_seconds", per_zone / sc.model.horizon()}});
    }
    summary["wall_seconds"] = seconds_since(t0);
    return finish(spec, summary, spec.label);
}

}  // namespace hvacopt
