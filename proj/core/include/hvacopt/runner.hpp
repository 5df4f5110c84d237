#ifndef HVACOPT_RUNNER_HPP
#define HVACOPT_RUNNER_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "hvacopt/adal.hpp"
#include "hvacopt/baseline.hpp"
#include "hvacopt/scenario.hpp"

namespace hvacopt {

/// One experiment cell: where the scenario comes from, solver settings, and
/// which reference methods run next to the decentralized pipeline.
struct ExperimentSpec {
    std::filesystem::path scenario_path;  ///< empty: generate from (n_zones, seed)
    int n_zones = 5;
    std::uint64_t seed = 1;
    GeneratorParams generator;
    SolverConfig solver;
    bool run_centralized_relaxed = false;
    bool run_centralized_nonlinear = false;
    bool run_oracle = false;
    double oracle_resolution = 0.025;
    bool repair_cap = false;  ///< proportional cap repair inside recovery
    std::filesystem::path out_dir = ".";
    std::string label = "run";
};

struct RunArtifacts {
    std::filesystem::path summary_path;
    std::filesystem::path schedule_csv;
    std::filesystem::path convergence_csv;
    std::string summary_json;  ///< the summary document text
};

Scenario spec_scenario(const ExperimentSpec& spec);

/// Full-horizon pipeline: decentralized solve, feasibility recovery,
/// validation, costing, optional references; writes schedule CSV,
/// convergence CSV and a summary JSON.
RunArtifacts run_single_shot(const ExperimentSpec& spec);

/// Receding-horizon run: at each stage solve an H-stage problem from the
/// realized state, apply the first recovered control to the true plant,
/// advance. A failed step falls back to the previous plan shifted by one.
RunArtifacts run_receding_horizon(const ExperimentSpec& spec, int planning_horizon);

/// One decentralized solve per penalty value on the same scenario; a
/// convergence CSV per value plus a summary of iterations-to-threshold.
RunArtifacts run_rho_sweep(const ExperimentSpec& spec, const std::vector<double>& rhos);

/// One decentralized solve per zone count (same seed); records per-zone
/// average subproblem time to expose the scalability trend.
RunArtifacts run_zone_sweep(const ExperimentSpec& spec, const std::vector<int>& counts);

/// Schedule CSV rows: stage, zone, temp, flow, cooling variable, price, and
/// the stage's cooling/fan power.
void write_schedule_csv(const std::filesystem::path& path, const BuildingModel& model,
                        const ExogenousSeries& exo, const Schedule& schedule);

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<ConvergenceRecord>& trace);

/// Minimal structural check of a summary document; throws SolveError on a
/// missing or mistyped field.
void validate_summary(const std::string& summary_json);

}  // namespace hvacopt

#endif
