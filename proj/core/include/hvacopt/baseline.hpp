#ifndef HVACOPT_BASELINE_HPP
#define HVACOPT_BASELINE_HPP

#include <optional>
#include <string>

#include "hvacopt/recover.hpp"

namespace hvacopt {

/// Output of a reference solver. The schedule of the P1 solvers (nonlinear,
/// brute force) satisfies every P1 constraint; the relaxed solver's schedule
/// is the feasibility recovery of its P2 optimum, kept for inspection, while
/// its objective is the relaxation lower bound itself.
struct ReferenceSolution {
    Schedule schedule;
    double objective = 0.0;
    std::string method;
    int iterations = 0;
    double solver_residual = 0.0;
};

struct CentralizedRelaxed {
    RelaxedSolution relaxed;
    ReferenceSolution reference;
};

/// Solves the relaxed problem in one process: method of multipliers over the
/// coupled equalities with accelerated projected-gradient inner solves over
/// the product of local polytopes and nonnegative rays. tol bounds both the
/// final coupled residual and the inner projected gradient.
CentralizedRelaxed solve_centralized_relaxed(const BuildingModel& model,
                                             const ExogenousSeries& exo,
                                             double tol = 1e-6, int max_outer = 80);

/// Local solve of the original bilinear problem: decision variables are the
/// flows, temperatures follow the exact rollout, comfort enters through an
/// increasing quadratic penalty, bounds and the AHU cap through projection.
/// Multi-start projected gradient; returns the best run whose schedule passes
/// the exact feasibility audit. warm_flows, when given, seeds one additional
/// polish run (e.g. from a recovered heuristic schedule). Throws SolveError
/// when every restart fails.
ReferenceSolution solve_centralized_nonlinear(const BuildingModel& model,
                                              const ExogenousSeries& exo,
                                              double tol = 1e-7, int restarts = 6,
                                              std::uint64_t seed = 1,
                                              const Eigen::MatrixXd* warm_flows = nullptr);

/// Exhaustive flow-grid search for desk-scale instances. Returns nullopt when
/// no grid point satisfies comfort and cap at this resolution. Deterministic:
/// ties break toward the lexicographically smallest flow vector.
std::optional<ReferenceSolution> brute_force_oracle(const BuildingModel& model,
                                                    const ExogenousSeries& exo,
                                                    double grid_resolution = 0.025);

}  // namespace hvacopt

#endif
