#ifndef HVACOPT_ADAL_HPP
#define HVACOPT_ADAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hvacopt/model.hpp"
#include "hvacopt/relax.hpp"
#include "hvacopt/stage_qp.hpp"

namespace hvacopt {

/// Lagrange multipliers of the three coupled constraint families.
struct Multipliers {
    std::vector<Eigen::VectorXd> lambda;  ///< per zone, dynamics rows (T-1 each)
    Eigen::VectorXd gamma;                ///< flow-coupling rows (T)
    Eigen::VectorXd eta;                  ///< AHU-cap rows (T)
};

struct SolverConfig {
    double rho = 15.0;        ///< penalty parameter
    double epsilon = 1e-2;    ///< stop when the coupled residual drops below this
    int max_iters = 500;
    double tau = 0.0;         ///< primal relaxation step in (0,1]; <=0 selects 1/(1+max degree)
    double subproblem_tol = 1e-6;       ///< projected-gradient tolerance
    int subproblem_max_iters = 2000;
    std::uint64_t seed = 0;
    int threads = 0;                    ///< 0: HVACOPT_THREADS env or hardware
    bool reverse_dispatch = false;      ///< flip agent execution order (determinism checks)
};

/// Full solver state after an iteration.
struct IterateState {
    std::vector<AgentTrajectory> agents;
    CoordinatorTrajectory coordinator;
    Eigen::VectorXd s1, s2;  ///< slacks of the flow-coupling and cap rows, >= 0
    Multipliers multipliers;
    int iteration = 0;
    std::vector<double> residual_history;
};

/// Residuals of the coupled rows, split by family.
struct ResidualParts {
    std::vector<Eigen::VectorXd> dyn;
    Eigen::VectorXd flow;
    Eigen::VectorXd cap;

    double dyn_norm_sum() const;
    /// Sum of family 2-norms (the stopping quantity).
    double total() const;
};

ResidualParts compute_residual_parts(const IterateState& state, const StackedSystem& sys);

/// Coupled-constraint residual: sum over zones of the dynamics-row 2-norm
/// plus the 2-norms of the flow-coupling and cap rows.
double residual(const IterateState& state, const StackedSystem& sys);

/// Value of the augmented Lagrangian at a state.
double augmented_lagrangian(const IterateState& state, const StackedSystem& sys,
                            const AgentObjective& obj, double rho);

/// Dual ascent step: each multiplier moves by rho times its row residual.
Multipliers update_multipliers(const IterateState& state, const StackedSystem& sys,
                               double rho);

/// Thrown when a zone subproblem fails to reach tolerance; carries the best
/// iterate found.
class SubproblemError : public SolveError {
public:
    SubproblemError(const std::string& what, AgentTrajectory best_iterate)
        : SolveError(what), best(std::move(best_iterate)) {}
    AgentTrajectory best;
};

/// Minimizes zone i's local augmented Lagrangian over its admissible polytope
/// with every other agent frozen at the snapshot. Throws SubproblemError on
/// non-convergence.
AgentTrajectory solve_subproblem_zone(int i, const IterateState& snapshot,
                                      const StackedSystem& sys, const AgentObjective& obj,
                                      const LocalFeasibleSet& feas,
                                      const SolverConfig& config);

struct CoordinatorUpdate {
    Eigen::VectorXd y;
    Eigen::VectorXd s1;
    Eigen::VectorXd s2;
};

/// Minimizes the coordinator's local augmented Lagrangian over y, s1, s2 >= 0.
/// Separable per stage; solved in closed form from the stationarity system.
CoordinatorUpdate solve_subproblem_coordinator(const IterateState& snapshot,
                                               const StackedSystem& sys,
                                               const AgentObjective& obj,
                                               const SolverConfig& config);

struct ConvergenceRecord {
    int iteration;
    double residual;
    double objective;
    double dyn_residual;
    double flow_residual;
    double cap_residual;
    double wall_seconds;
};

/// Relaxed-problem solution returned by the decentralized solver.
struct RelaxedSolution {
    std::vector<AgentTrajectory> agents;
    Eigen::VectorXd y_total;
    double objective = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    int subproblem_failures = 0;
    double subproblem_seconds = 0.0;  ///< summed zone-subproblem wall time
    std::vector<ConvergenceRecord> trace;
};

struct AdalRun {
    IterateState state;
    RelaxedSolution solution;
};

/// Feasible-leaning starting state: temperatures at the band midpoint (the
/// initial condition at stage 0), flows at their lower bound, cooling at the
/// envelope floor, y matching the flow sum, slacks closing the equalities.
IterateState initial_state(const BuildingModel& model, const ExogenousSeries& exo,
                           const StackedSystem& sys);

/// Decentralized solve of the relaxed problem: per-iteration Jacobi
/// subproblem solves against the previous iterate, relaxed primal update,
/// residual-based stopping, dual ascent.
AdalRun adal_solve(const BuildingModel& model, const ExogenousSeries& exo,
                   const SolverConfig& config, const IterateState* warm = nullptr);

}  // namespace hvacopt

#endif
