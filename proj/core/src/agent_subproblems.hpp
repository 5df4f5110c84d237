// Internal shared pieces of the per-agent subproblem algebra, used by the
// decentralized solver and the centralized relaxed reference.
#ifndef HVACOPT_AGENT_SUBPROBLEMS_HPP
#define HVACOPT_AGENT_SUBPROBLEMS_HPP

#include "hvacopt/adal.hpp"

namespace hvacopt::detail {

/// Unscaled Hessian structure of zone i's subproblem (scale by rho for use).
BlockTridiag zone_structure(int i, const StackedSystem& sys);

BlockTridiag scaled(BlockTridiag s, double rho);

/// Linear term of zone i's local augmented Lagrangian with every other agent
/// frozen at `state`, given that state's dynamics-row residuals and flow sum.
Eigen::VectorXd zone_linear_term(int i, const IterateState& state,
                                 const StackedSystem& sys, const AgentObjective& obj,
                                 double rho, const std::vector<Eigen::VectorXd>& dyn_resid,
                                 const Eigen::VectorXd& flow_sum);

/// Closed-form coordinator minimizer given the zones' flow sum.
CoordinatorUpdate coordinator_solve(const Multipliers& mult, const StackedSystem& sys,
                                    const AgentObjective& obj, double rho,
                                    const Eigen::VectorXd& flow_sum);

/// Largest value of the cooling variable's lower envelope at (temp, flow).
double envelope_floor(const StageConstraints& st, double temp, double flow);

}  // namespace hvacopt::detail

#endif
