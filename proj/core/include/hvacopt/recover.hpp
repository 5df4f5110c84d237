#ifndef HVACOPT_RECOVER_HPP
#define HVACOPT_RECOVER_HPP

#include <Eigen/Dense>
#include <vector>

#include "hvacopt/adal.hpp"
#include "hvacopt/power.hpp"

namespace hvacopt {

struct ComfortViolation {
    int zone;
    int stage;
    double excess;  ///< degrees above t_max or below t_min
};

struct CapViolation {
    int stage;
    double excess;  ///< kg/s over the AHU cap
};

/// Constraint audit of a schedule. Empty lists mean the schedule satisfies
/// the comfort band (stages 1..T-1; stage 0 is the given initial condition)
/// and the AHU cap everywhere.
struct ViolationReport {
    std::vector<ComfortViolation> comfort;
    std::vector<CapViolation> ahu_cap;
    double max_comfort_excess = 0.0;

    bool feasible() const { return comfort.empty() && ahu_cap.empty(); }
};

/// A dynamics-consistent control schedule: cooling equals flow*(temp-setpoint)
/// at every stage and temps follow the exact rollout.
struct Schedule {
    Eigen::MatrixXd temps;   ///< zones x stages [degC]
    Eigen::MatrixXd flows;   ///< zones x stages [kg/s]
    Eigen::MatrixXd x_cool;  ///< zones x stages [kg K/s]
    CostBreakdown cost;
    ViolationReport violations;
};

/// Temperature margin below which the flow ratio is not evaluated and the
/// zone falls back to its minimum flow.
constexpr double kRecoverTempGuard = 0.5;

/// Stage-by-stage heuristic that turns a relaxed solution into a
/// dynamics-feasible schedule: flows chase the relaxed cooling targets within
/// bounds, then temperatures advance through the exact plant step.
/// scale_to_cap additionally rescales each stage's flows onto the AHU cap
/// when the recovered sum exceeds it (off by default).
Schedule recover_schedule(const RelaxedSolution& relaxed, const BuildingModel& model,
                          const ExogenousSeries& exo, bool scale_to_cap = false);

/// Re-simulates the schedule (bitwise check against its temps) and reports
/// comfort-band and AHU-cap violations. Throws SolveError when the stored
/// trajectory does not match the rollout, which indicates a bug rather than
/// bad input.
ViolationReport validate_schedule(const Schedule& schedule, const BuildingModel& model,
                                  const ExogenousSeries& exo);

}  // namespace hvacopt

#endif
