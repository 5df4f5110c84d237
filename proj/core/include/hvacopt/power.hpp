#ifndef HVACOPT_POWER_HPP
#define HVACOPT_POWER_HPP

#include <Eigen/Dense>
#include <vector>

#include "hvacopt/model.hpp"

namespace hvacopt {

/// Flow-weighted mean of zone temperatures. Throws SolveError at zero total
/// flow, where the mean is undefined; power evaluations use the expanded
/// form instead, which is well defined there.
double return_air_temp(const Eigen::VectorXd& flows, const Eigen::VectorXd& temps);

/// Mix of outdoor and return air: (1 - d_r) t_out + d_r t_return.
double mixed_air_temp(double t_out, double t_return, double return_air_fraction);

/// Cooling-coil electrical power [kW], expanded per-zone form:
///   c_p eta (1-d_r) sum_i m_i (t_out - t_supply) + c_p eta d_r sum_i m_i (T_i - t_supply).
/// Total at zero flow is zero.
double cooling_power(const Eigen::VectorXd& flows, const Eigen::VectorXd& temps,
                     double t_out, double t_supply, const AhuParams& ahu);

/// Cooling-coil power via the mixed-air route c_p eta (sum m)(T_mix - t_supply).
/// Algebraically equal to cooling_power whenever total flow is positive.
double cooling_power_via_mixed_air(const Eigen::VectorXd& flows,
                                   const Eigen::VectorXd& temps, double t_out,
                                   double t_supply, const AhuParams& ahu);

/// Supply-fan power [kW]: kappa_f (sum of flows)^3.
double fan_power(const Eigen::VectorXd& flows, double fan_coefficient);

struct StagePower {
    int stage;
    double cooling_kw;
    double fan_kw;
    double price;
};

/// Energy cost of a trajectory, split into cooling and fan components.
/// Prices are per kWh, so stage energies use the stage length in hours.
struct CostBreakdown {
    double cooling_cost = 0.0;
    double fan_cost = 0.0;
    double total = 0.0;
    std::vector<StagePower> per_stage;
};

/// Cost of a full (flows, temps) trajectory pair, both zones x stages.
CostBreakdown schedule_cost(const BuildingModel& model, const ExogenousSeries& exo,
                            const Eigen::MatrixXd& flows, const Eigen::MatrixXd& temps);

}  // namespace hvacopt

#endif
