#ifndef HVACOPT_MODEL_HPP
#define HVACOPT_MODEL_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "hvacopt/errors.hpp"

namespace hvacopt {

/// Thermal and actuation parameters of a single zone.
/// Units: capacitance kJ/K, resistances K/kW, temperatures degC, flows kg/s.
struct ZoneParams {
    double capacitance = 0.0;  ///< heat capacity of the zone air [kJ/K]
    double r_out = 0.0;        ///< zone-to-outside thermal resistance [K/kW]
    double t_min = 0.0;        ///< comfort band lower bound [degC]
    double t_max = 0.0;        ///< comfort band upper bound [degC]
    double m_min = 0.0;        ///< minimum supply air flow [kg/s]
    double m_max = 0.0;        ///< maximum supply air flow [kg/s]
    double t_init = 0.0;       ///< initial zone temperature [degC]
};

/// Shared air-handling-unit parameters.
struct AhuParams {
    double return_air_fraction = 0.8;  ///< fraction of return air in the mix, in [0,1]
    double cop_reciprocal = 1.0;       ///< reciprocal chiller COP
    double fan_coefficient = 0.08;     ///< fan power coefficient [kW/(kg/s)^3]
    double total_flow_max = 0.0;       ///< cap on total supplied flow [kg/s]
    double air_specific_heat = 1.012;  ///< specific heat of air [kJ/(kg K)]
};

/// Undirected thermal coupling between two zones.
struct CouplingEdge {
    int i = 0;
    int j = 0;
    double resistance = 0.0;  ///< zone-to-zone thermal resistance [K/kW]
};

struct Neighbor {
    int zone;
    double resistance;
};

/// The physical plant: zones, symmetric coupling graph, shared AHU, and the
/// discrete-time grid. Immutable after construction via create().
class BuildingModel {
public:
    /// Validates all invariants (including discretization stability of every
    /// zone) and builds the adjacency structure. Throws ModelError.
    static BuildingModel create(std::vector<ZoneParams> zones,
                                std::vector<CouplingEdge> coupling,
                                AhuParams ahu, double dt_seconds, int horizon);

    int zone_count() const { return static_cast<int>(zones_.size()); }
    int horizon() const { return horizon_; }
    double dt_seconds() const { return dt_seconds_; }
    double dt_hours() const { return dt_seconds_ / 3600.0; }

    const std::vector<ZoneParams>& zones() const { return zones_; }
    const ZoneParams& zone(int i) const { return zones_[static_cast<size_t>(i)]; }
    const AhuParams& ahu() const { return ahu_; }
    const std::vector<CouplingEdge>& coupling() const { return coupling_; }

    /// Neighbors of zone i, ordered by zone index.
    const std::vector<Neighbor>& neighbors(int i) const {
        return adjacency_[static_cast<size_t>(i)];
    }
    int max_degree() const { return max_degree_; }

private:
    BuildingModel() = default;

    std::vector<ZoneParams> zones_;
    std::vector<CouplingEdge> coupling_;
    std::vector<std::vector<Neighbor>> adjacency_;
    AhuParams ahu_;
    double dt_seconds_ = 0.0;
    int horizon_ = 0;
    int max_degree_ = 0;
};

/// Exogenous inputs over the horizon: outdoor temperature, per-zone internal
/// loads, electricity price, and the AHU supply-air setpoint.
struct ExogenousSeries {
    Eigen::VectorXd t_out;     ///< outdoor temperature per stage [degC]
    Eigen::MatrixXd q_load;    ///< internal heat gains, zones x stages [kW]
    Eigen::VectorXd price;     ///< electricity price per stage [currency/kWh]
    Eigen::VectorXd t_supply;  ///< AHU supply-air setpoint per stage [degC]
};

/// Checks series lengths against the model and the cooling-mode requirement
/// that the supply setpoint sits below every zone's comfort band.
void validate_series(const BuildingModel& model, const ExogenousSeries& exo);

/// Coefficients of the discrete zone dynamics
///   T[i,t+1] = a_self[i] T[i,t] + sum_j a_neighbor[i][j] T[j,t]
///              + c_self[i] X[i,t] + d_const(i,t)
/// with X the cooling variable flow*(temp - setpoint).
struct DiscreteDynamics {
    Eigen::VectorXd a_self;
    std::vector<std::vector<std::pair<int, double>>> a_neighbor;  ///< per zone: (j, coeff)
    Eigen::VectorXd c_self;  ///< strictly negative
    Eigen::MatrixXd d_const; ///< zones x stages
};

/// Discretizes the RC network. Throws ModelError when any zone's self
/// coefficient falls outside (0,1).
DiscreteDynamics build_discrete_dynamics(const BuildingModel& model,
                                         const ExogenousSeries& exo);

/// One exact step of the discrete dynamics: returns next-stage temperatures.
Eigen::VectorXd simulate_step(const DiscreteDynamics& dyn,
                              const Eigen::VectorXd& temps,
                              const Eigen::VectorXd& x_cool, int t);

/// Full rollout of the true bilinear plant from the initial temperatures.
/// flows is zones x stages; the returned matrix is zones x stages with
/// column 0 equal to the initial temperatures.
Eigen::MatrixXd simulate_schedule(const BuildingModel& model,
                                  const ExogenousSeries& exo,
                                  const Eigen::MatrixXd& flows);

/// Rollout with precomputed dynamics (hot path for oracles and MPC).
Eigen::MatrixXd simulate_schedule(const DiscreteDynamics& dyn,
                                  const BuildingModel& model,
                                  const ExogenousSeries& exo,
                                  const Eigen::MatrixXd& flows);

}  // namespace hvacopt

#endif
