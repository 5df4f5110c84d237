#ifndef HVACOPT_TEST_SUPPORT_HPP
#define HVACOPT_TEST_SUPPORT_HPP

#include <random>

#include "hvacopt/adal.hpp"
#include "hvacopt/model.hpp"
#include "hvacopt/scenario.hpp"

namespace hvacopt::testing {

inline double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// The single-zone parameter set used across the unit tests: paper-scale
/// capacitance and resistances, 30-minute stages.
inline ZoneParams default_zone() {
    ZoneParams z;
    z.capacitance = 1375.0;
    z.r_out = 50.0;
    z.t_min = 24.0;
    z.t_max = 26.0;
    z.m_min = 0.0;
    z.m_max = 0.5;
    z.t_init = 26.0;
    return z;
}

inline AhuParams default_ahu(int zones) {
    AhuParams a;
    a.return_air_fraction = 0.8;
    a.cop_reciprocal = 1.0;
    a.fan_coefficient = 0.08;
    a.air_specific_heat = 1.012;
    a.total_flow_max = 0.7 * 0.5 * zones;
    return a;
}

/// n coupled zones in a chain with uniform parameters.
inline BuildingModel chain_model(int zones, int horizon, double dt = 1800.0) {
    std::vector<ZoneParams> zs(static_cast<size_t>(zones), default_zone());
    std::vector<CouplingEdge> edges;
    for (int i = 0; i + 1 < zones; ++i) edges.push_back({i, i + 1, 14.0});
    return BuildingModel::create(std::move(zs), std::move(edges), default_ahu(zones),
                                 dt, horizon);
}

/// Flat exogenous data: constant outdoor temperature, price, setpoint, loads.
inline ExogenousSeries flat_exo(const BuildingModel& model, double t_out = 30.0,
                                double price = 0.2, double load = 0.5,
                                double t_supply = 15.0) {
    ExogenousSeries exo;
    const int T = model.horizon();
    exo.t_out = Eigen::VectorXd::Constant(T, t_out);
    exo.price = Eigen::VectorXd::Constant(T, price);
    exo.t_supply = Eigen::VectorXd::Constant(T, t_supply);
    exo.q_load = Eigen::MatrixXd::Constant(model.zone_count(), T, load);
    return exo;
}

/// A feasible iterate built from a true-dynamics rollout of the given flows:
/// cooling equals the exact product, the coordinator tracks the flow sum,
/// slacks close both coupled equalities.
inline IterateState feasible_state(const BuildingModel& model, const ExogenousSeries& exo,
                                   const Eigen::MatrixXd& flows,
                                   const StackedSystem& sys) {
    const Eigen::MatrixXd temps = simulate_schedule(model, exo, flows);
    const int I = model.zone_count();
    const int T = model.horizon();
    IterateState st;
    for (int i = 0; i < I; ++i) {
        AgentTrajectory x(T);
        for (int t = 0; t < T; ++t) {
            x.temp(t) = temps(i, t);
            x.flow(t) = flows(i, t);
            x.cooling(t) = flows(i, t) * (temps(i, t) - exo.t_supply[t]);
        }
        st.agents.push_back(std::move(x));
    }
    st.coordinator.y_total = sys.flow_sum(st.agents);
    st.s1 = Eigen::VectorXd::Zero(T);
    st.s2 = (sys.cap_vector() - st.coordinator.y_total).cwiseMax(0.0);
    st.multipliers.lambda.assign(static_cast<size_t>(I),
                                 Eigen::VectorXd::Zero(std::max(T - 1, 0)));
    st.multipliers.gamma = Eigen::VectorXd::Zero(T);
    st.multipliers.eta = Eigen::VectorXd::Zero(T);
    return st;
}

}  // namespace hvacopt::testing

#endif
