#include "hvacopt/power.hpp"

#include "hvacopt/errors.hpp"

namespace hvacopt {

double return_air_temp(const Eigen::VectorXd& flows, const Eigen::VectorXd& temps) {
    const double total = flows.sum();
    if (!(total > 0.0))
        throw SolveError("return air temperature undefined at zero total flow");
    return flows.dot(temps) / total;
}

double mixed_air_temp(double t_out, double t_return, double return_air_fraction) {
    return (1.0 - return_air_fraction) * t_out + return_air_fraction * t_return;
}

double cooling_power(const Eigen::VectorXd& flows, const Eigen::VectorXd& temps,
                     double t_out, double t_supply, const AhuParams& ahu) {
    const double scale = ahu.air_specific_heat * ahu.cop_reciprocal;
    const double fresh = (1.0 - ahu.return_air_fraction) * flows.sum() * (t_out - t_supply);
    double recirc = 0.0;
    for (Eigen::Index i = 0; i < flows.size(); ++i)
        recirc += flows[i] * (temps[i] - t_supply);
    recirc *= ahu.return_air_fraction;
    return scale * (fresh + recirc);
}

double cooling_power_via_mixed_air(const Eigen::VectorXd& flows,
                                   const Eigen::VectorXd& temps, double t_out,
                                   double t_supply, const AhuParams& ahu) {
    const double total = flows.sum();
    const double t_mix =
        mixed_air_temp(t_out, return_air_temp(flows, temps), ahu.return_air_fraction);
    return ahu.air_specific_heat * ahu.cop_reciprocal * total * (t_mix - t_supply);
}

double fan_power(const Eigen::VectorXd& flows, double fan_coefficient) {
    const double total = flows.sum();
    return fan_coefficient * total * total * total;
}

CostBreakdown schedule_cost(const BuildingModel& model, const ExogenousSeries& exo,
                            const Eigen::MatrixXd& flows, const Eigen::MatrixXd& temps) {
    const int T = model.horizon();
    if (flows.cols() != T || temps.cols() != T || flows.rows() != model.zone_count() ||
        temps.rows() != model.zone_count())
        throw ModelError("schedule_cost: trajectories must be zones x horizon");

    const double dt_h = model.dt_hours();
    CostBreakdown out;
    out.per_stage.reserve(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        const double p_cool = cooling_power(flows.col(t), temps.col(t), exo.t_out[t],
                                            exo.t_supply[t], model.ahu());
        const double p_fan = fan_power(flows.col(t), model.ahu().fan_coefficient);
        out.cooling_cost += exo.price[t] * p_cool * dt_h;
        out.fan_cost += exo.price[t] * p_fan * dt_h;
        out.per_stage.push_back({t, p_cool, p_fan, exo.price[t]});
    }
    out.total = out.cooling_cost + out.fan_cost;
    return out;
}

}  // namespace hvacopt
