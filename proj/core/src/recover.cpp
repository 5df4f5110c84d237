#include "hvacopt/recover.hpp"

#include <algorithm>
#include <cmath>

namespace hvacopt {

namespace {

ViolationReport audit(const Eigen::MatrixXd& temps, const Eigen::MatrixXd& flows,
                      const BuildingModel& model) {
    ViolationReport rep;
    const int I = model.zone_count();
    const int T = model.horizon();
    for (int t = 1; t < T; ++t) {
        for (int i = 0; i < I; ++i) {
            const ZoneParams& z = model.zone(i);
            double excess = 0.0;
            if (temps(i, t) > z.t_max) excess = temps(i, t) - z.t_max;
            else if (temps(i, t) < z.t_min) excess = z.t_min - temps(i, t);
            if (excess > 0.0) {
                rep.comfort.push_back({i, t, excess});
                rep.max_comfort_excess = std::max(rep.max_comfort_excess, excess);
            }
        }
    }
    for (int t = 0; t < T; ++t) {
        const double total = flows.col(t).sum();
        if (total > model.ahu().total_flow_max)
            rep.ahu_cap.push_back({t, total - model.ahu().total_flow_max});
    }
    return rep;
}

}  // namespace

Schedule recover_schedule(const RelaxedSolution& relaxed, const BuildingModel& model,
                          const ExogenousSeries& exo, bool scale_to_cap) {
    const int I = model.zone_count();
    const int T = model.horizon();
    if (static_cast<int>(relaxed.agents.size()) != I ||
        (I > 0 && relaxed.agents[0].horizon() != T))
        throw ModelError("recover_schedule: relaxed solution does not match model");
    const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);

    Schedule sched;
    sched.temps.resize(I, T);
    sched.flows.resize(I, T);
    sched.x_cool.resize(I, T);
    for (int i = 0; i < I; ++i) sched.temps(i, 0) = model.zone(i).t_init;

    Eigen::VectorXd x_stage(I);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < I; ++i) {
            const ZoneParams& z = model.zone(i);
            const double head = sched.temps(i, t) - exo.t_supply[t];
            double flow;
            if (head < kRecoverTempGuard) {
                flow = z.m_min;
            } else {
                const double chased =
                    std::min(z.m_max, relaxed.agents[static_cast<size_t>(i)].cooling(t) / head);
                flow = std::max(chased, z.m_min);
            }
            sched.flows(i, t) = flow;
        }
        if (scale_to_cap) {
            const double total = sched.flows.col(t).sum();
            const double cap = model.ahu().total_flow_max;
            if (total > cap) sched.flows.col(t) *= cap / total;
        }
        for (int i = 0; i < I; ++i) {
            // Same expression as the simulator so the rollout check is bitwise.
            x_stage[i] = sched.flows(i, t) * (sched.temps(i, t) - exo.t_supply[t]);
            sched.x_cool(i, t) = x_stage[i];
        }
        if (t + 1 < T)
            sched.temps.col(t + 1) = simulate_step(dyn, sched.temps.col(t), x_stage, t);
    }

    sched.cost = schedule_cost(model, exo, sched.flows, sched.temps);
    sched.violations = audit(sched.temps, sched.flows, model);
    return sched;
}

ViolationReport validate_schedule(const Schedule& schedule, const BuildingModel& model,
                                  const ExogenousSeries& exo) {
    const Eigen::MatrixXd resim = simulate_schedule(model, exo, schedule.flows);
    if (resim.rows() != schedule.temps.rows() || resim.cols() != schedule.temps.cols())
        throw SolveError("validate_schedule: trajectory shape mismatch");
    for (int i = 0; i < resim.rows(); ++i) {
        for (int t = 0; t < resim.cols(); ++t) {
            if (resim(i, t) != schedule.temps(i, t))
                throw SolveError("validate_schedule: stored temperatures diverge from "
                                 "the exact rollout (internal inconsistency)");
        }
    }
    return audit(schedule.temps, schedule.flows, model);
}

}  // namespace hvacopt
