#include "hvacopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hvacopt {

namespace {

void check_finite(double v, const std::string& name) {
    if (!std::isfinite(v)) throw ModelError(name + " is not finite");
}

void validate_zone(const ZoneParams& z, int idx) {
    const std::string tag = "zone " + std::to_string(idx) + ": ";
    check_finite(z.capacitance, tag + "capacitance");
    if (z.capacitance <= 0.0) throw ModelError(tag + "capacitance must be > 0");
    if (z.r_out <= 0.0) throw ModelError(tag + "r_out must be > 0");
    if (!(z.t_min < z.t_max)) throw ModelError(tag + "comfort band is empty");
    if (z.m_min < 0.0 || !(z.m_min < z.m_max))
        throw ModelError(tag + "flow bounds need 0 <= m_min < m_max");
    check_finite(z.t_init, tag + "t_init");
}

}  // namespace

BuildingModel BuildingModel::create(std::vector<ZoneParams> zones,
                                    std::vector<CouplingEdge> coupling,
                                    AhuParams ahu, double dt_seconds,
                                    int horizon) {
    BuildingModel m;
    const int n = static_cast<int>(zones.size());
    if (n < 1) throw ModelError("model needs at least one zone");
    for (int i = 0; i < n; ++i) validate_zone(zones[static_cast<size_t>(i)], i);

    if (ahu.return_air_fraction < 0.0 || ahu.return_air_fraction > 1.0)
        throw ModelError("return_air_fraction must lie in [0,1]");
    if (ahu.cop_reciprocal <= 0.0) throw ModelError("cop_reciprocal must be > 0");
    if (ahu.fan_coefficient < 0.0) throw ModelError("fan_coefficient must be >= 0");
    if (ahu.total_flow_max <= 0.0) throw ModelError("total_flow_max must be > 0");
    if (ahu.air_specific_heat <= 0.0) throw ModelError("air_specific_heat must be > 0");
    if (dt_seconds <= 0.0) throw ModelError("dt_seconds must be > 0");
    if (horizon < 1) throw ModelError("horizon must be >= 1");

    // Normalize edges to i < j, reject self-edges and duplicates, require symmetry
    // to be expressed as a single undirected edge with one resistance.
    std::vector<std::vector<Neighbor>> adj(static_cast<size_t>(n));
    for (auto& e : coupling) {
        if (e.i == e.j) throw ModelError("coupling self-edge on zone " + std::to_string(e.i));
        if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
            throw ModelError("coupling edge references unknown zone");
        if (e.resistance <= 0.0) throw ModelError("coupling resistance must be > 0");
        if (e.i > e.j) std::swap(e.i, e.j);
    }
    std::sort(coupling.begin(), coupling.end(), [](const CouplingEdge& a, const CouplingEdge& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    for (size_t k = 1; k < coupling.size(); ++k) {
        if (coupling[k].i == coupling[k - 1].i && coupling[k].j == coupling[k - 1].j)
            throw ModelError("duplicate coupling edge");
    }
    for (const auto& e : coupling) {
        adj[static_cast<size_t>(e.i)].push_back({e.j, e.resistance});
        adj[static_cast<size_t>(e.j)].push_back({e.i, e.resistance});
    }
    int max_deg = 0;
    for (auto& lst : adj) {
        std::sort(lst.begin(), lst.end(),
                  [](const Neighbor& a, const Neighbor& b) { return a.zone < b.zone; });
        max_deg = std::max(max_deg, static_cast<int>(lst.size()));
    }

    // Discretization stability: every self coefficient must land in (0,1).
    for (int i = 0; i < n; ++i) {
        const ZoneParams& z = zones[static_cast<size_t>(i)];
        double off = dt_seconds / (z.capacitance * z.r_out);
        for (const auto& nb : adj[static_cast<size_t>(i)])
            off += dt_seconds / (nb.resistance * z.capacitance);
        const double a_ii = 1.0 - off;
        if (!(a_ii > 0.0 && a_ii < 1.0))
            throw ModelError("zone " + std::to_string(i) +
                             ": discretization unstable, self coefficient " +
                             std::to_string(a_ii) + " outside (0,1)");
    }

    m.zones_ = std::move(zones);
    m.coupling_ = std::move(coupling);
    m.adjacency_ = std::move(adj);
    m.ahu_ = ahu;
    m.dt_seconds_ = dt_seconds;
    m.horizon_ = horizon;
    m.max_degree_ = max_deg;
    return m;
}

void validate_series(const BuildingModel& model, const ExogenousSeries& exo) {
    const int T = model.horizon();
    const int n = model.zone_count();
    if (exo.t_out.size() != T) throw ModelError("t_out length != horizon");
    if (exo.price.size() != T) throw ModelError("price length != horizon");
    if (exo.t_supply.size() != T) throw ModelError("t_supply length != horizon");
    if (exo.q_load.rows() != n || exo.q_load.cols() != T)
        throw ModelError("q_load must be zones x horizon");
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            if (!(exo.t_supply[t] < model.zone(i).t_min))
                throw ModelError("supply setpoint at stage " + std::to_string(t) +
                                 " is not below the comfort band of zone " +
                                 std::to_string(i));
        }
    }
}

DiscreteDynamics build_discrete_dynamics(const BuildingModel& model,
                                         const ExogenousSeries& exo) {
    validate_series(model, exo);
    const int n = model.zone_count();
    const int T = model.horizon();
    const double dt = model.dt_seconds();
    const double c_p = model.ahu().air_specific_heat;

    DiscreteDynamics dyn;
    dyn.a_self.resize(n);
    dyn.c_self.resize(n);
    dyn.a_neighbor.resize(static_cast<size_t>(n));
    dyn.d_const.resize(n, T);

    for (int i = 0; i < n; ++i) {
        const ZoneParams& z = model.zone(i);
        double off = dt / (z.capacitance * z.r_out);
        auto& row = dyn.a_neighbor[static_cast<size_t>(i)];
        for (const auto& nb : model.neighbors(i)) {
            const double a_ij = dt / (nb.resistance * z.capacitance);
            row.emplace_back(nb.zone, a_ij);
            off += a_ij;
        }
        dyn.a_self[i] = 1.0 - off;
        if (!(dyn.a_self[i] > 0.0 && dyn.a_self[i] < 1.0))
            throw ModelError("zone " + std::to_string(i) +
                             ": discretization unstable, self coefficient " +
                             std::to_string(dyn.a_self[i]) + " outside (0,1)");
        dyn.c_self[i] = -dt * c_p / z.capacitance;
        for (int t = 0; t < T; ++t) {
            dyn.d_const(i, t) = dt * exo.t_out[t] / (z.capacitance * z.r_out) +
                                dt * exo.q_load(i, t) / z.capacitance;
        }
    }
    return dyn;
}

Eigen::VectorXd simulate_step(const DiscreteDynamics& dyn,
                              const Eigen::VectorXd& temps,
                              const Eigen::VectorXd& x_cool, int t) {
    const int n = static_cast<int>(temps.size());
    Eigen::VectorXd next(n);
    for (int i = 0; i < n; ++i) {
        double v = dyn.a_self[i] * temps[i];
        for (const auto& [j, a_ij] : dyn.a_neighbor[static_cast<size_t>(i)])
            v += a_ij * temps[j];
        v += dyn.c_self[i] * x_cool[i];
        v += dyn.d_const(i, t);
        next[i] = v;
    }
    return next;
}

Eigen::MatrixXd simulate_schedule(const BuildingModel& model,
                                  const ExogenousSeries& exo,
                                  const Eigen::MatrixXd& flows) {
    return simulate_schedule(build_discrete_dynamics(model, exo), model, exo, flows);
}

Eigen::MatrixXd simulate_schedule(const DiscreteDynamics& dyn,
                                  const BuildingModel& model,
                                  const ExogenousSeries& exo,
                                  const Eigen::MatrixXd& flows) {
    const int n = model.zone_count();
    const int T = model.horizon();
    if (flows.rows() != n || flows.cols() != T)
        throw ModelError("flows must be zones x horizon");

    Eigen::MatrixXd temps(n, T);
    for (int i = 0; i < n; ++i) temps(i, 0) = model.zone(i).t_init;
    Eigen::VectorXd x_cool(n);
    for (int t = 0; t + 1 < T; ++t) {
        for (int i = 0; i < n; ++i)
            x_cool[i] = flows(i, t) * (temps(i, t) - exo.t_supply[t]);
        temps.col(t + 1) = simulate_step(dyn, temps.col(t), x_cool, t);
    }
    return temps;
}

}  // namespace hvacopt
