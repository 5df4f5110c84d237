#include "hvacopt/adal.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "hvacopt/parallel.hpp"

#include "agent_subproblems.hpp"

namespace hvacopt {

namespace detail {

// Largest value of the cooling variable's lower envelope at (temp, flow):
// rows with a negative X coefficient read X >= coef_t*T + coef_m*m - rhs.
double envelope_floor(const StageConstraints& st, double temp, double flow) {
    double lo = -std::numeric_limits<double>::infinity();
    for (const auto& row : st.envelope) {
        if (row.coef_x < 0.0)
            lo = std::max(lo, row.coef_t * temp + row.coef_m * flow - row.rhs);
    }
    return lo;
}

// Unscaled Hessian structure of zone i's subproblem: contributions of its own
// dynamics row, the neighbor rows it appears in, and the two flow rows.
BlockTridiag zone_structure(int i, const StackedSystem& sys) {
    const int T = sys.horizon();
    BlockTridiag S;
    S.diag.assign(static_cast<size_t>(T), Eigen::Matrix3d::Zero());
    if (T > 1) S.upper.assign(static_cast<size_t>(T - 1), Eigen::Matrix3d::Zero());

    const double a = sys.a_self(i);
    const double c = sys.c_self(i);
    double neighbor_sq = 0.0;
    for (const auto& [j, a_ij] : sys.dyn_neighbors(i)) {
        (void)a_ij;
        for (const auto& [k, a_ji] : sys.dyn_neighbors(j)) {
            if (k == i) neighbor_sq += a_ji * a_ji;
        }
    }
    for (int t = 0; t + 1 < T; ++t) {
        auto& d = S.diag[static_cast<size_t>(t)];
        d(0, 0) += a * a + neighbor_sq;
        d(0, 2) += a * c;
        d(2, 0) += a * c;
        d(2, 2) += c * c;
        S.diag[static_cast<size_t>(t + 1)](0, 0) += 1.0;
        S.upper[static_cast<size_t>(t)](0, 0) = -a;
        S.upper[static_cast<size_t>(t)](2, 0) = -c;
    }
    for (int t = 0; t < T; ++t) S.diag[static_cast<size_t>(t)](1, 1) += 2.0;
    return S;
}

BlockTridiag scaled(BlockTridiag s, double rho) {
    for (auto& b : s.diag) b *= rho;
    for (auto& b : s.upper) b *= rho;
    return s;
}

// Linear term of zone i's local augmented Lagrangian at the snapshot, using
// precomputed snapshot row residuals and the snapshot flow sum.
Eigen::VectorXd zone_linear_term(int i, const IterateState& state,
                                 const StackedSystem& sys, const AgentObjective& obj,
                                 double rho,
                                 const std::vector<Eigen::VectorXd>& dyn_resid,
                                 const Eigen::VectorXd& flow_sum) {
    const int T = sys.horizon();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * T);
    for (int t = 0; t < T; ++t) g[3 * t + 2] += obj.x_cool_coef[t];

    const Eigen::VectorXd& xik = state.agents[static_cast<size_t>(i)].stacked();
    if (T > 1) {
        Eigen::VectorXd w = state.multipliers.lambda[static_cast<size_t>(i)] +
                            rho * (dyn_resid[static_cast<size_t>(i)] -
                                   sys.apply_dyn_block(i, i, xik));
        sys.add_dyn_block_transpose(i, i, w, 1.0, g);
        for (const auto& [j, a_ij] : sys.dyn_neighbors(i)) {
            (void)a_ij;
            Eigen::VectorXd wj = state.multipliers.lambda[static_cast<size_t>(j)] +
                                 rho * (dyn_resid[static_cast<size_t>(j)] -
                                        sys.apply_dyn_block(j, i, xik));
            sys.add_dyn_block_transpose(j, i, wj, 1.0, g);
        }
    }

    const Eigen::VectorXd& y = state.coordinator.y_total;
    const double cap = sys.total_flow_max();
    for (int t = 0; t < T; ++t) {
        const double r1 = flow_sum[t] - y[t] + state.s1[t];
        const double r2 = flow_sum[t] - cap + state.s2[t];
        g[3 * t + 1] += state.multipliers.gamma[t] + state.multipliers.eta[t] +
                        rho * (r1 + r2 -
                               2.0 * state.agents[static_cast<size_t>(i)].flow(t));
    }
    return g;
}

// Stage-t coordinator problem:
//   min_{Y,s1,s2 >= 0} c Y + c3 Y^3 + gamma (s1 - Y) + rho/2 (s1 - Y + F)^2
//                      + eta s2 + rho/2 (F - cap + s2)^2.
// s2 separates; (Y, s1) reduces to a monotone piecewise derivative in Y.
void coordinator_stage(double c, double c3, double gamma, double eta, double rho,
                       double flow_total, double cap, double& y_out, double& s1_out,
                       double& s2_out) {
    s2_out = std::max(0.0, (cap - flow_total) - eta / rho);

    const double y_break = flow_total + gamma / rho;
    double y = 0.0;
    if (y_break <= 0.0) {
        if (c >= 0.0) {
            y = 0.0;
        } else if (c3 > 0.0) {
            y = std::sqrt(-c / (3.0 * c3));
        } else {
            throw SolveError("coordinator objective unbounded below in Y");
        }
    } else {
        const double d0 = c - gamma - rho * flow_total;  // derivative at Y = 0
        if (d0 >= 0.0) {
            y = 0.0;
        } else {
            double root;
            if (c3 > 0.0) {
                root = (-rho + std::sqrt(rho * rho - 12.0 * c3 * d0)) / (6.0 * c3);
            } else {
                root = -d0 / rho;
            }
            if (root <= y_break) {
                y = root;
            } else if (c < 0.0 && c3 > 0.0) {
                y = std::sqrt(-c / (3.0 * c3));
            } else if (c < 0.0) {
                throw SolveError("coordinator objective unbounded below in Y");
            } else {
                y = y_break;
            }
        }
    }
    y_out = y;
    s1_out = std::max(0.0, y - flow_total - gamma / rho);
}

CoordinatorUpdate coordinator_solve(const Multipliers& mult, const StackedSystem& sys,
                                    const AgentObjective& obj, double rho,
                                    const Eigen::VectorXd& flow_sum) {
    const int T = sys.horizon();
    CoordinatorUpdate out;
    out.y.resize(T);
    out.s1.resize(T);
    out.s2.resize(T);
    for (int t = 0; t < T; ++t) {
        coordinator_stage(obj.y_coef[t], obj.y_cubic_coef[t], mult.gamma[t], mult.eta[t],
                          rho, flow_sum[t], sys.total_flow_max(), out.y[t], out.s1[t],
                          out.s2[t]);
    }
    return out;
}

}  // namespace detail

namespace {

using detail::coordinator_solve;
using detail::envelope_floor;
using detail::scaled;
using detail::zone_linear_term;
using detail::zone_structure;

void apply_dual_step(Multipliers& m, const ResidualParts& parts, double rho) {
    for (size_t i = 0; i < m.lambda.size(); ++i) m.lambda[i] += rho * parts.dyn[i];
    m.gamma += rho * parts.flow;
    m.eta += rho * parts.cap;
}

}  // namespace

double ResidualParts::dyn_norm_sum() const {
    double s = 0.0;
    for (const auto& r : dyn) s += r.norm();
    return s;
}

double ResidualParts::total() const { return dyn_norm_sum() + flow.norm() + cap.norm(); }

ResidualParts compute_residual_parts(const IterateState& state, const StackedSystem& sys) {
    ResidualParts parts;
    const int I = sys.zone_count();
    parts.dyn.reserve(static_cast<size_t>(I));
    for (int i = 0; i < I; ++i) {
        if (sys.horizon() > 1)
            parts.dyn.push_back(sys.dyn_residual(i, state.agents));
        else
            parts.dyn.push_back(Eigen::VectorXd::Zero(0));
    }
    const Eigen::VectorXd fsum = sys.flow_sum(state.agents);
    parts.flow = fsum - state.coordinator.y_total + state.s1;
    parts.cap = fsum - sys.cap_vector() + state.s2;
    return parts;
}

double residual(const IterateState& state, const StackedSystem& sys) {
    return compute_residual_parts(state, sys).total();
}

double augmented_lagrangian(const IterateState& state, const StackedSystem& sys,
                            const AgentObjective& obj, double rho) {
    const ResidualParts parts = compute_residual_parts(state, sys);
    double v = obj.total(state.agents, state.coordinator.y_total);
    for (size_t i = 0; i < parts.dyn.size(); ++i) {
        v += state.multipliers.lambda[i].dot(parts.dyn[i]);
        v += 0.5 * rho * parts.dyn[i].squaredNorm();
    }
    v += state.multipliers.gamma.dot(parts.flow) + 0.5 * rho * parts.flow.squaredNorm();
    v += state.multipliers.eta.dot(parts.cap) + 0.5 * rho * parts.cap.squaredNorm();
    return v;
}

Multipliers update_multipliers(const IterateState& state, const StackedSystem& sys,
                               double rho) {
    Multipliers next = state.multipliers;
    apply_dual_step(next, compute_residual_parts(state, sys), rho);
    return next;
}

AgentTrajectory solve_subproblem_zone(int i, const IterateState& snapshot,
                                      const StackedSystem& sys, const AgentObjective& obj,
                                      const LocalFeasibleSet& feas,
                                      const SolverConfig& config) {
    const BlockTridiag hess = scaled(zone_structure(i, sys), config.rho);
    const double lip = hess.spectral_upper_bound();

    std::vector<Eigen::VectorXd> dyn_resid;
    dyn_resid.reserve(snapshot.agents.size());
    for (int j = 0; j < sys.zone_count(); ++j) {
        dyn_resid.push_back(sys.horizon() > 1 ? sys.dyn_residual(j, snapshot.agents)
                                              : Eigen::VectorXd::Zero(0));
    }
    const Eigen::VectorXd g = zone_linear_term(i, snapshot, sys, obj, config.rho,
                                               dyn_resid, sys.flow_sum(snapshot.agents));
    const QpResult res = minimize_banded_qp(hess, lip, g, feas,
                                            snapshot.agents[static_cast<size_t>(i)].stacked(),
                                            config.subproblem_tol,
                                            config.subproblem_max_iters);
    if (!res.converged)
        throw SubproblemError("zone " + std::to_string(i) +
                                  " subproblem did not reach tolerance (pg norm " +
                                  std::to_string(res.projected_gradient_norm) + ")",
                              AgentTrajectory(res.x));
    return AgentTrajectory(res.x);
}

CoordinatorUpdate solve_subproblem_coordinator(const IterateState& snapshot,
                                               const StackedSystem& sys,
                                               const AgentObjective& obj,
                                               const SolverConfig& config) {
    return coordinator_solve(snapshot.multipliers, sys, obj, config.rho,
                             sys.flow_sum(snapshot.agents));
}

IterateState initial_state(const BuildingModel& model, const ExogenousSeries& exo,
                           const StackedSystem& sys) {
    const int I = model.zone_count();
    const int T = model.horizon();
    IterateState st;
    st.agents.reserve(static_cast<size_t>(I));
    for (int i = 0; i < I; ++i) {
        const ZoneParams& z = model.zone(i);
        const LocalFeasibleSet feas = local_feasible_set(z, exo.t_supply);
        AgentTrajectory x(T);
        for (int t = 0; t < T; ++t) {
            const auto& stage = feas.stages[static_cast<size_t>(t)];
            x.temp(t) = stage.temp_pinned ? z.t_init : 0.5 * (z.t_min + z.t_max);
            x.flow(t) = z.m_min;
            x.cooling(t) = stage.temp_pinned
                               ? (z.t_init - stage.t_ref) * z.m_min
                               : envelope_floor(stage, x.temp(t), x.flow(t));
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

AdalRun adal_solve(const BuildingModel& model, const ExogenousSeries& exo,
                   const SolverConfig& config, const IterateState* warm) {
    const auto t_start = std::chrono::steady_clock::now();
    const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
    const StackedSystem sys = StackedSystem::assemble(dyn, model);
    const AgentObjective obj = relaxed_objective(model, exo);
    const int I = model.zone_count();

    std::vector<LocalFeasibleSet> feas;
    std::vector<BlockTridiag> hess;
    std::vector<double> lips;
    feas.reserve(static_cast<size_t>(I));
    hess.reserve(static_cast<size_t>(I));
    lips.reserve(static_cast<size_t>(I));
    for (int i = 0; i < I; ++i) {
        feas.push_back(local_feasible_set(model.zone(i), exo.t_supply));
        hess.push_back(scaled(zone_structure(i, sys), config.rho));
        lips.push_back(hess.back().spectral_upper_bound());
    }

    IterateState state = warm ? *warm : initial_state(model, exo, sys);
    if (static_cast<int>(state.agents.size()) != I)
        throw SolveError("warm-start state has the wrong number of agents");
    // The flow-coupling rows involve every zone plus the coordinator, so the
    // relaxation step defaults to one over that count; 1/(1+max degree) is
    // enough for the dynamics rows alone but cycles on the shared rows.
    const double tau = config.tau > 0.0 ? config.tau : 1.0 / (I + 1.0);
    if (tau > 1.0) throw SolveError("tau must lie in (0,1]");

    WorkerPool pool(config.threads);
    RelaxedSolution sol;
    std::vector<AgentTrajectory> proposals(static_cast<size_t>(I));
    std::vector<char> sub_ok(static_cast<size_t>(I), 1);
    std::vector<double> sub_seconds(static_cast<size_t>(I), 0.0);

    for (int k = 0; k < config.max_iters; ++k) {
        std::vector<Eigen::VectorXd> dyn_resid;
        dyn_resid.reserve(static_cast<size_t>(I));
        for (int j = 0; j < I; ++j) {
            dyn_resid.push_back(sys.horizon() > 1 ? sys.dyn_residual(j, state.agents)
                                                  : Eigen::VectorXd::Zero(0));
        }
        const Eigen::VectorXd fsum = sys.flow_sum(state.agents);

        pool.parallel_for(I, [&](int idx) {
            const int i = config.reverse_dispatch ? I - 1 - idx : idx;
            const auto t0 = std::chrono::steady_clock::now();
            const Eigen::VectorXd g =
                zone_linear_term(i, state, sys, obj, config.rho, dyn_resid, fsum);
            const QpResult res = minimize_banded_qp(
                hess[static_cast<size_t>(i)], lips[static_cast<size_t>(i)], g,
                feas[static_cast<size_t>(i)],
                state.agents[static_cast<size_t>(i)].stacked(), config.subproblem_tol,
                config.subproblem_max_iters);
            proposals[static_cast<size_t>(i)] = AgentTrajectory(res.x);
            sub_ok[static_cast<size_t>(i)] = res.converged ? 1 : 0;
            sub_seconds[static_cast<size_t>(i)] +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
        });
        const CoordinatorUpdate cu =
            coordinator_solve(state.multipliers, sys, obj, config.rho, fsum);
        for (int i = 0; i < I; ++i)
            if (!sub_ok[static_cast<size_t>(i)]) ++sol.subproblem_failures;

        for (int i = 0; i < I; ++i) {
            auto& x = state.agents[static_cast<size_t>(i)].stacked();
            x += tau * (proposals[static_cast<size_t>(i)].stacked() - x);
        }
        state.coordinator.y_total += tau * (cu.y - state.coordinator.y_total);
        state.s1 += tau * (cu.s1 - state.s1);
        state.s2 += tau * (cu.s2 - state.s2);
        state.iteration = k + 1;

        const ResidualParts parts = compute_residual_parts(state, sys);
        const double r = parts.total();
        state.residual_history.push_back(r);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        sol.trace.push_back({k + 1, r, obj.total(state.agents, state.coordinator.y_total),
                             parts.dyn_norm_sum(), parts.flow.norm(), parts.cap.norm(),
                             elapsed});
        if (r <= config.epsilon) {
            sol.converged = true;
            break;
        }
        apply_dual_step(state.multipliers, parts, config.rho);
    }

    for (double s : sub_seconds) sol.subproblem_seconds += s;
    sol.agents = state.agents;
    sol.y_total = state.coordinator.y_total;
    sol.objective = obj.total(state.agents, state.coordinator.y_total);
    sol.residual = state.residual_history.empty() ? residual(state, sys)
                                                  : state.residual_history.back();
    sol.iterations = state.iteration;
    return {std::move(state), std::move(sol)};
}

}  // namespace hvacopt
