#include "hvacopt/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "agent_subproblems.hpp"
#include "hvacopt/stage_qp.hpp"

namespace hvacopt {

namespace {

Schedule schedule_from_flows(const BuildingModel& model, const ExogenousSeries& exo,
                             const Eigen::MatrixXd& flows) {
    Schedule s;
    s.flows = flows;
    s.temps = simulate_schedule(model, exo, flows);
    s.x_cool.resize(flows.rows(), flows.cols());
    for (int i = 0; i < flows.rows(); ++i)
        for (int t = 0; t < flows.cols(); ++t)
            s.x_cool(i, t) = flows(i, t) * (s.temps(i, t) - exo.t_supply[t]);
    s.cost = schedule_cost(model, exo, flows, s.temps);
    s.violations = validate_schedule(s, model, exo);
    return s;
}

}  // namespace

// Method of multipliers on the stacked relaxed problem. The inner primal
// minimization runs Gauss-Seidel sweeps over the agents: each zone solves its
// exact banded subproblem against the current values of the others, and the
// coordinator block is a closed form. Blockwise optimality of the smooth
// convex inner problem over the product set implies joint optimality, so the
// sweeps stop on the joint projected-gradient displacement.
CentralizedRelaxed solve_centralized_relaxed(const BuildingModel& model,
                                             const ExogenousSeries& exo, double tol,
                                             int max_outer) {
    const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
    const StackedSystem sys = StackedSystem::assemble(dyn, model);
    const AgentObjective obj = relaxed_objective(model, exo);
    const int I = model.zone_count();

    std::vector<LocalFeasibleSet> feas;
    std::vector<BlockTridiag> structure;
    feas.reserve(static_cast<size_t>(I));
    structure.reserve(static_cast<size_t>(I));
    for (int i = 0; i < I; ++i) {
        feas.push_back(local_feasible_set(model.zone(i), exo.t_supply));
        structure.push_back(detail::zone_structure(i, sys));
    }

    IterateState state = initial_state(model, exo, sys);
    double rho = 10.0;
    double resid = std::numeric_limits<double>::infinity();
    double prev_resid = resid;
    int outer = 0;
    int total_sweeps = 0;

    std::vector<BlockTridiag> hess;
    std::vector<double> lips;
    auto rescale = [&]() {
        hess.clear();
        lips.clear();
        for (int i = 0; i < I; ++i) {
            hess.push_back(detail::scaled(structure[static_cast<size_t>(i)], rho));
            lips.push_back(hess.back().spectral_upper_bound());
        }
    };
    rescale();

    for (; outer < max_outer; ++outer) {
        // Inner Gauss-Seidel sweeps to blockwise optimality.
        for (int sweep = 0; sweep < 200; ++sweep) {
            ++total_sweeps;
            double shift = 0.0;
            for (int i = 0; i < I; ++i) {
                std::vector<Eigen::VectorXd> dres;
                dres.reserve(static_cast<size_t>(I));
                for (int j = 0; j < I; ++j)
                    dres.push_back(sys.horizon() > 1
                                       ? sys.dyn_residual(j, state.agents)
                                       : Eigen::VectorXd::Zero(0));
                const Eigen::VectorXd fsum = sys.flow_sum(state.agents);
                const Eigen::VectorXd g = detail::zone_linear_term(
                    i, state, sys, obj, rho, dres, fsum);
                const QpResult r = minimize_banded_qp(
                    hess[static_cast<size_t>(i)], lips[static_cast<size_t>(i)], g,
                    feas[static_cast<size_t>(i)],
                    state.agents[static_cast<size_t>(i)].stacked(), 1e-9, 4000);
                shift = std::max(
                    shift, (r.x - state.agents[static_cast<size_t>(i)].stacked())
                               .lpNorm<Eigen::Infinity>());
                state.agents[static_cast<size_t>(i)].stacked() = r.x;
            }
            const CoordinatorUpdate cu = detail::coordinator_solve(
                state.multipliers, sys, obj, rho, sys.flow_sum(state.agents));
            shift = std::max(shift,
                             (cu.y - state.coordinator.y_total).lpNorm<Eigen::Infinity>());
            shift = std::max(shift, (cu.s1 - state.s1).lpNorm<Eigen::Infinity>());
            shift = std::max(shift, (cu.s2 - state.s2).lpNorm<Eigen::Infinity>());
            state.coordinator.y_total = cu.y;
            state.s1 = cu.s1;
            state.s2 = cu.s2;
            if (shift <= std::min(1e-9, 0.01 * tol)) break;
        }

        const ResidualParts parts = compute_residual_parts(state, sys);
        resid = parts.total();
        if (resid <= tol) break;
        for (size_t i = 0; i < state.multipliers.lambda.size(); ++i)
            state.multipliers.lambda[i] += rho * parts.dyn[i];
        state.multipliers.gamma += rho * parts.flow;
        state.multipliers.eta += rho * parts.cap;
        if (resid > 0.25 * prev_resid) {
            rho = std::min(rho * 4.0, 1e8);
            rescale();
        }
        prev_resid = resid;
    }

    CentralizedRelaxed out;
    out.relaxed.agents = state.agents;
    out.relaxed.y_total = state.coordinator.y_total;
    out.relaxed.objective = obj.total(state.agents, state.coordinator.y_total);
    out.relaxed.residual = resid;
    out.relaxed.iterations = total_sweeps;
    out.relaxed.converged = resid <= tol;
    if (!out.relaxed.converged)
        throw SolveError("centralized relaxed solve did not reach feasibility tolerance "
                         "(residual " + std::to_string(resid) + ")");

    out.reference.schedule = recover_schedule(out.relaxed, model, exo);
    out.reference.objective = out.relaxed.objective;
    out.reference.method = "centralized-relaxed";
    out.reference.iterations = outer + 1;
    out.reference.solver_residual = resid;
    return out;
}

// ---------------------------------------------------------------------------
// Centralized nonlinear solve (multi-start projected gradient on the flows)
// ---------------------------------------------------------------------------

namespace {

// Projection of one stage's flows onto {box} intersect {sum <= cap}:
// clamp, then shift by the cap row's multiplier found by bisection.
void project_stage_flows(Eigen::Ref<Eigen::VectorXd> m, const BuildingModel& model) {
    const int I = model.zone_count();
    for (int i = 0; i < I; ++i)
        m[i] = std::min(std::max(m[i], model.zone(i).m_min), model.zone(i).m_max);
    const double cap = model.ahu().total_flow_max;
    if (m.sum() <= cap) return;

    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < I; ++i) hi = std::max(hi, m[i] - model.zone(i).m_min);
    const auto shifted_sum = [&](double nu) {
        double s = 0.0;
        for (int i = 0; i < I; ++i)
            s += std::min(std::max(m[i] - nu, model.zone(i).m_min), model.zone(i).m_max);
        return s;
    };
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (shifted_sum(mid) > cap) lo = mid;
        else hi = mid;
    }
    for (int i = 0; i < I; ++i)
        m[i] = std::min(std::max(m[i] - hi, model.zone(i).m_min), model.zone(i).m_max);
}

struct PenaltyProblem {
    const BuildingModel& model;
    const ExogenousSeries& exo;
    const DiscreteDynamics& dyn;
    double mu;
    double margin;

    // Objective value plus comfort penalty, with the gradient in the flows
    // computed by a backward (adjoint) sweep through the rollout.
    double value_grad(const Eigen::MatrixXd& flows, Eigen::MatrixXd& grad) const {
        const int I = model.zone_count();
        const int T = model.horizon();
        const double dt_h = model.dt_hours();
        const AhuParams& ahu = model.ahu();

        Eigen::MatrixXd temps = simulate_schedule(dyn, model, exo, flows);
        double val = 0.0;
        grad.setZero(I, T);

        // Stage cost partials.
        Eigen::MatrixXd dcost_dT = Eigen::MatrixXd::Zero(I, T);
        for (int t = 0; t < T; ++t) {
            const double total = flows.col(t).sum();
            const double pc = cooling_power(flows.col(t), temps.col(t), exo.t_out[t],
                                            exo.t_supply[t], ahu);
            const double pf = fan_power(flows.col(t), ahu.fan_coefficient);
            const double w = exo.price[t] * dt_h;
            val += w * (pc + pf);
            const double scale = ahu.air_specific_heat * ahu.cop_reciprocal;
            for (int i = 0; i < I; ++i) {
                grad(i, t) += w * (scale * ((1.0 - ahu.return_air_fraction) *
                                                (exo.t_out[t] - exo.t_supply[t]) +
                                            ahu.return_air_fraction *
                                                (temps(i, t) - exo.t_supply[t])) +
                                   3.0 * ahu.fan_coefficient * total * total);
                dcost_dT(i, t) = w * scale * ahu.return_air_fraction * flows(i, t);
            }
        }
        // Comfort penalty on stages 1..T-1 against the margin-shrunk band.
        for (int t = 1; t < T; ++t) {
            for (int i = 0; i < I; ++i) {
                const ZoneParams& z = model.zone(i);
                const double hi = temps(i, t) - (z.t_max - margin);
                const double lo = (z.t_min + margin) - temps(i, t);
                if (hi > 0.0) {
                    val += mu * hi * hi;
                    dcost_dT(i, t) += 2.0 * mu * hi;
                }
                if (lo > 0.0) {
                    val += mu * lo * lo;
                    dcost_dT(i, t) -= 2.0 * mu * lo;
                }
            }
        }
        // Adjoint sweep.
        Eigen::VectorXd nu = dcost_dT.col(T - 1);
        for (int t = T - 2; t >= 0; --t) {
            for (int i = 0; i < I; ++i)
                grad(i, t) += dyn.c_self[i] * (temps(i, t) - exo.t_supply[t]) * nu[i];
            Eigen::VectorXd prev(I);
            for (int i = 0; i < I; ++i)
                prev[i] = (dyn.a_self[i] + dyn.c_self[i] * flows(i, t)) * nu[i];
            // Neighbor transpose terms: T[j,t] feeds T[i,t+1] through a_ij.
            for (int i = 0; i < I; ++i) {
                for (const auto& [j, a_ij] : dyn.a_neighbor[static_cast<size_t>(i)])
                    prev[j] += a_ij * nu[i];
            }
            prev += dcost_dT.col(t);
            nu = prev;
        }
        return val;
    }
};

// Projected gradient with Barzilai-Borwein steps and a backtracking Armijo
// guard; adequate for the smooth nonconvex penalty objective.
double spg_minimize(const PenaltyProblem& prob, Eigen::MatrixXd& flows, double tol,
                    int max_iters) {
    const int I = prob.model.zone_count();
    const int T = prob.model.horizon();
    const auto project_all = [&](Eigen::MatrixXd& f) {
        for (int t = 0; t < T; ++t) project_stage_flows(f.col(t), prob.model);
    };
    project_all(flows);
    Eigen::MatrixXd grad(I, T), grad_new(I, T);
    double f_val = prob.value_grad(flows, grad);
    double step = 1e-2;
    for (int k = 0; k < max_iters; ++k) {
        Eigen::MatrixXd trial = flows - step * grad;
        project_all(trial);
        const Eigen::MatrixXd dir = trial - flows;
        const double dir_norm = dir.norm();
        if (dir_norm / std::max(step, 1e-16) <= tol) return f_val;

        double t_ls = 1.0;
        double f_trial = 0.0;
        const double slope = grad.cwiseProduct(dir).sum();
        Eigen::MatrixXd cand;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            cand = flows + t_ls * dir;
            f_trial = prob.value_grad(cand, grad_new);
            if (f_trial <= f_val + 1e-4 * t_ls * slope) {
                accepted = true;
                break;
            }
            t_ls *= 0.5;
        }
        if (!accepted) {
            step = std::max(step * 0.1, 1e-8);
            continue;
        }
        const Eigen::MatrixXd s = cand - flows;
        const Eigen::MatrixXd yv = grad_new - grad;
        const double sy = s.cwiseProduct(yv).sum();
        step = sy > 1e-14 ? s.squaredNorm() / sy : step * 2.0;
        step = std::min(std::max(step, 1e-8), 1e4);
        flows = cand;
        grad = grad_new;
        f_val = f_trial;
    }
    return f_val;
}

}  // namespace

ReferenceSolution solve_centralized_nonlinear(const BuildingModel& model,
                                              const ExogenousSeries& exo, double tol,
                                              int restarts, std::uint64_t seed,
                                              const Eigen::MatrixXd* warm_flows) {
    const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
    const int I = model.zone_count();
    const int T = model.horizon();
    std::mt19937_64 rng(seed);

    bool have_best = false;
    Schedule best;
    int best_restart = -1;
    const int total_runs = restarts + (warm_flows != nullptr ? 1 : 0);
    for (int r = 0; r < total_runs; ++r) {
        Eigen::MatrixXd flows(I, T);
        if (r == restarts) {
            flows = *warm_flows;
        } else if (r == 0) {
            for (int i = 0; i < I; ++i)
                flows.row(i).setConstant(0.5 * (model.zone(i).m_min + model.zone(i).m_max));
        } else {
            for (int i = 0; i < I; ++i) {
                const ZoneParams& z = model.zone(i);
                for (int t = 0; t < T; ++t) {
                    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                    flows(i, t) = z.m_min + u * (z.m_max - z.m_min);
                }
            }
        }
        for (double mu : {1e3, 1e5, 1e7}) {
            PenaltyProblem prob{model, exo, dyn, mu, 1e-4};
            spg_minimize(prob, flows, tol, 4000);
            Schedule s = schedule_from_flows(model, exo, flows);
            if (s.violations.feasible()) {
                if (!have_best || s.cost.total < best.cost.total) {
                    have_best = true;
                    best = std::move(s);
                    best_restart = r;
                }
                break;
            }
        }
    }
    if (!have_best)
        throw SolveError("centralized nonlinear solve: no restart reached feasibility");
    ReferenceSolution out;
    out.schedule = std::move(best);
    out.objective = out.schedule.cost.total;
    out.method = "centralized-nonlinear";
    out.iterations = best_restart;
    return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

std::optional<ReferenceSolution> brute_force_oracle(const BuildingModel& model,
                                                    const ExogenousSeries& exo,
                                                    double grid_resolution) {
    const DiscreteDynamics dyn = build_discrete_dynamics(model, exo);
    const int I = model.zone_count();
    const int T = model.horizon();
    if (grid_resolution <= 0.0) throw ModelError("oracle grid resolution must be > 0");

    std::vector<std::vector<double>> grid(static_cast<size_t>(I));
    double combos = 1.0;
    for (int i = 0; i < I; ++i) {
        const ZoneParams& z = model.zone(i);
        const int cells = std::max(1, static_cast<int>(std::lround((z.m_max - z.m_min) /
                                                                   grid_resolution)));
        const double step = (z.m_max - z.m_min) / cells;
        auto& g = grid[static_cast<size_t>(i)];
        for (int k = 0; k <= cells; ++k) g.push_back(z.m_min + step * k);
        combos *= static_cast<double>(g.size());
    }
    if (std::pow(combos, T) > 5e8)
        throw ModelError("brute-force oracle: instance too large to enumerate");

    const double dt_h = model.dt_hours();
    const double cap = model.ahu().total_flow_max;
    double best_cost = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd best_flows;
    Eigen::MatrixXd flows = Eigen::MatrixXd::Zero(I, T);
    std::vector<Eigen::VectorXd> temps(static_cast<size_t>(T + 1));
    temps[0].resize(I);
    for (int i = 0; i < I; ++i) temps[0][i] = model.zone(i).t_init;
    Eigen::VectorXd x_stage(I);

    // Nonnegative stage costs allow cost-bound pruning; holds whenever the
    // outside air is no colder than the setpoint and prices are nonnegative.
    bool prune_on_cost = exo.price.minCoeff() >= 0.0;
    for (int t = 0; t < T && prune_on_cost; ++t)
        if (exo.t_out[t] < exo.t_supply[t]) prune_on_cost = false;

    // Depth-first over stages, enumerating the joint flow grid per stage in
    // lexicographic order so the first strict improvement is the
    // lexicographically smallest argmin.
    std::vector<int> choice(static_cast<size_t>(I), 0);
    const std::function<void(int, double)> stage_dfs = [&](int t, double cost_so_far) {
        if (t == T) {
            if (cost_so_far < best_cost - 1e-15) {
                best_cost = cost_so_far;
                best_flows = flows;
            }
            return;
        }
        const std::function<void(int, double)> zone_dfs = [&](int zi, double flow_sum) {
            if (zi == I) {
                if (flow_sum > cap + 1e-12) return;
                for (int i = 0; i < I; ++i)
                    x_stage[i] = flows(i, t) * (temps[static_cast<size_t>(t)][i] -
                                                exo.t_supply[t]);
                const double p_cool =
                    cooling_power(flows.col(t), temps[static_cast<size_t>(t)],
                                  exo.t_out[t], exo.t_supply[t], model.ahu());
                const double p_fan = fan_power(flows.col(t), model.ahu().fan_coefficient);
                const double cost =
                    cost_so_far + exo.price[t] * (p_cool + p_fan) * dt_h;
                if (prune_on_cost && cost >= best_cost - 1e-15) return;
                if (t + 1 < T) {
                    temps[static_cast<size_t>(t + 1)] =
                        simulate_step(dyn, temps[static_cast<size_t>(t)], x_stage, t);
                    for (int i = 0; i < I; ++i) {
                        const ZoneParams& z = model.zone(i);
                        const double v = temps[static_cast<size_t>(t + 1)][i];
                        if (v < z.t_min - 1e-12 || v > z.t_max + 1e-12) return;
                    }
                }
                stage_dfs(t + 1, cost);
                return;
            }
            for (double m : grid[static_cast<size_t>(zi)]) {
                flows(zi, t) = m;
                zone_dfs(zi + 1, flow_sum + m);
            }
        };
        zone_dfs(0, 0.0);
    };
    stage_dfs(0, 0.0);

    if (!std::isfinite(best_cost)) return std::nullopt;
    ReferenceSolution out;
    out.schedule = schedule_from_flows(model, exo, best_flows);
    out.objective = out.schedule.cost.total;
    out.method = "brute-force";
    return out;
}

}  // namespace hvacopt
