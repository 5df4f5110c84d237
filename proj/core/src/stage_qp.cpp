#include "hvacopt/stage_qp.hpp"

#include <algorithm>
#include <cmath>

#include "hvacopt/errors.hpp"

namespace hvacopt {

Eigen::VectorXd BlockTridiag::multiply(const Eigen::VectorXd& x) const {
    const int T = stages();
    Eigen::VectorXd y(3 * T);
    for (int t = 0; t < T; ++t) {
        Eigen::Vector3d v = diag[static_cast<size_t>(t)] * x.segment<3>(3 * t);
        if (t + 1 < T) v += upper[static_cast<size_t>(t)] * x.segment<3>(3 * (t + 1));
        if (t > 0)
            v += upper[static_cast<size_t>(t - 1)].transpose() * x.segment<3>(3 * (t - 1));
        y.segment<3>(3 * t) = v;
    }
    return y;
}

Eigen::MatrixXd BlockTridiag::dense() const {
    const int T = stages();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(3 * T, 3 * T);
    for (int t = 0; t < T; ++t) {
        H.block<3, 3>(3 * t, 3 * t) = diag[static_cast<size_t>(t)];
        if (t + 1 < T) {
            H.block<3, 3>(3 * t, 3 * (t + 1)) = upper[static_cast<size_t>(t)];
            H.block<3, 3>(3 * (t + 1), 3 * t) = upper[static_cast<size_t>(t)].transpose();
        }
    }
    return H;
}

double BlockTridiag::spectral_upper_bound() const {
    const int n = 3 * stages();
    if (n <= 600) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(),
                                                          Eigen::EigenvaluesOnly);
        return std::max(es.eigenvalues().maxCoeff() * 1.000001, 1e-12);
    }
    // Gershgorin: max absolute row sum.
    double bound = 0.0;
    const int T = stages();
    for (int t = 0; t < T; ++t) {
        for (int r = 0; r < 3; ++r) {
            double s = diag[static_cast<size_t>(t)].row(r).cwiseAbs().sum();
            if (t + 1 < T) s += upper[static_cast<size_t>(t)].row(r).cwiseAbs().sum();
            if (t > 0) s += upper[static_cast<size_t>(t - 1)].col(r).cwiseAbs().sum();
            bound = std::max(bound, s);
        }
    }
    return std::max(bound, 1e-12);
}

namespace {

struct FlatRow {
    Eigen::Vector3d c;
    double d;
    int stage;
    bool equality;
};

// All rows of the feasible set in flat form; pinned stages contribute two
// equalities (temperature pin, exact product) plus the flow box.
std::vector<FlatRow> flatten_rows(const LocalFeasibleSet& feas) {
    std::vector<FlatRow> rows;
    const int T = static_cast<int>(feas.stages.size());
    for (int t = 0; t < T; ++t) {
        const auto& st = feas.stages[static_cast<size_t>(t)];
        if (st.temp_pinned) {
            rows.push_back({{1, 0, 0}, st.t_lo, t, true});
            rows.push_back({{0, -(st.t_lo - st.t_ref), 1}, 0.0, t, true});
            rows.push_back({{0, -1, 0}, -st.m_lo, t, false});
            rows.push_back({{0, 1, 0}, st.m_hi, t, false});
            continue;
        }
        rows.push_back({{-1, 0, 0}, -st.t_lo, t, false});
        rows.push_back({{1, 0, 0}, st.t_hi, t, false});
        rows.push_back({{0, -1, 0}, -st.m_lo, t, false});
        rows.push_back({{0, 1, 0}, st.m_hi, t, false});
        for (const auto& e : st.envelope)
            rows.push_back({{e.coef_t, e.coef_m, e.coef_x}, e.rhs, t, false});
    }
    return rows;
}

// One stage's contribution to the KKT system: the (up to three) linearly
// independent active rows and their right-hand sides.
struct StageActiveSet {
    Eigen::Matrix<double, 3, 3> c = Eigen::Matrix<double, 3, 3>::Zero();  // rows
    Eigen::Matrix<double, 3, 3> q = Eigen::Matrix<double, 3, 3>::Zero();  // orthonormal
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    int count = 0;
    int source[3] = {-1, -1, -1};  // index into the flat row list
};

// Solves the equality-constrained problem on the given per-stage row
// selection. The Hessian is block tridiagonal and every constraint is local
// to one stage, so the KKT system stays block tridiagonal in the per-stage
// variable (x_t, nu_t) and solves in O(T) by block elimination. Fills the
// primal xr and per-stage duals; false on a singular pivot block.
bool solve_selection_kkt(const BlockTridiag& hess, const Eigen::VectorXd& lin,
                         const std::vector<StageActiveSet>& act, Eigen::VectorXd& xr,
                         std::vector<Eigen::VectorXd>& duals) {
    const int T = hess.stages();
    std::vector<Eigen::MatrixXd> diag(static_cast<size_t>(T));
    std::vector<Eigen::VectorXd> rhs(static_cast<size_t>(T));
    std::vector<int> bsize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        const int m = act[static_cast<size_t>(t)].count;
        const int n = 3 + m;
        bsize[static_cast<size_t>(t)] = n;
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
        D.topLeftCorner(3, 3) = hess.diag[static_cast<size_t>(t)];
        for (int q = 0; q < m; ++q) {
            D.block(3 + q, 0, 1, 3) = act[static_cast<size_t>(t)].c.row(q);
            D.block(0, 3 + q, 3, 1) = act[static_cast<size_t>(t)].c.row(q).transpose();
        }
        diag[static_cast<size_t>(t)] = D;
        Eigen::VectorXd b(n);
        b.head(3) = -lin.segment<3>(3 * t);
        for (int q = 0; q < m; ++q) b[3 + q] = act[static_cast<size_t>(t)].d[q];
        rhs[static_cast<size_t>(t)] = b;
    }

    // Block Thomas elimination; the stage-to-stage coupling comes only from
    // the Hessian's upper blocks (the x part of each stage variable).
    std::vector<Eigen::MatrixXd> carry(static_cast<size_t>(T));  // W_t = D_t^-1 U_t
    std::vector<Eigen::VectorXd> z(static_cast<size_t>(T));      // z_t = D_t^-1 b_t
    for (int t = 0; t < T; ++t) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(diag[static_cast<size_t>(t)]);
        if (lu.rank() < bsize[static_cast<size_t>(t)]) return false;
        z[static_cast<size_t>(t)] = lu.solve(rhs[static_cast<size_t>(t)]);
        if (t + 1 < T) {
            Eigen::MatrixXd U = Eigen::MatrixXd::Zero(bsize[static_cast<size_t>(t)],
                                                      bsize[static_cast<size_t>(t + 1)]);
            U.topLeftCorner(3, 3) = hess.upper[static_cast<size_t>(t)];
            Eigen::MatrixXd L = Eigen::MatrixXd::Zero(bsize[static_cast<size_t>(t + 1)],
                                                      bsize[static_cast<size_t>(t)]);
            L.topLeftCorner(3, 3) = hess.upper[static_cast<size_t>(t)].transpose();
            carry[static_cast<size_t>(t)] = lu.solve(U);
            diag[static_cast<size_t>(t + 1)] -= L * carry[static_cast<size_t>(t)];
            rhs[static_cast<size_t>(t + 1)] -= L * z[static_cast<size_t>(t)];
        }
    }
    std::vector<Eigen::VectorXd> u(static_cast<size_t>(T));
    for (int t = T - 1; t >= 0; --t) {
        u[static_cast<size_t>(t)] = z[static_cast<size_t>(t)];
        if (t + 1 < T)
            u[static_cast<size_t>(t)] -=
                carry[static_cast<size_t>(t)] * u[static_cast<size_t>(t + 1)];
    }
    xr.resize(3 * T);
    duals.assign(static_cast<size_t>(T), Eigen::VectorXd());
    for (int t = 0; t < T; ++t) {
        xr.segment<3>(3 * t) = u[static_cast<size_t>(t)].head(3);
        duals[static_cast<size_t>(t)] =
            u[static_cast<size_t>(t)].tail(bsize[static_cast<size_t>(t)] - 3);
    }
    return true;
}

// Active-set refinement seeded by the rows tight at the projected-gradient
// point: solve the selection as equalities, drop the worst negative-dual row,
// add the worst violated row, repeat a few rounds. Returns true and
// overwrites x when a verified KKT point of the inequality problem emerges.
bool refine_active_set(const BlockTridiag& hess, const Eigen::VectorXd& lin,
                       const LocalFeasibleSet& feas, const std::vector<FlatRow>& rows,
                       const Eigen::VectorXd& probe, Eigen::VectorXd& x) {
    (void)feas;
    const int T = hess.stages();
    std::vector<std::vector<int>> sel(static_cast<size_t>(T));
    for (int k = 0; k < static_cast<int>(rows.size()); ++k) {
        const auto& r = rows[static_cast<size_t>(k)];
        const double v = r.c.dot(probe.segment<3>(3 * r.stage)) - r.d;
        if (r.equality || v > -1e-7) sel[static_cast<size_t>(r.stage)].push_back(k);
    }

    const bool dbg = std::getenv("HVACOPT_QP_DEBUG") != nullptr;
    Eigen::VectorXd xr;
    std::vector<Eigen::VectorXd> duals;
    for (int round = 0; round < 16; ++round) {
        // Reduce each stage's selection to an independent subset.
        std::vector<StageActiveSet> act(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) {
            auto& a = act[static_cast<size_t>(t)];
            for (int k : sel[static_cast<size_t>(t)]) {
                if (a.count == 3) break;
                const auto& r = rows[static_cast<size_t>(k)];
                Eigen::Vector3d resid = r.c;
                for (int q = 0; q < a.count; ++q) {
                    const Eigen::Vector3d qv = a.q.row(q);
                    resid -= qv * qv.dot(resid);
                }
                if (resid.norm() < 1e-8 * r.c.norm()) continue;
                a.c.row(a.count) = r.c;
                a.q.row(a.count) = resid.normalized();
                a.d[a.count] = r.d;
                a.source[a.count] = k;
                ++a.count;
            }
        }
        if (!solve_selection_kkt(hess, lin, act, xr, duals)) {
            if (dbg) std::fprintf(stderr, "refine r%d: kkt singular\n", round);
            return false;
        }

        // Drop every active inequality with a meaningfully negative
        // multiplier, then add every violated row; accept when both lists
        // come up empty.
        int dropped = 0;
        for (int t = 0; t < T; ++t) {
            const auto& a = act[static_cast<size_t>(t)];
            for (int q = 0; q < a.count; ++q) {
                const auto& r = rows[static_cast<size_t>(a.source[q])];
                if (!r.equality && duals[static_cast<size_t>(t)][q] < -1e-7) {
                    auto& list = sel[static_cast<size_t>(t)];
                    list.erase(std::find(list.begin(), list.end(), a.source[q]));
                    ++dropped;
                }
            }
        }
        if (dropped > 0) {
            if (dbg) std::fprintf(stderr, "refine r%d: dropped %d\n", round, dropped);
            continue;
        }
        int added = 0;
        for (int k = 0; k < static_cast<int>(rows.size()); ++k) {
            const auto& r = rows[static_cast<size_t>(k)];
            const double v = r.c.dot(xr.segment<3>(3 * r.stage)) - r.d;
            if ((r.equality ? std::abs(v) : v) <= 1e-8) continue;
            auto& list = sel[static_cast<size_t>(r.stage)];
            if (std::find(list.begin(), list.end(), k) == list.end()) {
                list.push_back(k);
                ++added;
            }
        }
        if (added > 0) {
            if (dbg) std::fprintf(stderr, "refine r%d: added %d\n", round, added);
            continue;
        }

        const auto value = [&](const Eigen::VectorXd& v) {
            return 0.5 * v.dot(hess.multiply(v)) + lin.dot(v);
        };
        if (value(xr) > value(x) + 1e-9 * (1.0 + std::abs(value(x)))) {
            if (dbg) std::fprintf(stderr, "refine r%d: value worse %.12g vs %.12g\n",
                                  round, value(xr), value(x));
            return false;
        }
        if (dbg) std::fprintf(stderr, "refine r%d: accept\n", round);
        x = xr;
        return true;
    }
    if (dbg) std::fprintf(stderr, "refine: rounds exhausted\n");
    return false;
}

}  // namespace

QpResult minimize_banded_qp(const BlockTridiag& hess, double lipschitz,
                            const Eigen::VectorXd& lin, const LocalFeasibleSet& feas,
                            const Eigen::VectorXd& warm, double tol, int max_iters) {
    const double step = 1.0 / std::max(lipschitz, 1e-12);
    const std::vector<FlatRow> rows = flatten_rows(feas);
    QpResult res;
    Eigen::VectorXd x = feas.project(warm);
    Eigen::VectorXd x_prev = x;
    double momentum = 1.0;
    double f_prev = 0.5 * x.dot(hess.multiply(x)) + lin.dot(x);
    int next_refine = 30;  // accelerated steps before the first exact attempt

    for (int k = 0; k < max_iters; ++k) {
        // Optimality measure at the current (feasible) point.
        const Eigen::VectorXd grad_x = hess.multiply(x) + lin;
        const Eigen::VectorXd x_half = feas.project(x - step * grad_x);
        res.projected_gradient_norm = (x - x_half).norm() / step;
        if (res.projected_gradient_norm <= tol) {
            res.x = x;
            res.iterations = k;
            res.converged = true;
            return res;
        }

        // The gradient steps identify the active rows; a verified
        // equality-constrained solve on them finishes exactly.
        if (k >= next_refine) {
            next_refine = k + 25;
            Eigen::VectorXd xr = x;
            if (refine_active_set(hess, lin, feas, rows, x_half, xr)) {
                const Eigen::VectorXd gr = hess.multiply(xr) + lin;
                const Eigen::VectorXd half = feas.project(xr - step * gr);
                const double pg = (xr - half).norm() / step;
                if (pg <= tol) {
                    res.x = xr;
                    res.iterations = k;
                    res.projected_gradient_norm = pg;
                    res.converged = true;
                    return res;
                }
                const double fr = 0.5 * xr.dot(hess.multiply(xr)) + lin.dot(xr);
                if (fr < f_prev) {
                    x = xr;
                    x_prev = xr;
                    momentum = 1.0;
                    f_prev = fr;
                    continue;
                }
            }
        }

        const double momentum_next =
            0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = (momentum - 1.0) / momentum_next;
        Eigen::VectorXd y = x + beta * (x - x_prev);
        const Eigen::VectorXd grad_y = hess.multiply(y) + lin;
        Eigen::VectorXd x_next = feas.project(y - step * grad_y);

        const double f_next = 0.5 * x_next.dot(hess.multiply(x_next)) + lin.dot(x_next);
        if (f_next > f_prev) {
            // Function-value restart: drop momentum, take the plain step.
            x_next = x_half;
            momentum = 1.0;
            f_prev = 0.5 * x_next.dot(hess.multiply(x_next)) + lin.dot(x_next);
        } else {
            momentum = momentum_next;
            f_prev = f_next;
        }
        x_prev = x;
        x = x_next;
        res.iterations = k + 1;
    }

    Eigen::VectorXd xr = x;
    if (refine_active_set(hess, lin, feas, rows, x, xr)) x = xr;
    const Eigen::VectorXd grad_x = hess.multiply(x) + lin;
    const Eigen::VectorXd x_half = feas.project(x - step * grad_x);
    res.projected_gradient_norm = (x - x_half).norm() / step;
    res.x = x;
    res.converged = res.projected_gradient_norm <= tol;
    return res;
}

}  // namespace hvacopt
