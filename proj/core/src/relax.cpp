#include "hvacopt/relax.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "hvacopt/errors.hpp"

namespace hvacopt {

namespace {

// The four envelope rows of X = m*(T - t_ref) over [m_lo,m_hi] x [t_lo,t_hi],
// written as coef.(T,m,X) <= rhs. Valid for t_lo == t_hi, where all four
// collapse to the exact product constraint.
std::array<AffineRow, 4> envelope_rows(double m_lo, double m_hi, double t_lo,
                                       double t_hi, double t_ref) {
    std::array<AffineRow, 4> rows;
    // X >= m_lo (T - t_ref) + m (t_lo - t_ref) - m_lo (t_lo - t_ref)
    rows[0] = {m_lo, t_lo - t_ref, -1.0, m_lo * t_lo};
    // X >= m_hi (T - t_ref) + m (t_hi - t_ref) - m_hi (t_hi - t_ref)
    rows[1] = {m_hi, t_hi - t_ref, -1.0, m_hi * t_hi};
    // X <= m (t_hi - t_ref) + m_lo (T - t_ref) - m_lo (t_hi - t_ref)
    rows[2] = {-m_lo, -(t_hi - t_ref), 1.0, -m_lo * t_hi};
    // X <= m_hi (T - t_ref) + m (t_lo - t_ref) - m_hi (t_lo - t_ref)
    rows[3] = {-m_hi, -(t_lo - t_ref), 1.0, -m_hi * t_lo};
    return rows;
}

constexpr double kProjFeasTol = 1e-9;
constexpr double kProjDualTol = -1e-10;

struct Row3 {
    Eigen::Vector3d c;
    double d;
};

// Exact Euclidean projection onto {x in R^3 : c_k . x <= d_k} by KKT active-set
// enumeration; the normal cone at the projection is spanned by at most three
// of the active rows.
Eigen::Vector3d project_polytope3(const Eigen::Vector3d& z, const Row3* rows, int n) {
    bool feasible = true;
    for (int k = 0; k < n; ++k) {
        if (rows[k].c.dot(z) - rows[k].d > 0.0) {
            feasible = false;
            break;
        }
    }
    if (feasible) return z;

    auto all_feasible = [&](const Eigen::Vector3d& x) {
        for (int k = 0; k < n; ++k)
            if (rows[k].c.dot(x) - rows[k].d > kProjFeasTol) return false;
        return true;
    };

    bool have_fallback = false;
    double best_dist = 0.0;
    Eigen::Vector3d best = z;
    auto consider = [&](const Eigen::Vector3d& x) {
        const double dist = (x - z).squaredNorm();
        if (!have_fallback || dist < best_dist) {
            have_fallback = true;
            best_dist = dist;
            best = x;
        }
    };

    // Single active row: the dual is positive exactly for violated rows.
    for (int k = 0; k < n; ++k) {
        const double viol = rows[k].c.dot(z) - rows[k].d;
        if (viol <= 0.0) continue;
        const Eigen::Vector3d x = z - (viol / rows[k].c.squaredNorm()) * rows[k].c;
        if (all_feasible(x)) return x;
    }

    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            Eigen::Matrix2d gram;
            gram(0, 0) = rows[a].c.squaredNorm();
            gram(1, 1) = rows[b].c.squaredNorm();
            gram(0, 1) = gram(1, 0) = rows[a].c.dot(rows[b].c);
            const double det = gram.determinant();
            if (std::abs(det) < 1e-12 * gram(0, 0) * gram(1, 1)) continue;
            Eigen::Vector2d viol(rows[a].c.dot(z) - rows[a].d, rows[b].c.dot(z) - rows[b].d);
            Eigen::Vector2d lam = gram.inverse() * viol;
            if (lam[0] < kProjDualTol || lam[1] < kProjDualTol) continue;
            const Eigen::Vector3d x = z - lam[0] * rows[a].c - lam[1] * rows[b].c;
            if (all_feasible(x)) return x;
        }
    }

    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            for (int c = b + 1; c < n; ++c) {
                Eigen::Matrix3d gram;
                const Eigen::Vector3d* cs[3] = {&rows[a].c, &rows[b].c, &rows[c].c};
                for (int p = 0; p < 3; ++p)
                    for (int q = 0; q < 3; ++q) gram(p, q) = cs[p]->dot(*cs[q]);
                Eigen::Vector3d viol(rows[a].c.dot(z) - rows[a].d,
                                     rows[b].c.dot(z) - rows[b].d,
                                     rows[c].c.dot(z) - rows[c].d);
                Eigen::FullPivLU<Eigen::Matrix3d> lu(gram);
                if (!lu.isInvertible()) continue;
                Eigen::Vector3d lam = lu.solve(viol);
                if (lam.minCoeff() < kProjDualTol) continue;
                const Eigen::Vector3d x =
                    z - lam[0] * rows[a].c - lam[1] * rows[b].c - lam[2] * rows[c].c;
                if (all_feasible(x)) consider(x);
            }
        }
    }
    if (have_fallback) return best;
    throw SolveError("stage polytope projection failed; set may be empty");
}

}  // namespace

std::array<AffineRow, 4> mccormick_constraints(const McCormickBox& box) {
    if (!(box.m_lo < box.m_hi)) throw ModelError("McCormick box: need m_lo < m_hi");
    if (!(box.t_lo < box.t_hi)) throw ModelError("McCormick box: need t_lo < t_hi");
    if (!(box.t_ref < box.t_lo)) throw ModelError("McCormick box: need t_ref < t_lo");
    return envelope_rows(box.m_lo, box.m_hi, box.t_lo, box.t_hi, box.t_ref);
}

bool StageConstraints::contains(double temp, double flow, double cooling,
                                double tol) const {
    if (temp < t_lo - tol || temp > t_hi + tol) return false;
    if (flow < m_lo - tol || flow > m_hi + tol) return false;
    for (const auto& row : envelope)
        if (row.eval(temp, flow, cooling) > tol) return false;
    return true;
}

bool LocalFeasibleSet::contains(const AgentTrajectory& x, double tol) const {
    const int T = static_cast<int>(stages.size());
    if (x.horizon() != T) return false;
    for (int t = 0; t < T; ++t)
        if (!stages[static_cast<size_t>(t)].contains(x.temp(t), x.flow(t), x.cooling(t), tol))
            return false;
    return true;
}

Eigen::VectorXd LocalFeasibleSet::project(const Eigen::VectorXd& x) const {
    const int T = static_cast<int>(stages.size());
    Eigen::VectorXd out(x.size());
    for (int t = 0; t < T; ++t) {
        const auto& st = stages[static_cast<size_t>(t)];
        const Eigen::Vector3d z = x.segment<3>(3 * t);
        if (st.temp_pinned) {
            // Segment {(t_pin, m, c m) : m in [m_lo, m_hi]} with c = t_pin - t_ref.
            const double c = st.t_lo - st.t_ref;
            double m = (z[1] + c * z[2]) / (1.0 + c * c);
            m = std::min(std::max(m, st.m_lo), st.m_hi);
            out.segment<3>(3 * t) = Eigen::Vector3d(st.t_lo, m, c * m);
            continue;
        }
        Row3 rows[8];
        rows[0] = {{-1, 0, 0}, -st.t_lo};
        rows[1] = {{1, 0, 0}, st.t_hi};
        rows[2] = {{0, -1, 0}, -st.m_lo};
        rows[3] = {{0, 1, 0}, st.m_hi};
        for (int k = 0; k < 4; ++k) {
            const AffineRow& e = st.envelope[static_cast<size_t>(k)];
            rows[4 + k] = {{e.coef_t, e.coef_m, e.coef_x}, e.rhs};
        }
        out.segment<3>(3 * t) = project_polytope3(z, rows, 8);
    }
    return out;
}

LocalFeasibleSet local_feasible_set(const ZoneParams& zone,
                                    const Eigen::VectorXd& t_supply) {
    if (!(zone.t_min < zone.t_max))
        throw ModelError("local feasible set: empty comfort band");
    if (!(zone.m_min < zone.m_max))
        throw ModelError("local feasible set: empty flow range");
    const int T = static_cast<int>(t_supply.size());
    LocalFeasibleSet set;
    set.stages.reserve(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        StageConstraints st;
        st.m_lo = zone.m_min;
        st.m_hi = zone.m_max;
        st.t_ref = t_supply[t];
        if (t == 0) {
            // Initial temperature is data, not a decision: pin it and use the
            // exact product constraint, which the envelope rows collapse to.
            st.t_lo = st.t_hi = zone.t_init;
            st.temp_pinned = true;
        } else {
            st.t_lo = zone.t_min;
            st.t_hi = zone.t_max;
            if (!(t_supply[t] < zone.t_min))
                throw ModelError("local feasible set: setpoint above comfort band");
        }
        st.envelope = envelope_rows(st.m_lo, st.m_hi, st.t_lo, st.t_hi, t_supply[t]);
        set.stages.push_back(st);
    }
    return set;
}

StackedSystem StackedSystem::assemble(const DiscreteDynamics& dyn,
                                      const BuildingModel& model) {
    StackedSystem sys;
    sys.horizon_ = model.horizon();
    sys.zones_ = model.zone_count();
    sys.cap_ = model.ahu().total_flow_max;
    if (dyn.a_self.size() != sys.zones_ || dyn.d_const.rows() != sys.zones_ ||
        dyn.d_const.cols() != sys.horizon_)
        throw ModelError("stacked assembly: dynamics inconsistent with model");
    sys.a_self_ = dyn.a_self;
    sys.c_self_ = dyn.c_self;
    sys.neighbors_ = dyn.a_neighbor;
    sys.b_.resize(static_cast<size_t>(sys.zones_));
    for (int i = 0; i < sys.zones_; ++i) {
        Eigen::VectorXd b(sys.horizon_ - 1);
        for (int t = 0; t + 1 < sys.horizon_; ++t) b[t] = -dyn.d_const(i, t);
        sys.b_[static_cast<size_t>(i)] = std::move(b);
    }
    return sys;
}

Eigen::VectorXd StackedSystem::dyn_residual(int i,
                                            const std::vector<AgentTrajectory>& agents) const {
    const auto& xi = agents[static_cast<size_t>(i)];
    Eigen::VectorXd r(horizon_ - 1);
    for (int t = 0; t + 1 < horizon_; ++t) {
        double v = a_self_[i] * xi.temp(t) + c_self_[i] * xi.cooling(t) - xi.temp(t + 1);
        for (const auto& [j, a_ij] : neighbors_[static_cast<size_t>(i)])
            v += a_ij * agents[static_cast<size_t>(j)].temp(t);
        r[t] = v - b_[static_cast<size_t>(i)][t];
    }
    return r;
}

Eigen::VectorXd StackedSystem::apply_dyn_block(int row_zone, int col_zone,
                                               const Eigen::VectorXd& x) const {
    Eigen::VectorXd r(horizon_ - 1);
    if (row_zone == col_zone) {
        for (int t = 0; t + 1 < horizon_; ++t)
            r[t] = a_self_[row_zone] * x[3 * t] + c_self_[row_zone] * x[3 * t + 2] -
                   x[3 * (t + 1)];
        return r;
    }
    for (const auto& [j, a_ij] : neighbors_[static_cast<size_t>(row_zone)]) {
        if (j == col_zone) {
            for (int t = 0; t + 1 < horizon_; ++t) r[t] = a_ij * x[3 * t];
            return r;
        }
    }
    throw SolveError("apply_dyn_block: zones are not coupled");
}

void StackedSystem::add_dyn_block_transpose(int row_zone, int col_zone,
                                            const Eigen::VectorXd& r, double alpha,
                                            Eigen::VectorXd& x) const {
    if (row_zone == col_zone) {
        for (int t = 0; t + 1 < horizon_; ++t) {
            x[3 * t] += alpha * a_self_[row_zone] * r[t];
            x[3 * t + 2] += alpha * c_self_[row_zone] * r[t];
            x[3 * (t + 1)] -= alpha * r[t];
        }
        return;
    }
    for (const auto& [j, a_ij] : neighbors_[static_cast<size_t>(row_zone)]) {
        if (j == col_zone) {
            for (int t = 0; t + 1 < horizon_; ++t) x[3 * t] += alpha * a_ij * r[t];
            return;
        }
    }
    throw SolveError("add_dyn_block_transpose: zones are not coupled");
}

Eigen::VectorXd StackedSystem::flow_sum(const std::vector<AgentTrajectory>& agents) const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(horizon_);
    for (int i = 0; i < zones_; ++i)
        for (int t = 0; t < horizon_; ++t) s[t] += agents[static_cast<size_t>(i)].flow(t);
    return s;
}

Eigen::MatrixXd StackedSystem::dense_self(int i) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(horizon_ - 1, 3 * horizon_);
    for (int t = 0; t + 1 < horizon_; ++t) {
        A(t, 3 * t) = a_self_[i];
        A(t, 3 * t + 2) = c_self_[i];
        A(t, 3 * (t + 1)) = -1.0;
    }
    return A;
}

Eigen::MatrixXd StackedSystem::dense_neighbor(int i, int j) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(horizon_ - 1, 3 * horizon_);
    for (const auto& [k, a_ik] : neighbors_[static_cast<size_t>(i)]) {
        if (k == j) {
            for (int t = 0; t + 1 < horizon_; ++t) A(t, 3 * t) = a_ik;
            return A;
        }
    }
    throw SolveError("dense_neighbor: zones are not coupled");
}

Eigen::MatrixXd StackedSystem::dense_selector() const {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(horizon_, 3 * horizon_);
    for (int t = 0; t < horizon_; ++t) B(t, 3 * t + 1) = 1.0;
    return B;
}

Eigen::MatrixXd StackedSystem::dense_coordinator() const {
    return -Eigen::MatrixXd::Identity(horizon_, horizon_);
}

Eigen::VectorXd StackedSystem::cap_vector() const {
    return Eigen::VectorXd::Constant(horizon_, cap_);
}

void StackedSystem::dump(std::ostream& os) const {
    auto triplets = [&os](const std::string& name, const Eigen::MatrixXd& m) {
        Eigen::Index nnz = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                if (m(r, c) != 0.0) ++nnz;
        os << name << " " << m.rows() << " " << m.cols() << " " << nnz << "\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                if (m(r, c) != 0.0) os << r + 1 << " " << c + 1 << " " << m(r, c) << "\n";
    };
    for (int i = 0; i < zones_; ++i) {
        triplets("A_self " + std::to_string(i), dense_self(i));
        for (const auto& [j, a_ij] : neighbors_[static_cast<size_t>(i)]) {
            (void)a_ij;
            triplets("A_neighbor " + std::to_string(i) + " " + std::to_string(j),
                     dense_neighbor(i, j));
        }
        os << "b " << i;
        const auto& bi = b_[static_cast<size_t>(i)];
        for (Eigen::Index t = 0; t < bi.size(); ++t) os << " " << bi[t];
        os << "\n";
    }
    triplets("B_zone", dense_selector());
    triplets("B_coordinator", dense_coordinator());
    os << "c_d";
    for (int t = 0; t < horizon_; ++t) os << " " << cap_;
    os << "\n";
}

double AgentObjective::zone_cost(const AgentTrajectory& x) const {
    double v = 0.0;
    for (int t = 0; t < x.horizon(); ++t) v += x_cool_coef[t] * x.cooling(t);
    return v;
}

double AgentObjective::coordinator_cost(const Eigen::VectorXd& y) const {
    double v = 0.0;
    for (Eigen::Index t = 0; t < y.size(); ++t)
        v += y_coef[t] * y[t] + y_cubic_coef[t] * y[t] * y[t] * y[t];
    return v;
}

double AgentObjective::total(const std::vector<AgentTrajectory>& agents,
                             const Eigen::VectorXd& y) const {
    double v = coordinator_cost(y);
    for (const auto& a : agents) v += zone_cost(a);
    return v;
}

AgentObjective relaxed_objective(const BuildingModel& model, const ExogenousSeries& exo) {
    const int T = model.horizon();
    const AhuParams& ahu = model.ahu();
    const double dt_h = model.dt_hours();
    AgentObjective obj;
    obj.x_cool_coef.resize(T);
    obj.y_coef.resize(T);
    obj.y_cubic_coef.resize(T);
    for (int t = 0; t < T; ++t) {
        const double base = exo.price[t] * dt_h;
        obj.x_cool_coef[t] =
            base * ahu.air_specific_heat * ahu.cop_reciprocal * ahu.return_air_fraction;
        obj.y_coef[t] = base * ahu.air_specific_heat * ahu.cop_reciprocal *
                        (1.0 - ahu.return_air_fraction) * (exo.t_out[t] - exo.t_supply[t]);
        obj.y_cubic_coef[t] = base * ahu.fan_coefficient;
    }
    return obj;
}

}  // namespace hvacopt
