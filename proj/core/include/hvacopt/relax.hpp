#ifndef HVACOPT_RELAX_HPP
#define HVACOPT_RELAX_HPP

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <vector>

#include "hvacopt/model.hpp"

namespace hvacopt {

/// One zone agent's decision trajectory, stored stacked per stage as
/// (temp, flow, cooling): x = (T_0, m_0, X_0, T_1, m_1, X_1, ...).
class AgentTrajectory {
public:
    AgentTrajectory() = default;
    explicit AgentTrajectory(int horizon) : x_(Eigen::VectorXd::Zero(3 * horizon)) {}
    explicit AgentTrajectory(Eigen::VectorXd stacked) : x_(std::move(stacked)) {}

    int horizon() const { return static_cast<int>(x_.size()) / 3; }
    double temp(int t) const { return x_[3 * t]; }
    double flow(int t) const { return x_[3 * t + 1]; }
    double cooling(int t) const { return x_[3 * t + 2]; }
    double& temp(int t) { return x_[3 * t]; }
    double& flow(int t) { return x_[3 * t + 1]; }
    double& cooling(int t) { return x_[3 * t + 2]; }

    const Eigen::VectorXd& stacked() const { return x_; }
    Eigen::VectorXd& stacked() { return x_; }

private:
    Eigen::VectorXd x_;
};

/// The coordinator agent's trajectory: total AHU flow per stage.
struct CoordinatorTrajectory {
    Eigen::VectorXd y_total;
};

/// Box over which a bilinear product flow*(temp - t_ref) is relaxed.
struct McCormickBox {
    double m_lo, m_hi;
    double t_lo, t_hi;
    double t_ref;
};

/// Affine inequality coef_t*T + coef_m*m + coef_x*X <= rhs.
struct AffineRow {
    double coef_t, coef_m, coef_x, rhs;
    double eval(double temp, double flow, double cooling) const {
        return coef_t * temp + coef_m * flow + coef_x * cooling - rhs;
    }
};

/// The four McCormick envelope rows for X = m*(T - t_ref) over the box:
/// two lower bounds (indices 0,1) and two upper bounds (indices 2,3).
/// Throws ModelError on a degenerate box.
std::array<AffineRow, 4> mccormick_constraints(const McCormickBox& box);

/// Per-stage admissible set of one zone agent: bounds on temperature and
/// flow plus the four envelope rows. At a pinned stage the temperature
/// interval is a single point (the initial condition) and the envelope
/// collapses to the exact product X = m*(t - t_ref).
struct StageConstraints {
    double t_lo, t_hi;
    double m_lo, m_hi;
    double t_ref = 0.0;
    bool temp_pinned = false;
    std::array<AffineRow, 4> envelope;

    bool contains(double temp, double flow, double cooling, double tol) const;
};

/// The polytope of admissible trajectories of one zone, stage by stage.
struct LocalFeasibleSet {
    std::vector<StageConstraints> stages;

    bool contains(const AgentTrajectory& x, double tol) const;
    /// Euclidean projection (exact, stage separable).
    Eigen::VectorXd project(const Eigen::VectorXd& x) const;
};

/// Builds the admissible set of a zone: stage 0 has the temperature pinned
/// to the initial condition, later stages carry the comfort band box and
/// McCormick rows with the per-stage supply setpoint as reference.
LocalFeasibleSet local_feasible_set(const ZoneParams& zone,
                                    const Eigen::VectorXd& t_supply);

/// Stacked per-agent constraint operators for the relaxed problem:
/// dynamics equalities  A_self x_i + sum_j A_neigh x_j = b_i   (T-1 rows each)
/// flow coupling        sum_i m_i - y + s1 = 0                 (T rows)
/// AHU cap              sum_i m_i - cap + s2 = 0               (T rows)
/// Products are computed structurally; dense forms exist for tests/debug.
class StackedSystem {
public:
    static StackedSystem assemble(const DiscreteDynamics& dyn, const BuildingModel& model);

    int horizon() const { return horizon_; }
    int zone_count() const { return zones_; }
    double total_flow_max() const { return cap_; }

    /// Dynamics residual of zone row i at a full primal point.
    Eigen::VectorXd dyn_residual(int i, const std::vector<AgentTrajectory>& agents) const;

    /// y = block(row_zone, col_zone) * x where x is a stacked agent vector.
    /// col_zone must be row_zone or one of its neighbors.
    Eigen::VectorXd apply_dyn_block(int row_zone, int col_zone,
                                    const Eigen::VectorXd& x) const;
    /// x += alpha * block(row_zone, col_zone)^T * r.
    void add_dyn_block_transpose(int row_zone, int col_zone,
                                 const Eigen::VectorXd& r, double alpha,
                                 Eigen::VectorXd& x) const;

    /// Per-stage sum of zone flows (the selector rows applied to all zones).
    Eigen::VectorXd flow_sum(const std::vector<AgentTrajectory>& agents) const;

    const Eigen::VectorXd& rhs(int i) const { return b_[static_cast<size_t>(i)]; }
    const std::vector<std::pair<int, double>>& dyn_neighbors(int i) const {
        return neighbors_[static_cast<size_t>(i)];
    }

    double a_self(int i) const { return a_self_[i]; }
    double c_self(int i) const { return c_self_[i]; }

    Eigen::MatrixXd dense_self(int i) const;
    Eigen::MatrixXd dense_neighbor(int i, int j) const;
    Eigen::MatrixXd dense_selector() const;        ///< B^i, T x 3T (same for all zones)
    Eigen::MatrixXd dense_coordinator() const;     ///< B^0 = -I, T x T
    Eigen::VectorXd cap_vector() const;            ///< c_d

    /// Plain-text triplet listing of every block, for diffing by hand.
    void dump(std::ostream& os) const;

private:
    int horizon_ = 0;
    int zones_ = 0;
    double cap_ = 0.0;
    Eigen::VectorXd a_self_, c_self_;
    std::vector<std::vector<std::pair<int, double>>> neighbors_;
    std::vector<Eigen::VectorXd> b_;
};

/// Stage coefficients of the relaxed objective, split across agents:
/// zones pay x_cool_coef[t] * X_t, the coordinator pays
/// y_coef[t] * Y_t + y_cubic_coef[t] * Y_t^3.
struct AgentObjective {
    Eigen::VectorXd x_cool_coef;
    Eigen::VectorXd y_coef;
    Eigen::VectorXd y_cubic_coef;

    double zone_cost(const AgentTrajectory& x) const;
    double coordinator_cost(const Eigen::VectorXd& y) const;
    double total(const std::vector<AgentTrajectory>& agents, const Eigen::VectorXd& y) const;
};

AgentObjective relaxed_objective(const BuildingModel& model, const ExogenousSeries& exo);

}  // namespace hvacopt

#endif
