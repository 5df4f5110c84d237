#ifndef HVACOPT_STAGE_QP_HPP
#define HVACOPT_STAGE_QP_HPP

#include <Eigen/Dense>
#include <vector>

#include "hvacopt/relax.hpp"

namespace hvacopt {

/// Symmetric block-tridiagonal matrix with 3x3 blocks, the shape of every
/// zone subproblem Hessian (dynamics rows couple adjacent stages only).
struct BlockTridiag {
    std::vector<Eigen::Matrix3d> diag;   ///< T blocks
    std::vector<Eigen::Matrix3d> upper;  ///< T-1 blocks, block (t, t+1)

    int stages() const { return static_cast<int>(diag.size()); }
    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd dense() const;
    /// Upper bound on the largest eigenvalue (power iteration with a
    /// Gershgorin fallback).
    double spectral_upper_bound() const;
};

struct QpResult {
    Eigen::VectorXd x;
    double projected_gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimizes 0.5 x'Hx + g'x over a per-stage polytope with accelerated
/// projected gradient (fixed step 1/L, function-value restart), then tries an
/// active-set refinement: the rows tight at the accelerated solution are
/// solved as equalities and the result kept when it passes a KKT check.
/// tol is on the norm of the projected gradient step.
QpResult minimize_banded_qp(const BlockTridiag& hess, double lipschitz,
                            const Eigen::VectorXd& lin, const LocalFeasibleSet& feas,
                            const Eigen::VectorXd& warm, double tol, int max_iters);

}  // namespace hvacopt

#endif
