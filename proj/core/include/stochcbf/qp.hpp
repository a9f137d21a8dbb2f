#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stochcbf/cbf.hpp"

namespace stochcbf {

/// minimize 1/2 ||u - u_nom||^2  subject to the hard rows, plus soft rows
/// whose violation delta is charged 1/2 soft_weight delta^2.
/// At most 16 inputs.
struct QpProblem {
    Eigen::VectorXd u_nom;
    std::vector<AffineInputConstraint> constraints;
    std::vector<AffineInputConstraint> soft_constraints;
    double soft_weight = 1e3;
};

enum class QpStatus { Optimal, Infeasible, Relaxed };

const char* to_string(QpStatus status);

struct QpResult {
    QpStatus status = QpStatus::Optimal;
    /// Optimal: the minimizer. Relaxed: projection of u_nom onto the hard rows
    /// loosened by the least-squares violation. Infeasible: the
    /// least-violation point itself.
    Eigen::VectorXd u;
    /// Rows in the final working set; soft rows are numbered after the hard rows.
    std::vector<int> active_set;
    /// Sum of hard-row violations at the least-violation point (0 if feasible).
    double slack = 0.0;
    /// max |(u - u_nom) - sum_i lambda_i a_i| over the final working set.
    double kkt_residual = 0.0;
    int iterations = 0;
};

struct QpOptions {
    /// Relaxed instead of Infeasible when the hard rows have no common point.
    bool relax_on_infeasible = true;
    /// Phase-1 total violation above this means infeasible.
    double infeasibility_tol = 1e-8;
};

/// Working set carried between consecutive solves of related problems.
struct QpWarmStart {
    std::vector<int> active_set;
};

/// Primal active-set solve. Phase 1 finds the least-squares violation
/// s* = argmin ||s|| s.t. A u + s >= b by projecting b onto
/// {lambda >= 0, A^T lambda = 0} (the dual of that problem, solved with the
/// same active-set routine from lambda = 0); the hard rows are feasible iff
/// s* = 0. Phase 2 runs the primal active-set method from the Phase-1 point,
/// or from the warm-start working set when its equality-constrained solution
/// is already feasible. Ties in entering/leaving rows go to the lowest index.
///
/// Throws DimensionMismatch when a row's length differs from u_nom.
QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {}, QpWarmStart* warm = nullptr);

namespace detail {

/// minimize 1/2 ||z - target||^2 s.t. E z = e (rows linearly independent)
/// and C z >= d, starting from a point feasible for both. Exposed for tests.
struct ProjectionResult {
    Eigen::VectorXd z;
    std::vector<int> working_set;
    Eigen::VectorXd equality_multipliers;
    Eigen::VectorXd inequality_multipliers;  // aligned with working_set
    int iterations = 0;
};

ProjectionResult project_active_set(const Eigen::VectorXd& target, const Eigen::MatrixXd& E,
                                    const Eigen::VectorXd& e, const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                                    Eigen::VectorXd start, std::vector<int> working_set);

}  // namespace detail

}  // namespace stochcbf
