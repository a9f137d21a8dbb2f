#pragma once

#include <Eigen/Dense>

#include "stochcbf/safety.hpp"
#include "stochcbf/sde.hpp"

namespace stochcbf {

enum class Sense { GreaterEqual, LessEqual };

/// Half-space a.u >= b or a.u <= b in input space.
struct AffineInputConstraint {
    Eigen::VectorXd a;
    double b = 0.0;
    Sense sense = Sense::GreaterEqual;

    /// Same half-space written as a.u >= b.
    AffineInputConstraint as_greater_equal() const;
    /// Signed distance to violation in units of a.u; >= 0 iff satisfied.
    double residual(const Eigen::VectorXd& u) const;
    bool satisfied_by(const Eigen::VectorXd& u, double tol = 0.0) const { return residual(u) >= -tol; }
    bool is_finite() const;
};

/// tr(S^T H S)
double ito_trace(const Eigen::MatrixXd& S, const Eigen::MatrixXd& H);

/// Ito drift of h along the closed loop:
/// dh/dx (f + g u) + 1/2 tr(sigma^T d2h/dx2 sigma).
double ito_drift(const ControlAffineSystem& sys, const SafetyFunction& h, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& u);

/// Zero-CBF condition  dh/dx g u >= -dh/dx f - 1/2 tr(sigma^T H sigma) - kappa h.
/// kappa = 1 reproduces the textbook right-hand side -h(x).
AffineInputConstraint zcbf_constraint(const ControlAffineSystem& sys, const SafetyFunction& h,
                                      const Eigen::VectorXd& x, double kappa = 1.0);

/// Reciprocal-CBF condition
///   dB/dx g u <= alpha3(h) - dB/dx f - 1/2 tr(sigma^T d2B/dx2 sigma).
/// Throws BoundaryError when h(x) <= 0.
AffineInputConstraint rcbf_constraint(const ControlAffineSystem& sys, const ReciprocalBarrier& B,
                                      const ClassK& alpha3, const Eigen::VectorXd& x);

/// Stochastic CLF condition  dV/dx g u <= -dV/dx f - tr(sigma^T d2V/dx2 sigma).
/// The trace carries no 1/2 factor.
AffineInputConstraint clf_constraint(const ControlAffineSystem& sys, const SafetyFunction& V,
                                     const Eigen::VectorXd& x);

}  // namespace stochcbf
