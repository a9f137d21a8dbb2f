#include "stochcbf/cbf.hpp"

#include <cmath>

#include "stochcbf/errors.hpp"

namespace stochcbf {

AffineInputConstraint AffineInputConstraint::as_greater_equal() const {
    if (sense == Sense::GreaterEqual) return *this;
    return {-a, -b, Sense::GreaterEqual};
}

double AffineInputConstraint::residual(const Eigen::VectorXd& u) const {
    if (u.size() != a.size()) throw DimensionMismatch("AffineInputConstraint: input has wrong size");
    const double au = a.dot(u);
    return sense == Sense::GreaterEqual ? au - b : b - au;
}

bool AffineInputConstraint::is_finite() const { return a.allFinite() && std::isfinite(b); }

double ito_trace(const Eigen::MatrixXd& S, const Eigen::MatrixXd& H) {
    if (S.size() == 0) return 0.0;
    return (S.transpose() * H * S).trace();
}

double ito_drift(const ControlAffineSystem& sys, const SafetyFunction& h, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& u) {
    return h.grad(x).dot(sys.drift(x, u)) + 0.5 * ito_trace(sys.sigma(x), h.hess(x));
}

AffineInputConstraint zcbf_constraint(const ControlAffineSystem& sys, const SafetyFunction& h,
                                      const Eigen::VectorXd& x, double kappa) {
    const Eigen::VectorXd dh = h.grad(x);
    AffineInputConstraint row;
    row.sense = Sense::GreaterEqual;
    row.a = sys.g(x).transpose() * dh;
    row.b = -dh.dot(sys.f(x)) - 0.5 * ito_trace(sys.sigma(x), h.hess(x)) - kappa * h.value(x);
    return row;
}

AffineInputConstraint rcbf_constraint(const ControlAffineSystem& sys, const ReciprocalBarrier& B,
                                      const ClassK& alpha3, const Eigen::VectorXd& x) {
    const double hv = B.h().value(x);
    if (!(hv > 0.0)) throw BoundaryError("rcbf_constraint: h(x) <= 0");
    const Eigen::VectorXd dB = B.grad(x);
    AffineInputConstraint row;
    row.sense = Sense::LessEqual;
    row.a = sys.g(x).transpose() * dB;
    row.b = alpha3(hv) - dB.dot(sys.f(x)) - 0.5 * ito_trace(sys.sigma(x), B.hess(x));
    return row;
}

AffineInputConstraint clf_constraint(const ControlAffineSystem& sys, const SafetyFunction& V,
                                     const Eigen::VectorXd& x) {
    const Eigen::VectorXd dV = V.grad(x);
    AffineInputConstraint row;
    row.sense = Sense::LessEqual;
    row.a = sys.g(x).transpose() * dV;
    row.b = -dV.dot(sys.f(x)) - ito_trace(sys.sigma(x), V.hess(x));
    return row;
}

}  // namespace stochcbf
