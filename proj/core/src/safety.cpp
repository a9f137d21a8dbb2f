#include "stochcbf/safety.hpp"

#include <cmath>
#include <utility>

#include "stochcbf/errors.hpp"
#include "stochcbf/numdiff.hpp"

namespace stochcbf {

SafetyFunction::SafetyFunction(Value value, Gradient grad, Hessian hess)
    : value_(std::move(value)), grad_(std::move(grad)), hess_(std::move(hess)) {
    if (!value_) throw ConfigError("SafetyFunction: value evaluator is required");
}

Eigen::VectorXd SafetyFunction::grad(const Eigen::VectorXd& x) const {
    if (grad_) return grad_(x);
    return numdiff::gradient(value_, x);
}

Eigen::MatrixXd SafetyFunction::hess(const Eigen::VectorXd& x) const {
    if (hess_) return hess_(x);
    if (grad_) return numdiff::hessian_from_gradient(grad_, x);
    return numdiff::hessian(value_, x);
}

SafetyFunction SafetyFunction::shifted(double offset) const {
    Value v = [base = value_, offset](const Eigen::VectorXd& x) { return base(x) + offset; };
    return SafetyFunction(std::move(v), grad_, hess_);
}

SafetyFunction affine_safety(const Eigen::VectorXd& a, double b) {
    const Eigen::Index n = a.size();
    return SafetyFunction(
        [a, b](const Eigen::VectorXd& x) { return a.dot(x) - b; },
        [a](const Eigen::VectorXd&) -> Eigen::VectorXd { return a; },
        [n](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Zero(n, n); });
}

SafetyFunction pairwise_distance_safety(int n, int i_offset, int j_offset, int dim, double safe_distance) {
    if (i_offset < 0 || j_offset < 0 || i_offset + dim > n || j_offset + dim > n || i_offset == j_offset)
        throw ConfigError("pairwise_distance_safety: position blocks out of range");
    auto delta = [=](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return x.segment(i_offset, dim) - x.segment(j_offset, dim);
    };
    return SafetyFunction(
        [=](const Eigen::VectorXd& x) { return delta(x).norm() - safe_distance; },
        [=](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            const Eigen::VectorXd d = delta(x);
            const Eigen::VectorXd unit = d / d.norm();
            Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
            g.segment(i_offset, dim) = unit;
            g.segment(j_offset, dim) = -unit;
            return g;
        },
        [=](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
            const Eigen::VectorXd d = delta(x);
            const double r = d.norm();
            const Eigen::MatrixXd block =
                (Eigen::MatrixXd::Identity(dim, dim) - d * d.transpose() / (r * r)) / r;
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
            H.block(i_offset, i_offset, dim, dim) = block;
            H.block(j_offset, j_offset, dim, dim) = block;
            H.block(i_offset, j_offset, dim, dim) = -block;
            H.block(j_offset, i_offset, dim, dim) = -block;
            return H;
        });
}

SafetyFunction quadratic_function(const Eigen::MatrixXd& W, const Eigen::VectorXd& center) {
    const Eigen::MatrixXd Ws = 0.5 * (W + W.transpose());
    return SafetyFunction(
        [Ws, center](const Eigen::VectorXd& x) {
            const Eigen::VectorXd e = x - center;
            return e.dot(Ws * e);
        },
        [Ws, center](const Eigen::VectorXd& x) -> Eigen::VectorXd { return 2.0 * Ws * (x - center); },
        [Ws](const Eigen::VectorXd&) -> Eigen::MatrixXd { return 2.0 * Ws; });
}

ClassK ClassK::linear(double c) {
    if (!(c > 0.0)) throw ConfigError("ClassK: coefficient must be positive");
    return ClassK{Family::Linear, c, 1.0};
}

ClassK ClassK::power(double c, double k) {
    if (!(c > 0.0)) throw ConfigError("ClassK: coefficient must be positive");
    if (!(k >= 1.0)) throw ConfigError("ClassK: power must be >= 1");
    return ClassK{Family::Power, c, k};
}

double ClassK::operator()(double s) const {
    if (family == Family::Linear) return c * s;
    const double magnitude = c * std::pow(std::abs(s), k);
    return s < 0.0 ? -magnitude : magnitude;
}

bool ClassK::check_on_grid(double s_max, int points) const {
    if ((*this)(0.0) != 0.0) return false;
    double previous = 0.0;
    for (int i = 1; i < points; ++i) {
        const double value = (*this)(s_max * static_cast<double>(i) / (points - 1));
        if (!(value > previous)) return false;
        previous = value;
    }
    return true;
}

ReciprocalBarrier::ReciprocalBarrier(SafetyFunction h, ClassK alpha1, ClassK alpha2)
    : h_(std::move(h)), alpha1_(alpha1), alpha2_(alpha2) {}

double ReciprocalBarrier::checked_h(const Eigen::VectorXd& x) const {
    const double hv = h_.value(x);
    if (!(hv > 0.0)) throw BoundaryError("reciprocal barrier evaluated outside int(C)");
    return hv;
}

double ReciprocalBarrier::value(const Eigen::VectorXd& x) const { return 1.0 / checked_h(x); }

Eigen::VectorXd ReciprocalBarrier::grad(const Eigen::VectorXd& x) const {
    const double hv = checked_h(x);
    return -h_.grad(x) / (hv * hv);
}

Eigen::MatrixXd ReciprocalBarrier::hess(const Eigen::VectorXd& x) const {
    const double hv = checked_h(x);
    const Eigen::VectorXd g = h_.grad(x);
    return 2.0 * g * g.transpose() / (hv * hv * hv) - h_.hess(x) / (hv * hv);
}

bool ReciprocalBarrier::bounds_hold(const Eigen::VectorXd& x) const {
    const double hv = checked_h(x);
    const double B = 1.0 / hv;
    const double lower = 1.0 / alpha1_(hv);
    const double upper = 1.0 / alpha2_(hv);
    const double slack = 1e-12 * std::abs(B);
    return lower <= B + slack && B <= upper + slack;
}

}  // namespace stochcbf
