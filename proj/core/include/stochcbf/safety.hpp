#pragma once

#include <functional>

#include <Eigen/Dense>

namespace stochcbf {

/// Scalar function h with its derivatives; the safe set is {x : h(x) >= 0}.
///
/// Missing derivatives fall back to central differences: the Hessian is
/// differentiated from the closed-form gradient when one is given (step
/// eps^(1/3) max(1, ||x||)), otherwise from values (step eps^(1/4) ...).
class SafetyFunction {
public:
    using Value = std::function<double(const Eigen::VectorXd&)>;
    using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using Hessian = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

    explicit SafetyFunction(Value value, Gradient grad = {}, Hessian hess = {});

    double value(const Eigen::VectorXd& x) const { return value_(x); }
    double operator()(const Eigen::VectorXd& x) const { return value_(x); }

    /// dh/dx stored as a column vector.
    Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd hess(const Eigen::VectorXd& x) const;

    bool has_closed_form_gradient() const { return static_cast<bool>(grad_); }
    bool has_closed_form_hessian() const { return static_cast<bool>(hess_); }

    /// h(x) + offset, sharing derivatives.
    SafetyFunction shifted(double offset) const;

private:
    Value value_;
    Gradient grad_;
    Hessian hess_;
};

/// h(x) = a.x - b
SafetyFunction affine_safety(const Eigen::VectorXd& a, double b);

/// h(x) = ||x[i..i+dim) - x[j..j+dim)||_2 - safe_distance for positions
/// stacked inside a state of size n.
SafetyFunction pairwise_distance_safety(int n, int i_offset, int j_offset, int dim, double safe_distance);

/// V(x) = (x - center)^T W (x - center), W symmetric.
SafetyFunction quadratic_function(const Eigen::MatrixXd& W, const Eigen::VectorXd& center);

/// Class-K function: linear c s, or power c s^k (k >= 1).
/// Negative arguments use the odd extension sign(s) c |s|^k.
struct ClassK {
    enum class Family { Linear, Power };

    Family family = Family::Linear;
    double c = 1.0;
    double k = 1.0;

    static ClassK identity() { return {}; }
    static ClassK linear(double c);
    static ClassK power(double c, double k);

    double operator()(double s) const;

    /// alpha(0) = 0 and strictly increasing on `points` samples of [0, s_max].
    bool check_on_grid(double s_max = 100.0, int points = 1001) const;
};

/// B(x) = 1 / h(x) together with the class-K bounds alpha1, alpha2 that
/// bracket it on int(C).
class ReciprocalBarrier {
public:
    explicit ReciprocalBarrier(SafetyFunction h, ClassK alpha1 = ClassK::identity(),
                               ClassK alpha2 = ClassK::identity());

    const SafetyFunction& h() const { return h_; }
    const ClassK& alpha1() const { return alpha1_; }
    const ClassK& alpha2() const { return alpha2_; }

    /// All three throw BoundaryError when h(x) <= 0.
    double value(const Eigen::VectorXd& x) const;
    /// -h^-2 dh/dx
    Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
    /// 2 h^-3 dh/dx^T dh/dx - h^-2 d2h/dx2
    Eigen::MatrixXd hess(const Eigen::VectorXd& x) const;

    /// 1/alpha1(h) <= B <= 1/alpha2(h) at x (relative slack 1e-12).
    bool bounds_hold(const Eigen::VectorXd& x) const;

private:
    double checked_h(const Eigen::VectorXd& x) const;

    SafetyFunction h_;
    ClassK alpha1_;
    ClassK alpha2_;
};

}  // namespace stochcbf
