#pragma once

#include <functional>

#include <Eigen/Dense>

namespace stochcbf::numdiff {

/// eps^(1/3) * max(1, ||x||): central-difference step for first derivatives.
double first_derivative_step(const Eigen::VectorXd& x);

/// eps^(1/4) * max(1, ||x||): step for second differences of a scalar.
double second_derivative_step(const Eigen::VectorXd& x);

Eigen::VectorXd gradient(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x);

/// Rows are outputs, columns inputs.
Eigen::MatrixXd jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                         const Eigen::VectorXd& x);

/// Hessian from an analytic gradient; symmetrized.
Eigen::MatrixXd hessian_from_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                      const Eigen::VectorXd& x);

/// Hessian from values only; symmetric by construction.
Eigen::MatrixXd hessian(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x);

}  // namespace stochcbf::numdiff
