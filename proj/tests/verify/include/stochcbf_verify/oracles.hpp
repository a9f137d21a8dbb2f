#pragma once

#include <functional>
#include <utility>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stochcbf/cbf.hpp"
#include "stochcbf/qp.hpp"

namespace stochcbf::verify {

/// Minimizer of 1/2 ||u - u_nom||^2 over {rows} found by trying every
/// linearly independent subset of rows as the active set and keeping the
/// feasible one with nonnegative multipliers and least cost.
struct EnumerationResult {
    bool feasible = false;
    Eigen::VectorXd u;
    std::vector<int> active;
};

EnumerationResult enumerate_qp(const Eigen::VectorXd& u_nom, const std::vector<AffineInputConstraint>& rows,
                               double tol = 1e-9);

/// m in [1, max_inputs], row count in [0, max_rows], entries N(0, 1),
/// senses drawn uniformly.
QpProblem random_qp(std::mt19937_64& gen, int max_inputs, int max_rows);

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

/// Central differences with an explicit step.
Eigen::VectorXd fd_gradient(const ScalarFn& fn, const Eigen::VectorXd& x, double step);
Eigen::MatrixXd fd_hessian(const ScalarFn& fn, const Eigen::VectorXd& x, double step);

/// ||approx - exact|| / max(||exact||, 1)
double scaled_error(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact);

/// h -> dh/dx F x + 1/2 tr(sigma^T d2h/dx2 sigma) + h with the derivatives
/// taken by unit-step central differences, exact for affine and quadratic h.
ScalarFn numeric_lift(const Eigen::MatrixXd& F, const Eigen::MatrixXd& sigma, ScalarFn h);

/// (c, d) with fn(x) = c.x + d, read off by unit-step differences at 0.
std::pair<Eigen::VectorXd, double> affine_fit(const ScalarFn& fn, int n);

/// (F, G, a) with a known relative degree: a chain-structured system in
/// random coordinates.
struct ChainTriple {
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;
    Eigen::VectorXd a;
    int degree = 0;
};

ChainTriple random_chain_triple(std::mt19937_64& gen, int n);

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int rows, int cols);

}  // namespace stochcbf::verify
