#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stochcbf/cbf.hpp"
#include "stochcbf/safety.hpp"
#include "stochcbf/sde.hpp"

namespace stochcbf {

/// h_i(x) = c_i.x + d_i for i = 0..depth, the lifted constraints of an
/// affine safety function under linear dynamics with constant diffusion.
struct AffineChain {
    std::vector<Eigen::VectorXd> c;
    std::vector<double> d;

    int depth() const { return static_cast<int>(c.size()) - 1; }
    double value(int level, const Eigen::VectorXd& x) const { return c.at(level).dot(x) + d.at(level); }
};

/// Smallest l in [0, n) with ||a^T F^l G||_inf above 1e-9 ||a|| ||F||^l ||G||
/// (Frobenius norms). Throws NoRelativeDegree when none exists.
int relative_degree(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G, const Eigen::VectorXd& a);

/// Chain generated by h(x) = a.x - b:  c_{i+1} = (F^T + I) c_i,  d_i = -b.
/// An affine h_i has zero Hessian, so the diffusion never enters; sigma is
/// accepted only to check its shape.
AffineChain build_affine_chain(const Eigen::MatrixXd& F, const Eigen::MatrixXd& sigma, const Eigen::VectorXd& a,
                               double b, int depth);

/// Top-level condition  c_r^T G u >= -c_r^T F x - h_r(x).
AffineInputConstraint hrd_constraint(const AffineChain& chain, const LinearSystem& sys, const Eigen::VectorXd& x,
                                     double kappa = 1.0);

/// x in C_0 ∩ ... ∩ C_r.
bool membership_cbar(const AffineChain& chain, const Eigen::VectorXd& x);

/// General lift h -> dh/dx f + 1/2 tr(sigma^T d2h/dx2 sigma) + h for any
/// control-affine system. Derivatives of the lifted function come from
/// finite differences, so accuracy degrades with each level; intended for
/// checks and shallow chains.
SafetyFunction lift_once(const ControlAffineSystem& sys, const SafetyFunction& h);

/// [h_0, ..., h_depth] via repeated lift_once.
std::vector<SafetyFunction> ito_chain(const ControlAffineSystem& sys, const SafetyFunction& h, int depth);

}  // namespace stochcbf
