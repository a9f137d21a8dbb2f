#include "stochcbf/high_degree.hpp"

#include <cmath>

#include "stochcbf/errors.hpp"

namespace stochcbf {

int relative_degree(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G, const Eigen::VectorXd& a) {
    const Eigen::Index n = F.rows();
    if (F.cols() != n || G.rows() != n || a.size() != n)
        throw DimensionMismatch("relative_degree: inconsistent shapes");
    const double a_norm = a.norm();
    const double f_norm = F.norm();
    const double g_norm = G.norm();
    Eigen::RowVectorXd row = a.transpose();  // a^T F^l
    for (Eigen::Index l = 0; l < n; ++l) {
        const Eigen::RowVectorXd coupling = row * G;
        const double tol = 1e-9 * a_norm * std::pow(f_norm, static_cast<double>(l)) * g_norm;
        if (coupling.size() > 0 && coupling.lpNorm<Eigen::Infinity>() > tol) return static_cast<int>(l);
        row = row * F;
    }
    throw NoRelativeDegree("relative_degree: a^T F^l G vanishes for every l < n");
}

AffineChain build_affine_chain(const Eigen::MatrixXd& F, const Eigen::MatrixXd& sigma, const Eigen::VectorXd& a,
                               double b, int depth) {
    if (depth < 0) throw ConfigError("build_affine_chain: depth must be >= 0");
    if (F.rows() != F.cols() || a.size() != F.rows()) throw DimensionMismatch("build_affine_chain: bad F or a");
    if (sigma.size() > 0 && sigma.rows() != F.rows()) throw DimensionMismatch("build_affine_chain: bad sigma");
    AffineChain chain;
    chain.c.reserve(depth + 1);
    chain.d.assign(depth + 1, -b);
    chain.c.push_back(a);
    for (int i = 0; i < depth; ++i) {
        const Eigen::VectorXd& prev = chain.c.back();
        chain.c.push_back(F.transpose() * prev + prev);
    }
    return chain;
}

AffineInputConstraint hrd_constraint(const AffineChain& chain, const LinearSystem& sys, const Eigen::VectorXd& x,
                                     double kappa) {
    const Eigen::VectorXd& top = chain.c.back();
    if (top.size() != sys.n() || x.size() != sys.n()) throw DimensionMismatch("hrd_constraint: bad shapes");
    AffineInputConstraint row;
    row.sense = Sense::GreaterEqual;
    row.a = sys.G.transpose() * top;
    row.b = -top.dot(sys.F * x) - kappa * chain.value(chain.depth(), x);
    return row;
}

bool membership_cbar(const AffineChain& chain, const Eigen::VectorXd& x) {
    for (int i = 0; i <= chain.depth(); ++i)
        if (chain.value(i, x) < 0.0) return false;
    return true;
}

SafetyFunction lift_once(const ControlAffineSystem& sys, const SafetyFunction& h) {
    return SafetyFunction([sys, h](const Eigen::VectorXd& x) {
        return h.grad(x).dot(sys.f(x)) + 0.5 * ito_trace(sys.sigma(x), h.hess(x)) + h.value(x);
    });
}

std::vector<SafetyFunction> ito_chain(const ControlAffineSystem& sys, const SafetyFunction& h, int depth) {
    if (depth < 0) throw ConfigError("ito_chain: depth must be >= 0");
    std::vector<SafetyFunction> chain{h};
    for (int i = 0; i < depth; ++i) chain.push_back(lift_once(sys, chain.back()));
    return chain;
}

}  // namespace stochcbf
