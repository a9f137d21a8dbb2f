#include "stochcbf/numdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stochcbf::numdiff {

double first_derivative_step(const Eigen::VectorXd& x) {
    static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    return base * std::max(1.0, x.norm());
}

double second_derivative_step(const Eigen::VectorXd& x) {
    static const double base = std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));
    return base * std::max(1.0, x.norm());
}

Eigen::VectorXd gradient(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x) {
    const double h = first_derivative_step(x);
    Eigen::VectorXd out(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = fn(probe);
        probe[i] = x[i] - h;
        const double down = fn(probe);
        probe[i] = x[i];
        out[i] = (up - down) / (2.0 * h);
    }
    return out;
}

Eigen::MatrixXd jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                         const Eigen::VectorXd& x) {
    const double h = first_derivative_step(x);
    Eigen::VectorXd probe = x;
    Eigen::MatrixXd out;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const Eigen::VectorXd up = fn(probe);
        probe[i] = x[i] - h;
        const Eigen::VectorXd down = fn(probe);
        probe[i] = x[i];
        if (i == 0) out.resize(up.size(), x.size());
        out.col(i) = (up - down) / (2.0 * h);
    }
    return out;
}

Eigen::MatrixXd hessian_from_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                      const Eigen::VectorXd& x) {
    Eigen::MatrixXd J = jacobian(grad, x);
    return 0.5 * (J + J.transpose());
}

Eigen::MatrixXd hessian(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x) {
    const double h = second_derivative_step(x);
    const Eigen::Index n = x.size();
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd probe = x;
    const double f0 = fn(x);
    for (Eigen::Index i = 0; i < n; ++i) {
        probe[i] = x[i] + h;
        const double up = fn(probe);
        probe[i] = x[i] - h;
        const double down = fn(probe);
        probe[i] = x[i];
        H(i, i) = (up - 2.0 * f0 + down) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
            probe[i] = x[i] + h; probe[j] = x[j] + h;
            const double pp = fn(probe);
            probe[j] = x[j] - h;
            const double pm = fn(probe);
            probe[i] = x[i] - h;
            const double mm = fn(probe);
            probe[j] = x[j] + h;
            const double mp = fn(probe);
            probe[i] = x[i]; probe[j] = x[j];
            H(i, j) = H(j, i) = (pp - pm - mp + mm) / (4.0 * h * h);
        }
    }
    return H;
}

}  // namespace stochcbf::numdiff
