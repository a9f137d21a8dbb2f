#include "stochcbf_verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stochcbf::verify {

EnumerationResult enumerate_qp(const Eigen::VectorXd& u_nom, const std::vector<AffineInputConstraint>& rows,
                               double tol) {
    const int m = static_cast<int>(u_nom.size());
    const int k = static_cast<int>(rows.size());
    Eigen::MatrixXd A(k, m);
    Eigen::VectorXd b(k);
    for (int i = 0; i < k; ++i) {
        const AffineInputConstraint ge = rows[static_cast<std::size_t>(i)].as_greater_equal();
        A.row(i) = ge.a.transpose();
        b[i] = ge.b;
    }

    EnumerationResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
        std::vector<int> S;
        for (int i = 0; i < k; ++i)
            if (mask & (1u << i)) S.push_back(i);
        if (static_cast<int>(S.size()) > m) continue;

        Eigen::MatrixXd AS(static_cast<int>(S.size()), m);
        Eigen::VectorXd bS(static_cast<int>(S.size()));
        for (std::size_t r = 0; r < S.size(); ++r) {
            AS.row(static_cast<int>(r)) = A.row(S[r]);
            bS[static_cast<int>(r)] = b[S[r]];
        }
        Eigen::VectorXd u = u_nom;
        if (!S.empty()) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(AS);
            const Eigen::VectorXd sv = svd.singularValues();
            if (sv.minCoeff() <= 1e-10 * std::max(1.0, sv.maxCoeff())) continue;
            const Eigen::MatrixXd gram = AS * AS.transpose();
            const Eigen::VectorXd lambda = gram.ldlt().solve(bS - AS * u_nom);
            if (lambda.minCoeff() < -tol) continue;
            u = u_nom + AS.transpose() * lambda;
        }
        bool ok = true;
        for (int i = 0; i < k && ok; ++i)
            if (A.row(i).dot(u) - b[i] < -tol * std::max(1.0, std::abs(b[i]))) ok = false;
        if (!ok) continue;
        const double cost = (u - u_nom).squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            best.feasible = true;
            best.u = u;
            best.active = S;
        }
    }
    return best;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int rows, int cols) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = normal(gen);
    return M;
}

QpProblem random_qp(std::mt19937_64& gen, int max_inputs, int max_rows) {
    std::uniform_int_distribution<int> inputs(1, max_inputs);
    std::uniform_int_distribution<int> count(0, max_rows);
    std::bernoulli_distribution coin(0.5);
    QpProblem p;
    const int m = inputs(gen);
    p.u_nom = random_matrix(gen, m, 1).col(0);
    const int k = count(gen);
    for (int i = 0; i < k; ++i) {
        AffineInputConstraint row;
        row.a = random_matrix(gen, m, 1).col(0);
        row.b = random_matrix(gen, 1, 1)(0, 0);
        row.sense = coin(gen) ? Sense::GreaterEqual : Sense::LessEqual;
        p.constraints.push_back(row);
    }
    return p;
}

Eigen::VectorXd fd_gradient(const ScalarFn& fn, const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        g[i] = (fn(xp) - fn(xm)) / (2.0 * step);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const ScalarFn& fn, const Eigen::VectorXd& x, double step) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd H(n, n);
    const double f0 = fn(x);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        H(i, i) = (fn(xp) - 2.0 * f0 + fn(xm)) / (step * step);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
            pp[i] += step, pp[j] += step;
            pm[i] += step, pm[j] -= step;
            mp[i] -= step, mp[j] += step;
            mm[i] -= step, mm[j] -= step;
            H(i, j) = H(j, i) = (fn(pp) - fn(pm) - fn(mp) + fn(mm)) / (4.0 * step * step);
        }
    }
    return H;
}

double scaled_error(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact) {
    return (approx - exact).norm() / std::max(exact.norm(), 1.0);
}

ScalarFn numeric_lift(const Eigen::MatrixXd& F, const Eigen::MatrixXd& sigma, ScalarFn h) {
    return [F, sigma, h = std::move(h)](const Eigen::VectorXd& x) {
        const Eigen::VectorXd g = fd_gradient(h, x, 1.0);
        const Eigen::MatrixXd H = fd_hessian(h, x, 1.0);
        return g.dot(F * x) + 0.5 * (sigma.transpose() * H * sigma).trace() + h(x);
    };
}

std::pair<Eigen::VectorXd, double> affine_fit(const ScalarFn& fn, int n) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    return {fd_gradient(fn, zero, 1.0), fn(zero)};
}

ChainTriple random_chain_triple(std::mt19937_64& gen, int n) {
    std::uniform_int_distribution<int> input_row(1, n - 1);
    std::uniform_real_distribution<double> link(0.5, 2.0);
    std::bernoulli_distribution flip(0.5);

    // Lower triangle plus a nonzero superdiagonal: e_0^T F^l has support in
    // columns 0..l, so with G supported on rows >= k, e_0^T F^l G = 0 for l < k.
    Eigen::MatrixXd F = random_matrix(gen, n, n).triangularView<Eigen::Lower>();
    for (int i = 0; i + 1 < n; ++i) F(i, i + 1) = flip(gen) ? link(gen) : -link(gen);
    const int k = input_row(gen);
    const int m = 1 + static_cast<int>(gen() % 2);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, m);
    G.bottomRows(n - k) = random_matrix(gen, n - k, m);
    G(k, 0) = flip(gen) ? link(gen) : -link(gen);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    a[0] = link(gen);

    // Orthogonal factor times a diagonal in [0.5, 2]: condition number <= 4.
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(gen, n, n));
    Eigen::VectorXd scale(n);
    for (int i = 0; i < n; ++i) scale[i] = link(gen);
    const Eigen::MatrixXd T = Eigen::MatrixXd(qr.householderQ()) * scale.asDiagonal();
    const Eigen::MatrixXd Tinv = T.inverse();

    ChainTriple t;
    t.F = T * F * Tinv;
    t.G = T * G;
    t.a = Tinv.transpose() * a;
    t.degree = k;
    return t;
}

}  // namespace stochcbf::verify
