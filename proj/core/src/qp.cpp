#include "stochcbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "stochcbf/errors.hpp"

namespace stochcbf {

const char* to_string(QpStatus status) {
    switch (status) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::Infeasible: return "infeasible";
        case QpStatus::Relaxed: return "relaxed";
    }
    return "unknown";
}

namespace detail {

namespace {

struct Projection {
    Eigen::VectorXd z;
    Eigen::VectorXd multipliers;
    /// Orthonormal basis of the row space of M.
    Eigen::MatrixXd Q;
};

/// Projection of target onto {M z = r}; empty when the rows of M are
/// numerically dependent. Uses a thin QR of M^T so that
/// z = target + Q (R^-T r - Q^T target) and R lambda = R^-T r - Q^T target.
std::optional<Projection> project_onto(const Eigen::VectorXd& target, const Eigen::MatrixXd& M,
                                       const Eigen::VectorXd& r) {
    const Eigen::Index k = M.rows();
    const Eigen::Index dim = target.size();
    if (k == 0) return Projection{target, Eigen::VectorXd(), Eigen::MatrixXd(dim, 0)};
    if (k > dim) return std::nullopt;

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M.transpose());
    const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const double largest = R.diagonal().cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < k; ++i) {
        const double row_norm = M.row(i).norm();
        if (std::abs(R(i, i)) <= 1e-13 * std::max(largest, row_norm)) return std::nullopt;
    }
    Projection out;
    out.Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);
    const Eigen::VectorXd w = R.transpose().triangularView<Eigen::Lower>().solve(r);
    const Eigen::VectorXd qt = out.Q.transpose() * target;
    out.z = target + out.Q * (w - qt);
    out.multipliers = R.triangularView<Eigen::Upper>().solve(w - qt);
    return out;
}

void stack_working_rows(const Eigen::MatrixXd& E, const Eigen::VectorXd& e, const Eigen::MatrixXd& C,
                        const Eigen::VectorXd& d, const std::vector<int>& working, Eigen::MatrixXd& M,
                        Eigen::VectorXd& r) {
    const Eigen::Index ne = E.rows();
    M.resize(ne + static_cast<Eigen::Index>(working.size()), C.cols());
    r.resize(M.rows());
    if (ne > 0) {
        M.topRows(ne) = E;
        r.head(ne) = e;
    }
    for (std::size_t i = 0; i < working.size(); ++i) {
        M.row(ne + static_cast<Eigen::Index>(i)) = C.row(working[i]);
        r[ne + static_cast<Eigen::Index>(i)] = d[working[i]];
    }
}

}  // namespace

ProjectionResult project_active_set(const Eigen::VectorXd& target, const Eigen::MatrixXd& E,
                                    const Eigen::VectorXd& e, const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                                    Eigen::VectorXd start, std::vector<int> working_set) {
    const Eigen::Index rows = C.rows();
    const Eigen::Index ne = E.rows();
    std::sort(working_set.begin(), working_set.end());
    working_set.erase(std::unique(working_set.begin(), working_set.end()), working_set.end());

    Eigen::VectorXd z = std::move(start);
    std::vector<char> in_working(static_cast<std::size_t>(rows), 0);
    for (int i : working_set) in_working[static_cast<std::size_t>(i)] = 1;

    const int max_iterations = static_cast<int>(10 * (rows + target.size()) + 50);
    Eigen::MatrixXd M;
    Eigen::VectorXd r;
    int last_added = -1;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        stack_working_rows(E, e, C, d, working_set, M, r);
        const std::optional<Projection> eqp = project_onto(target, M, r);
        if (!eqp) {
            if (last_added < 0) throw Error("qp: working set is linearly dependent");
            // The row just added is numerically in the span of the others and
            // cannot block; keep it out of the working set.
            working_set.erase(std::lower_bound(working_set.begin(), working_set.end(), last_added));
            last_added = -1;
            continue;
        }
        last_added = -1;

        const Eigen::VectorXd p = eqp->z - z;
        const double scale = 1.0 + z.lpNorm<Eigen::Infinity>() + target.lpNorm<Eigen::Infinity>();
        if (p.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
            z = eqp->z;
            const Eigen::VectorXd ineq = eqp->multipliers.tail(static_cast<Eigen::Index>(working_set.size()));
            std::size_t leaving = working_set.size();
            double most_negative = -1e-12 * scale;
            for (std::size_t i = 0; i < working_set.size(); ++i) {
                if (ineq[static_cast<Eigen::Index>(i)] < most_negative) {
                    most_negative = ineq[static_cast<Eigen::Index>(i)];
                    leaving = i;
                }
            }
            if (leaving == working_set.size()) {
                ProjectionResult out;
                out.z = std::move(z);
                out.working_set = std::move(working_set);
                out.equality_multipliers = eqp->multipliers.head(ne);
                out.inequality_multipliers = ineq;
                out.iterations = iter;
                return out;
            }
            in_working[static_cast<std::size_t>(working_set[leaving])] = 0;
            working_set.erase(working_set.begin() + static_cast<std::ptrdiff_t>(leaving));
            continue;
        }

        double alpha = 1.0;
        int blocking = -1;
        const double p_norm = p.norm();
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (in_working[static_cast<std::size_t>(i)]) continue;
            const double cp = C.row(i).dot(p);
            const double row_norm = C.row(i).norm();
            if (cp >= -1e-13 * row_norm * p_norm) continue;
            const double residual = std::max(0.0, C.row(i).dot(z) - d[i]);
            const double ratio = residual / -cp;
            if (ratio < alpha) {
                // Rows in the span of the working set cannot block exactly.
                const Eigen::VectorXd row = C.row(i).transpose();
                if ((row - eqp->Q * (eqp->Q.transpose() * row)).norm() <= 1e-9 * row_norm) continue;
                alpha = ratio;
                blocking = static_cast<int>(i);
            }
        }
        z.noalias() += alpha * p;
        if (blocking >= 0) {
            in_working[static_cast<std::size_t>(blocking)] = 1;
            last_added = blocking;
            working_set.insert(std::lower_bound(working_set.begin(), working_set.end(), blocking), blocking);
        }
    }
    throw Error("qp: active-set iteration limit reached");
}

}  // namespace detail

namespace {

double kkt_residual(const Eigen::VectorXd& z, const Eigen::VectorXd& target, const Eigen::MatrixXd& C,
                    const std::vector<int>& working, const Eigen::VectorXd& multipliers) {
    Eigen::VectorXd stationarity = z - target;
    for (std::size_t i = 0; i < working.size(); ++i)
        stationarity -= multipliers[static_cast<Eigen::Index>(i)] * C.row(working[i]).transpose();
    return stationarity.size() > 0 ? stationarity.lpNorm<Eigen::Infinity>() : 0.0;
}

}  // namespace

QpResult solve_qp(const QpProblem& problem, const QpOptions& options, QpWarmStart* warm) {
    const Eigen::Index m = problem.u_nom.size();
    const auto k = static_cast<Eigen::Index>(problem.constraints.size());
    const auto ns = static_cast<Eigen::Index>(problem.soft_constraints.size());
    const Eigen::Index dim = m + ns;
    if (!(problem.soft_weight > 0.0)) throw ConfigError("solve_qp: soft_weight must be positive");

    // Hard rows first, then soft rows with their scaled slack column.
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(k + ns, dim);
    Eigen::VectorXd d(k + ns);
    const double inv_sqrt_weight = 1.0 / std::sqrt(problem.soft_weight);
    auto put_row = [&](Eigen::Index row, const AffineInputConstraint& c) {
        if (c.a.size() != m) throw DimensionMismatch("solve_qp: constraint row length differs from u_nom");
        const AffineInputConstraint ge = c.as_greater_equal();
        C.row(row).head(m) = ge.a.transpose();
        d[row] = ge.b;
    };
    for (Eigen::Index i = 0; i < k; ++i) put_row(i, problem.constraints[static_cast<std::size_t>(i)]);
    for (Eigen::Index i = 0; i < ns; ++i) {
        put_row(k + i, problem.soft_constraints[static_cast<std::size_t>(i)]);
        C(k + i, m + i) = inv_sqrt_weight;
    }
    Eigen::VectorXd target = Eigen::VectorXd::Zero(dim);
    target.head(m) = problem.u_nom;

    QpResult result;
    const Eigen::VectorXd nominal_residual = C * target - d;
    if (nominal_residual.size() == 0 || nominal_residual.minCoeff() >= 0.0) {
        result.u = problem.u_nom;
        if (warm) warm->active_set.clear();
        return result;
    }

    const Eigen::MatrixXd no_equalities(0, dim);
    const Eigen::VectorXd no_rhs(0);
    auto finish = [&](const detail::ProjectionResult& sol, QpStatus status) {
        result.status = status;
        result.u = sol.z.head(m);
        result.active_set = sol.working_set;
        result.kkt_residual = kkt_residual(sol.z, target, C, sol.working_set, sol.inequality_multipliers);
        result.iterations += sol.iterations;
        if (warm) warm->active_set = sol.working_set;
        return result;
    };

    // Warm start: reuse the previous working set if its projection is feasible.
    if (warm && !warm->active_set.empty()) {
        std::vector<int> ws;
        for (int i : warm->active_set)
            if (i >= 0 && i < k + ns) ws.push_back(i);
        if (!ws.empty() && static_cast<Eigen::Index>(ws.size()) <= dim) {
            Eigen::MatrixXd M(static_cast<Eigen::Index>(ws.size()), dim);
            Eigen::VectorXd r(M.rows());
            for (std::size_t i = 0; i < ws.size(); ++i) {
                M.row(static_cast<Eigen::Index>(i)) = C.row(ws[i]);
                r[static_cast<Eigen::Index>(i)] = d[ws[i]];
            }
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(M.transpose());
            const Eigen::Index kk = M.rows();
            const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(kk, kk).triangularView<Eigen::Upper>();
            bool independent = true;
            for (Eigen::Index i = 0; i < kk; ++i)
                if (std::abs(R(i, i)) <= 1e-11 * std::max(1.0, M.row(i).norm())) independent = false;
            if (independent) {
                const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, kk);
                const Eigen::VectorXd w = R.transpose().triangularView<Eigen::Lower>().solve(r);
                const Eigen::VectorXd z = target + Q * (w - Q.transpose() * target);
                const Eigen::VectorXd residual = C * z - d;
                const double scale = 1.0 + d.lpNorm<Eigen::Infinity>() + z.lpNorm<Eigen::Infinity>();
                if (residual.minCoeff() >= -1e-11 * scale) {
                    const auto sol = detail::project_active_set(target, no_equalities, no_rhs, C, d, z, ws);
                    return finish(sol, QpStatus::Optimal);
                }
            }
        }
    }

    // Phase 1 over the hard rows.
    Eigen::VectorXd slack = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd u_start = problem.u_nom;
    if (k > 0) {
        const Eigen::MatrixXd A = C.topLeftCorner(k, m);
        const Eigen::VectorXd b = d.head(k);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_qr(A);
        rank_qr.setThreshold(1e-12);
        const Eigen::Index rank = m > 0 ? rank_qr.rank() : 0;
        std::vector<Eigen::Index> kept;
        for (Eigen::Index i = 0; i < rank; ++i) kept.push_back(rank_qr.colsPermutation().indices()[i]);
        std::sort(kept.begin(), kept.end());
        Eigen::MatrixXd E(static_cast<Eigen::Index>(kept.size()), k);
        for (std::size_t i = 0; i < kept.size(); ++i) E.row(static_cast<Eigen::Index>(i)) = A.col(kept[i]).transpose();

        const auto phase1 = detail::project_active_set(b, E, Eigen::VectorXd::Zero(E.rows()),
                                                       Eigen::MatrixXd::Identity(k, k), Eigen::VectorXd::Zero(k),
                                                       Eigen::VectorXd::Zero(k), {});
        result.iterations += phase1.iterations;
        slack = phase1.z.cwiseMax(0.0);
        u_start = Eigen::VectorXd::Zero(m);
        for (std::size_t i = 0; i < kept.size(); ++i)
            u_start[kept[i]] = -phase1.equality_multipliers[static_cast<Eigen::Index>(i)];
    }
    const double total_violation = slack.sum();
    const bool infeasible = total_violation > options.infeasibility_tol;
    result.slack = infeasible ? total_violation : 0.0;

    if (infeasible && !options.relax_on_infeasible) {
        result.status = QpStatus::Infeasible;
        result.u = u_start;
        if (warm) warm->active_set.clear();
        return result;
    }

    Eigen::VectorXd z0(dim);
    z0.head(m) = u_start;
    for (Eigen::Index i = 0; i < ns; ++i) {
        const double shortfall = d[k + i] - C.row(k + i).head(m).dot(u_start);
        z0[m + i] = std::max(0.0, shortfall) / inv_sqrt_weight;
    }
    Eigen::VectorXd d_relaxed = d;
    d_relaxed.head(k) -= slack;
    const auto sol = detail::project_active_set(target, no_equalities, no_rhs, C, d_relaxed, z0, {});
    return finish(sol, infeasible ? QpStatus::Relaxed : QpStatus::Optimal);
}

}  // namespace stochcbf
