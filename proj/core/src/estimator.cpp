#include "stochcbf/estimator.hpp"

#include <cmath>
#include <utility>

#include "stochcbf/errors.hpp"

namespace stochcbf {

namespace {

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& R) {
    if (R.rows() != R.cols()) throw EstimatorConfigError("measurement covariance must be square");
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) throw EstimatorConfigError("measurement covariance is not positive definite");
    return llt.solve(Eigen::MatrixXd::Identity(R.rows(), R.cols()));
}

Eigen::MatrixXd riccati_update(const Eigen::MatrixXd& A, const Eigen::MatrixXd& CtRinvC, const Eigen::MatrixXd& Q,
                               const Eigen::MatrixXd& P, double dt) {
    const Eigen::MatrixXd AP = A * P;
    Eigen::MatrixXd next = P + dt * (AP + AP.transpose() + Q - P * CtRinvC * P);
    return 0.5 * (next + next.transpose());
}

}  // namespace

ObservationModel::ObservationModel(Eigen::MatrixXd c, Eigen::MatrixXd nu) : c_(std::move(c)), nu_(std::move(nu)) {
    if (nu_.rows() != c_.rows()) throw DimensionMismatch("ObservationModel: nu must have p rows");
    R_ = nu_ * nu_.transpose();
    R_inv_ = checked_inverse(R_);
}

EkfState initial_ekf_state(const Eigen::VectorXd& x0, const ObservationModel& obs, double p0_scale) {
    if (x0.size() != obs.n()) throw DimensionMismatch("initial_ekf_state: x0 has wrong size");
    EkfState s;
    s.xhat = x0;
    s.P = p0_scale * Eigen::MatrixXd::Identity(x0.size(), x0.size());
    s.K = s.P * obs.c().transpose() * obs.R_inverse();
    return s;
}

Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& A, const Eigen::MatrixXd& c, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R, const Eigen::MatrixXd& P, double dt) {
    if (!(dt > 0.0)) throw ConfigError("riccati_step: dt must be positive");
    const Eigen::Index n = P.rows();
    if (A.rows() != n || A.cols() != n || Q.rows() != n || Q.cols() != n || c.cols() != n || R.rows() != c.rows())
        throw DimensionMismatch("riccati_step: inconsistent shapes");
    const Eigen::MatrixXd Rinv = checked_inverse(R);
    return riccati_update(A, c.transpose() * Rinv * c, Q, P, dt);
}

EkfState ekf_step(const EkfState& ekf, const ControlAffineSystem& sys, const ObservationModel& obs,
                  const Eigen::VectorXd& u, const Eigen::VectorXd& dy, double dt) {
    if (!(dt > 0.0)) throw ConfigError("ekf_step: dt must be positive");
    if (dy.size() != obs.p()) throw DimensionMismatch("ekf_step: measurement has wrong size");
    if (ekf.xhat.size() != sys.n() || obs.n() != sys.n()) throw DimensionMismatch("ekf_step: state size mismatch");

    const Eigen::MatrixXd& c = obs.c();
    EkfState next;
    next.xhat = ekf.xhat + dt * sys.drift(ekf.xhat, u);
    next.xhat.noalias() += ekf.K * (dy - dt * (c * ekf.xhat));

    const Eigen::MatrixXd A = sys.drift_jacobian(ekf.xhat, u);
    const Eigen::MatrixXd S = sys.sigma(ekf.xhat);
    const Eigen::MatrixXd CtRinv = c.transpose() * obs.R_inverse();
    next.P = riccati_update(A, CtRinv * c, S * S.transpose(), ekf.P, dt);
    next.K = next.P * CtRinv;
    return next;
}

double lambda_max(const Eigen::MatrixXd& P) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double gamma_lti(double lambda_star, int n, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("gamma_lti: eps must lie in (0, 1)");
    if (!(lambda_star >= 0.0)) throw ConfigError("gamma_lti: lambda_star must be >= 0");
    if (n <= 0) throw ConfigError("gamma_lti: n must be positive");
    return std::sqrt(static_cast<double>(n) * lambda_star / eps);
}

double calibrate_lambda_star(const Eigen::MatrixXd& A, const Eigen::MatrixXd& c, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R, const Eigen::MatrixXd& P0, double dt, double horizon) {
    const std::size_t steps = step_count(horizon, dt);
    const Eigen::MatrixXd CtRinvC = c.transpose() * checked_inverse(R) * c;
    Eigen::MatrixXd P = P0;
    double sup = lambda_max(P);
    for (std::size_t k = 0; k < steps; ++k) {
        P = riccati_update(A, CtRinvC, Q, P, dt);
        sup = std::max(sup, lambda_max(P));
    }
    return sup;
}

PairwiseShrink PairwiseShrink::stacked(int n, int i_offset, int j_offset, int dim, double safe_distance) {
    PairwiseShrink out;
    out.selector = Eigen::MatrixXd::Zero(dim, n);
    out.selector.block(0, i_offset, dim, dim) = Eigen::MatrixXd::Identity(dim, dim);
    out.selector.block(0, j_offset, dim, dim) = -Eigen::MatrixXd::Identity(dim, dim);
    out.safe_distance = safe_distance;
    return out;
}

ShrunkSafety shrink_by(const SafetyFunction& h, double gamma, double hbar_gamma) {
    if (!(gamma >= 0.0)) throw ConfigError("shrink: gamma must be >= 0");
    if (!(hbar_gamma >= 0.0)) throw ConfigError("shrink: hbar_gamma must be >= 0");
    return ShrunkSafety{h, gamma, hbar_gamma, h.shifted(-hbar_gamma)};
}

ShrunkSafety shrink(const SafetyFunction& h, const ShrinkKind& kind, double gamma) {
    if (!(gamma >= 0.0)) throw ConfigError("shrink: gamma must be >= 0");
    if (const auto* affine = std::get_if<AffineShrink>(&kind)) return shrink_by(h, gamma, gamma * affine->a.norm());
    if (const auto* pair = std::get_if<PairwiseShrink>(&kind)) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pair->selector);
        const double spectral = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
        return shrink_by(h, gamma, gamma * spectral);
    }
    throw UnsupportedSafetyFunction("shrink: no closed-form hbar_gamma; supply it with shrink_by");
}

EkfObserver::EkfObserver(ControlAffineSystem sys, ObservationModel obs, double p0_scale)
    : EkfObserver(std::vector<Block>{Block{std::move(sys), std::move(obs), 0, 0}}, p0_scale) {}

EkfObserver::EkfObserver(std::vector<Block> blocks, double p0_scale)
    : blocks_(std::move(blocks)), p0_scale_(p0_scale) {
    if (blocks_.empty()) throw ConfigError("EkfObserver: at least one block is required");
    for (const Block& b : blocks_) {
        if (b.observation.n() != b.system.n()) throw DimensionMismatch("EkfObserver: block output size mismatch");
        n_ = std::max(n_, b.state_offset + b.system.n());
        p_ += b.observation.p();
        qw_ += b.observation.noise_dim();
    }
    xhat_ = Eigen::VectorXd::Zero(n_);
}

void EkfObserver::reset(const Eigen::VectorXd& x0) {
    if (x0.size() != n_) throw DimensionMismatch("EkfObserver: x0 has wrong size");
    states_.clear();
    states_.reserve(blocks_.size());
    lambda_star_ = 0.0;
    for (const Block& b : blocks_) {
        states_.push_back(initial_ekf_state(x0.segment(b.state_offset, b.system.n()), b.observation, p0_scale_));
        lambda_star_ = std::max(lambda_star_, lambda_max(states_.back().P));
    }
    assemble_estimate();
}

void EkfObserver::update(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt, CounterRng& rng) {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& b = blocks_[i];
        const int nb = b.system.n();
        const Eigen::VectorXd xb = x.segment(b.state_offset, nb);
        const Eigen::VectorXd ub = u.segment(b.input_offset, b.system.m());
        const Eigen::VectorXd dW = brownian_increments(b.observation.noise_dim(), dt, rng);
        const Eigen::VectorXd dy = dt * (b.observation.c() * xb) + b.observation.nu() * dW;
        states_[i] = ekf_step(states_[i], b.system, b.observation, ub, dy, dt);
        lambda_star_ = std::max(lambda_star_, lambda_max(states_[i].P));
    }
    assemble_estimate();
}

void EkfObserver::assemble_estimate() {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        xhat_.segment(blocks_[i].state_offset, blocks_[i].system.n()) = states_[i].xhat;
}

Eigen::MatrixXd EkfObserver::gain() const {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_, p_);
    int row_offset = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const int p = blocks_[i].observation.p();
        K.block(blocks_[i].state_offset, row_offset, blocks_[i].system.n(), p) = states_.at(i).K;
        row_offset += p;
    }
    return K;
}

Eigen::MatrixXd EkfObserver::output_matrix() const {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p_, n_);
    int row_offset = 0;
    for (const Block& b : blocks_) {
        c.block(row_offset, b.state_offset, b.observation.p(), b.system.n()) = b.observation.c();
        row_offset += b.observation.p();
    }
    return c;
}

Eigen::MatrixXd EkfObserver::measurement_noise() const {
    Eigen::MatrixXd nu = Eigen::MatrixXd::Zero(p_, qw_);
    int row_offset = 0, col_offset = 0;
    for (const Block& b : blocks_) {
        nu.block(row_offset, col_offset, b.observation.p(), b.observation.noise_dim()) = b.observation.nu();
        row_offset += b.observation.p();
        col_offset += b.observation.noise_dim();
    }
    return nu;
}

}  // namespace stochcbf
