#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "stochcbf/safety.hpp"
#include "stochcbf/sde.hpp"

namespace stochcbf {

/// Linear output dy = c x dt + nu dW with R = nu nu^T positive definite.
class ObservationModel {
public:
    /// Throws EstimatorConfigError when nu nu^T is not positive definite.
    ObservationModel(Eigen::MatrixXd c, Eigen::MatrixXd nu);

    const Eigen::MatrixXd& c() const { return c_; }
    const Eigen::MatrixXd& nu() const { return nu_; }
    const Eigen::MatrixXd& R() const { return R_; }
    const Eigen::MatrixXd& R_inverse() const { return R_inv_; }
    int p() const { return static_cast<int>(c_.rows()); }
    int n() const { return static_cast<int>(c_.cols()); }
    int noise_dim() const { return static_cast<int>(nu_.cols()); }

private:
    Eigen::MatrixXd c_;
    Eigen::MatrixXd nu_;
    Eigen::MatrixXd R_;
    Eigen::MatrixXd R_inv_;
};

/// Estimate, covariance and the gain K = P c^T R^-1 that goes with P.
struct EkfState {
    Eigen::VectorXd xhat;
    Eigen::MatrixXd P;
    Eigen::MatrixXd K;
};

/// State known exactly at t = 0: P0 = 1e-12 I.
EkfState initial_ekf_state(const Eigen::VectorXd& x0, const ObservationModel& obs, double p0_scale = 1e-12);

/// P + dt (A P + P A^T + Q - P c^T R^-1 c P), symmetrized.
/// Throws EstimatorConfigError for singular R, ConfigError for dt <= 0.
Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& A, const Eigen::MatrixXd& c, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R, const Eigen::MatrixXd& P, double dt);

/// One Euler step of the continuous-discrete EKF:
///   xhat += (f(xhat) + g(xhat) u) dt + K (dy - c xhat dt)
/// with the current gain, then P through riccati_step with
/// A = d(f + g u)/dx at xhat and Q = sigma sigma^T, then K from the new P.
EkfState ekf_step(const EkfState& ekf, const ControlAffineSystem& sys, const ObservationModel& obs,
                  const Eigen::VectorXd& u, const Eigen::VectorXd& dy, double dt);

double lambda_max(const Eigen::MatrixXd& P);

/// sqrt(n lambda_star / eps). Throws ConfigError unless 0 < eps < 1 and
/// lambda_star >= 0.
double gamma_lti(double lambda_star, int n, double eps);

/// sup over [0, horizon] of lambda_max(P_t) for the Riccati flow from P0.
/// For LTI plants P_t does not depend on the measurements, so this is the
/// exact sup over a run of that horizon.
double calibrate_lambda_star(const Eigen::MatrixXd& A, const Eigen::MatrixXd& c, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R, const Eigen::MatrixXd& P0, double dt, double horizon);

struct AffineShrink {
    Eigen::VectorXd a;
    double b = 0.0;
};

/// h = ||M x|| - D_s where M picks p_i - p_j out of the stacked state.
struct PairwiseShrink {
    Eigen::MatrixXd selector;
    double safe_distance = 0.0;

    static PairwiseShrink stacked(int n, int i_offset, int j_offset, int dim, double safe_distance);
};

/// Safety functions without a closed-form sup; shrink() rejects these.
struct GeneralShrink {};

using ShrinkKind = std::variant<AffineShrink, PairwiseShrink, GeneralShrink>;

/// hhat = h - hbar_gamma, the safe set tightened for estimation error gamma.
struct ShrunkSafety {
    SafetyFunction base;
    double gamma = 0.0;
    double hbar_gamma = 0.0;
    SafetyFunction hhat;
};

/// hbar_gamma = gamma ||a|| (affine) or gamma ||M||_2 (pairwise distance).
/// Throws UnsupportedSafetyFunction for GeneralShrink; use shrink_by then.
ShrunkSafety shrink(const SafetyFunction& h, const ShrinkKind& kind, double gamma);

/// Caller-supplied hbar_gamma.
ShrunkSafety shrink_by(const SafetyFunction& h, double gamma, double hbar_gamma);

/// Block-diagonal EKF driven by simulated measurements of the true state.
///
/// Each block is an independent subsystem (its own state slice, input slice,
/// output and measurement noise). A single block covering the whole state is
/// the ordinary EKF; decoupled multi-agent plants use one block per agent,
/// which is the same filter with the zero cross-covariances never stored.
class EkfObserver : public StateObserver {
public:
    struct Block {
        ControlAffineSystem system;
        ObservationModel observation;
        int state_offset = 0;
        int input_offset = 0;
    };

    EkfObserver(ControlAffineSystem sys, ObservationModel obs, double p0_scale = 1e-12);
    explicit EkfObserver(std::vector<Block> blocks, double p0_scale = 1e-12);

    void reset(const Eigen::VectorXd& x0) override;
    const Eigen::VectorXd& estimate() const override { return xhat_; }
    void update(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt, CounterRng& rng) override;

    std::size_t block_count() const { return blocks_.size(); }
    const Block& block(std::size_t i) const { return blocks_.at(i); }
    const EkfState& block_state(std::size_t i) const { return states_.at(i); }

    /// Assembled K (n x p) and output matrix c (p x n), block diagonal.
    Eigen::MatrixXd gain() const;
    Eigen::MatrixXd output_matrix() const;
    /// Assembled nu (p x q_w).
    Eigen::MatrixXd measurement_noise() const;
    /// Running max of lambda_max(P_t) since reset().
    double lambda_star() const { return lambda_star_; }

private:
    void assemble_estimate();

    std::vector<Block> blocks_;
    std::vector<EkfState> states_;
    Eigen::VectorXd xhat_;
    double p0_scale_;
    double lambda_star_ = 0.0;
    int n_ = 0, p_ = 0, qw_ = 0;
};

}  // namespace stochcbf
