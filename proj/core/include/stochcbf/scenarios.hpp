#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stochcbf/cbf.hpp"
#include "stochcbf/estimator.hpp"
#include "stochcbf/filter.hpp"
#include "stochcbf/safety.hpp"
#include "stochcbf/sde.hpp"

namespace stochcbf {

/// Planar double-integrator agents on a circle, each heading for the
/// antipodal point. Agent i owns x[4i .. 4i+4) = (px, py, vx, vy) and
/// u[2i .. 2i+2); every agent has its own Brownian motion
/// (sigma_p on position, sigma_v on velocity) and full-state measurement
/// dy = x dt + nu dW.
struct CollisionParams {
    int n_agents = 10;
    double rho = 150.0;
    double safe_distance = 10.0;
    double k1 = 1.0;
    double k2 = 2.0;
    double sigma_p = 1.0;
    double sigma_v = 1.0;
    double nu = 1.0;
};

struct CollisionScenario {
    CollisionParams params;
    LinearSystem agent;
    ControlAffineSystem system;
    Eigen::VectorXd x0;
    /// Column i is the goal of agent i.
    Eigen::Matrix2Xd goals;
    /// Unordered pairs (i, j), i < j, in lexicographic order.
    std::vector<std::pair<int, int>> pairs;

    int n_agents() const { return params.n_agents; }
    /// -k1 (p_i - r_i) - k2 v_i for every agent.
    Eigen::VectorXd nominal(const Eigen::VectorXd& x) const;
    /// h_ij = ||p_i - p_j|| - D_s in pair order.
    Eigen::VectorXd margins(const Eigen::VectorXd& x) const;
    /// min over pairs involving each agent.
    Eigen::VectorXd agent_margins(const Eigen::VectorXd& x) const;
    /// h_ij as a function of the stacked state.
    SafetyFunction pair_safety(std::size_t pair) const;
    /// Diffusion covariance sigma_i sigma_i^T of one agent (4 x 4).
    Eigen::Matrix4d agent_diffusion_covariance() const;
};

/// Throws ConfigError when n_agents < 2, a scale is not positive, or two
/// agents start closer than the safe distance.
CollisionScenario build_collision_scenario(const CollisionParams& params);

/// One block per agent, each a 4-state EKF with c = I and nu I.
std::unique_ptr<EkfObserver> make_collision_observer(const CollisionScenario& scenario);

/// h1 = n.dv + 1/2 tr(H_d M) + d - D_s and its derivatives in the relative
/// coordinates (dp, dv) in R^4, where d = ||dp||, n = dp / d,
/// H_d = (I - n n^T) / d is the Hessian of the distance and M is the
/// position block of the relative diffusion covariance. This is the first
/// Ito lift of h0 = d - D_s.
struct LiftedPair {
    double value = 0.0;
    Eigen::Vector4d grad;
    Eigen::Matrix4d hess;
};

LiftedPair lifted_pair(const Eigen::Vector2d& dp, const Eigen::Vector2d& dv, const Eigen::Matrix2d& M,
                       double safe_distance);

/// lifted_pair for agents (i, j) as a function of the stacked state.
SafetyFunction lifted_pair_safety(int n_agents, int i, int j, const Eigen::Matrix2d& M, double safe_distance);

struct PairRowSettings {
    ControllerMode mode = ControllerMode::ZcbfComplete;
    double kappa = 1.0;
    double gamma = 0.0;
    /// Shrink of h0; the lift carries it unchanged to h1.
    double hbar_gamma = 0.0;
    ClassK alpha3 = ClassK::identity();
};

/// Appends one row per pair at `state`.
///
/// `diffusion[i]` is the 4 x 4 diffusion covariance of agent i's state as
/// seen by the controller (sigma sigma^T, or K nu nu^T K^T on the estimate);
/// the relative covariance of a pair is the sum of its two agents'.
/// `Kc[i]` is K_i c_i, needed by the incomplete modes.
/// Throws BoundaryError for the reciprocal modes when a lifted value is <= 0.
void collision_rows(const CollisionScenario& scenario, const PairRowSettings& settings, const Eigen::VectorXd& state,
                    const std::vector<Eigen::Matrix4d>& diffusion, const std::vector<Eigen::Matrix4d>* Kc,
                    std::vector<AffineInputConstraint>& rows);

/// Lemma-2 radius for the collision filter: lambda* is the sup of
/// lambda_max(P_t) along the per-agent Riccati flow over the horizon and
/// n is the full stacked dimension.
struct ErrorRadius {
    double lambda_star = 0.0;
    double gamma = 0.0;
    double hbar_gamma = 0.0;
};

ErrorRadius collision_error_radius(const CollisionScenario& scenario, double eps, double horizon, double dt);

/// Closed-loop policy for the collision scenario. Incomplete modes read the
/// gains from `observer`, which must be the one passed to simulate().
Policy make_collision_policy(const CollisionScenario& scenario, const PairRowSettings& settings,
                             TraceVariant trace, const EkfObserver* observer, FilterOptions options = {});

/// Calibration plant dx = u dt + sigma dW with h(x) = x and a constant
/// nominal input.
struct ScalarScenario {
    ControlAffineSystem system;
    SafetyFunction h;
    Eigen::VectorXd x0;
    double nominal_input = -2.0;
};

ScalarScenario build_scalar_scenario(double x0, double nominal_input, double sigma);

/// Baseline, ZCBF or RCBF filter on the scalar plant; other modes throw
/// ConfigError.
Policy make_scalar_policy(const ScalarScenario& scenario, ControllerMode mode, double kappa,
                          FilterOptions options = {});

}  // namespace stochcbf
