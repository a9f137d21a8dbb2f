#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "stochcbf/rng.hpp"

namespace stochcbf {

/// dx = F x dt + G u dt + sigma dW with constant matrices.
struct LinearSystem {
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;
    Eigen::MatrixXd sigma;

    int n() const { return static_cast<int>(F.rows()); }
    int m() const { return static_cast<int>(G.cols()); }
    int q() const { return static_cast<int>(sigma.cols()); }

    /// Throws DimensionMismatch unless F is n x n, G is n x m, sigma is n x q.
    void validate() const;
};

/// Controlled Ito SDE  dx = (f(x) + g(x) u) dt + sigma(x) dW.
///
/// Evaluators must be deterministic and return finite values of the declared
/// shapes. Systems built from a LinearSystem keep the matrices and skip the
/// std::function indirection on the hot path.
class ControlAffineSystem {
public:
    using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using MatrixField = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
    /// Jacobian of f(x) + g(x) u with respect to x.
    using DriftJacobian = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

    ControlAffineSystem(int n, int m, int q, VectorField f, MatrixField g, MatrixField sigma,
                        DriftJacobian drift_jacobian = {});
    explicit ControlAffineSystem(LinearSystem linear);

    int n() const { return n_; }
    int m() const { return m_; }
    int q() const { return q_; }

    Eigen::VectorXd f(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd g(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd sigma(const Eigen::VectorXd& x) const;

    /// f(x) + g(x) u
    Eigen::VectorXd drift(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

    /// Closed form when available, otherwise central differences of drift().
    Eigen::MatrixXd drift_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

    const LinearSystem* linear() const { return linear_ ? &*linear_ : nullptr; }

private:
    int n_, m_, q_;
    VectorField f_;
    MatrixField g_;
    MatrixField sigma_;
    DriftJacobian jacobian_;
    std::optional<LinearSystem> linear_;
};

/// q independent N(0, dt) samples drawn from rng.
Eigen::VectorXd brownian_increments(int q, double dt, CounterRng& rng);

/// One Euler-Maruyama step: x + (f(x) + g(x) u) dt + sigma(x) dW.
/// Throws IntegrationBlowup (tagged with `step`) on a non-finite result.
Eigen::VectorXd em_step(const ControlAffineSystem& sys, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u, double dt, const Eigen::VectorXd& dW,
                        std::size_t step = 0);

struct PolicyOutput {
    Eigen::VectorXd u;
    bool feasible = true;
    /// ||u - u_nominal||_2 when the policy filters a nominal law.
    double deviation = 0.0;
};

using Policy = std::function<PolicyOutput(const Eigen::VectorXd& state, double t)>;

/// Returns the value of every registered safety function at x.
using MarginSet = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

/// Supplies the state the policy sees when it is not the true state.
class StateObserver {
public:
    virtual ~StateObserver() = default;
    virtual void reset(const Eigen::VectorXd& x0) = 0;
    virtual const Eigen::VectorXd& estimate() const = 0;
    /// Advance over [t, t + dt]: x is the true state at t, u the applied input.
    /// Measurement noise is drawn from rng.
    virtual void update(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt, CounterRng& rng) = 0;
};

struct SimulationOptions {
    double horizon = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    /// Store every k-th sample in the Trajectory; summaries use every step.
    std::size_t record_stride = 1;
    MarginSet margins;
    StateObserver* observer = nullptr;
    std::size_t max_steps = 100'000'000;
    double blowup_threshold = 1e9;
};

/// Per-run statistics accumulated at every step regardless of record_stride.
struct RunSummary {
    std::size_t steps = 0;
    /// min over margins at each of the steps + 1 sampled states.
    std::vector<double> min_margin_series;
    double min_margin = std::numeric_limits<double>::infinity();
    std::size_t infeasible_steps = 0;
    double deviation_sum = 0.0;
    double deviation_max = 0.0;
    /// sup_t ||x_t - xhat_t||_2; zero without an observer.
    double max_estimation_error = 0.0;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> estimates;
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::VectorXd> margins;
    std::vector<bool> feasible_flags;
    std::vector<double> deviations;
    RunSummary summary;
};

/// ceil(horizon / dt) with a relative guard against round-off.
std::size_t step_count(double horizon, double dt);

/// Closed-loop Euler-Maruyama run. The policy is queried once per step with
/// the observer's estimate if one is attached, otherwise with the true state.
/// Identical inputs give a bitwise-identical Trajectory.
Trajectory simulate(const ControlAffineSystem& sys, const Policy& policy, const Eigen::VectorXd& x0,
                    const SimulationOptions& options);

}  // namespace stochcbf
