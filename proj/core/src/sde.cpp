#include "stochcbf/sde.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "stochcbf/errors.hpp"
#include "stochcbf/numdiff.hpp"

namespace stochcbf {

void LinearSystem::validate() const {
    if (F.rows() != F.cols()) throw DimensionMismatch("LinearSystem: F must be square");
    if (G.rows() != F.rows()) throw DimensionMismatch("LinearSystem: G must have n rows");
    if (sigma.rows() != F.rows()) throw DimensionMismatch("LinearSystem: sigma must have n rows");
}

ControlAffineSystem::ControlAffineSystem(int n, int m, int q, VectorField f, MatrixField g, MatrixField sigma,
                                         DriftJacobian drift_jacobian)
    : n_(n), m_(m), q_(q), f_(std::move(f)), g_(std::move(g)), sigma_(std::move(sigma)),
      jacobian_(std::move(drift_jacobian)) {
    if (n <= 0 || m < 0 || q < 0) throw DimensionMismatch("ControlAffineSystem: bad dimensions");
    if (!f_ || !g_ || !sigma_) throw ConfigError("ControlAffineSystem: f, g and sigma are required");
}

ControlAffineSystem::ControlAffineSystem(LinearSystem linear)
    : n_(linear.n()), m_(linear.m()), q_(linear.q()) {
    linear.validate();
    linear_ = std::move(linear);
}

Eigen::VectorXd ControlAffineSystem::f(const Eigen::VectorXd& x) const {
    if (linear_) return linear_->F * x;
    return f_(x);
}

Eigen::MatrixXd ControlAffineSystem::g(const Eigen::VectorXd& x) const {
    if (linear_) return linear_->G;
    return g_(x);
}

Eigen::MatrixXd ControlAffineSystem::sigma(const Eigen::VectorXd& x) const {
    if (linear_) return linear_->sigma;
    return sigma_(x);
}

Eigen::VectorXd ControlAffineSystem::drift(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (u.size() != m_) throw DimensionMismatch("drift: input has wrong size");
    if (linear_) {
        Eigen::VectorXd out = linear_->F * x;
        out.noalias() += linear_->G * u;
        return out;
    }
    Eigen::VectorXd out = f_(x);
    if (m_ > 0) out.noalias() += g_(x) * u;
    return out;
}

Eigen::MatrixXd ControlAffineSystem::drift_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (linear_) return linear_->F;
    if (jacobian_) return jacobian_(x, u);
    return numdiff::jacobian([this, &u](const Eigen::VectorXd& z) { return drift(z, u); }, x);
}

Eigen::VectorXd brownian_increments(int q, double dt, CounterRng& rng) {
    if (!(dt > 0.0)) throw ConfigError("brownian_increments: dt must be positive");
    const double scale = std::sqrt(dt);
    Eigen::VectorXd dW(q);
    for (int i = 0; i < q; ++i) dW[i] = scale * rng.normal();
    return dW;
}

Eigen::VectorXd em_step(const ControlAffineSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        double dt, const Eigen::VectorXd& dW, std::size_t step) {
    if (x.size() != sys.n()) throw DimensionMismatch("em_step: state has wrong size");
    if (u.size() != sys.m()) throw DimensionMismatch("em_step: input has wrong size");
    if (dW.size() != sys.q()) throw DimensionMismatch("em_step: noise increment has wrong size");

    Eigen::VectorXd next = x;
    if (const LinearSystem* lin = sys.linear()) {
        next.noalias() += dt * (lin->F * x);
        next.noalias() += dt * (lin->G * u);
        next.noalias() += lin->sigma * dW;
    } else {
        next.noalias() += dt * sys.drift(x, u);
        if (sys.q() > 0) next.noalias() += sys.sigma(x) * dW;
    }
    if (!next.allFinite()) throw IntegrationBlowup(step, "em_step: non-finite state");
    return next;
}

std::size_t step_count(double horizon, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    const double ratio = horizon / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(rounded);
    return static_cast<std::size_t>(std::ceil(ratio));
}

Trajectory simulate(const ControlAffineSystem& sys, const Policy& policy, const Eigen::VectorXd& x0,
                    const SimulationOptions& options) {
    const std::size_t steps = step_count(options.horizon, options.dt);
    if (steps > options.max_steps) throw ConfigError("simulate: horizon/dt exceeds the step budget");
    if (options.record_stride == 0) throw ConfigError("simulate: record_stride must be >= 1");
    if (x0.size() != sys.n()) throw DimensionMismatch("simulate: x0 has wrong size");
    if (!policy) throw ConfigError("simulate: policy is required");

    const double dt = options.dt;
    const std::size_t stride = options.record_stride;
    CounterRng rng(options.seed, options.stream);
    StateObserver* observer = options.observer;

    Trajectory traj;
    traj.dt = dt;
    RunSummary& summary = traj.summary;
    summary.steps = steps;
    if (options.margins) summary.min_margin_series.reserve(steps + 1);
    const std::size_t recorded = steps / stride + 2;
    traj.times.reserve(recorded);
    traj.states.reserve(recorded);

    Eigen::VectorXd x = x0;
    if (observer) observer->reset(x0);

    auto record_state = [&](std::size_t k, const Eigen::VectorXd& state) {
        Eigen::VectorXd margin;
        if (options.margins) {
            margin = options.margins(state);
            const double lowest = margin.size() > 0 ? margin.minCoeff() : std::numeric_limits<double>::infinity();
            summary.min_margin_series.push_back(lowest);
            summary.min_margin = std::min(summary.min_margin, lowest);
        }
        if (observer) {
            const double err = (state - observer->estimate()).norm();
            summary.max_estimation_error = std::max(summary.max_estimation_error, err);
        }
        if (k % stride == 0 || k == steps) {
            traj.times.push_back(static_cast<double>(k) * dt);
            traj.states.push_back(state);
            if (observer) traj.estimates.push_back(observer->estimate());
            if (options.margins) traj.margins.push_back(std::move(margin));
        }
    };

    record_state(0, x);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        PolicyOutput out = policy(observer ? observer->estimate() : x, t);
        if (out.u.size() != sys.m()) throw DimensionMismatch("simulate: policy returned wrong input size");

        const Eigen::VectorXd dW = brownian_increments(sys.q(), dt, rng);
        if (observer) observer->update(x, out.u, dt, rng);
        Eigen::VectorXd next = em_step(sys, x, out.u, dt, dW, k);
        if (next.lpNorm<Eigen::Infinity>() > options.blowup_threshold)
            throw IntegrationBlowup(k, "simulate: state exceeded the blow-up threshold");

        if (!out.feasible) ++summary.infeasible_steps;
        summary.deviation_sum += out.deviation;
        summary.deviation_max = std::max(summary.deviation_max, out.deviation);
        if (k % stride == 0) {
            traj.inputs.push_back(out.u);
            traj.feasible_flags.push_back(out.feasible);
            traj.deviations.push_back(out.deviation);
        }
        x = std::move(next);
        record_state(k + 1, x);
    }
    return traj;
}

}  // namespace stochcbf
