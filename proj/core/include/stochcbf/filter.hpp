#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochcbf/cbf.hpp"
#include "stochcbf/estimator.hpp"
#include "stochcbf/qp.hpp"
#include "stochcbf/safety.hpp"
#include "stochcbf/sde.hpp"

namespace stochcbf {

/// Controller families. The four CBF rows, the unfiltered nominal law, and
/// the deterministic ZCBF evaluated on the estimate (no trace, no shrink).
enum class ControllerMode {
    BaselineLinear,
    ZcbfComplete,
    RcbfComplete,
    ZcbfIncomplete,
    RcbfIncomplete,
    SimplifiedCbf,
};

const char* to_string(ControllerMode mode);
/// Throws ConfigError for unknown names.
ControllerMode parse_controller_mode(const std::string& name);
bool uses_estimate(ControllerMode mode);

/// Diffusion used in the trace term of the incomplete-information rows:
/// K nu (the estimate's own noise) or the plant's sigma.
enum class TraceVariant { KNu, Sigma };

const char* to_string(TraceVariant variant);
TraceVariant parse_trace_variant(const std::string& name);

/// Inputs of table1_constraint. `x` is the true state in complete modes and
/// the estimate otherwise.
struct Table1Context {
    const ControlAffineSystem* system = nullptr;
    Eigen::VectorXd x;
    /// Complete modes and SimplifiedCbf.
    std::optional<SafetyFunction> h;
    /// Incomplete modes: hhat and gamma.
    std::optional<ShrunkSafety> shrunk;
    std::optional<Eigen::MatrixXd> K;
    std::optional<Eigen::MatrixXd> c;
    std::optional<Eigen::MatrixXd> nu;
    TraceVariant trace = TraceVariant::KNu;
    double kappa = 1.0;
    ClassK alpha3 = ClassK::identity();
};

/// One row of the CBF table.
///   ZcbfIncomplete:  dhhat/dx g u >= -dhhat/dx f + gamma ||dhhat/dx K c|| - 1/2 tr(D) - kappa hhat
///   RcbfIncomplete:  dB/dx g u <= alpha3(hhat) - dB/dx f - gamma ||dB/dx K c|| - 1/2 tr(D'),  B = 1/hhat
/// with D = S^T H S and S = K nu or sigma. Throws MissingContext when a
/// required field is absent and ConfigError for BaselineLinear.
AffineInputConstraint table1_constraint(ControllerMode mode, const Table1Context& ctx);

enum class Fallback { Hold, Relax };

const char* to_string(Fallback fallback);
Fallback parse_fallback(const std::string& name);

/// Appends the rows valid at (state, t).
using ConstraintBuilder =
    std::function<void(const Eigen::VectorXd& state, double t, std::vector<AffineInputConstraint>& rows)>;
using NominalLaw = std::function<Eigen::VectorXd(const Eigen::VectorXd& state, double t)>;

struct FilterOptions {
    Fallback fallback = Fallback::Relax;
    /// CLF rows enter as soft rows unless strict.
    bool strict_clf = false;
    double clf_weight = 1e3;
    bool warm_start = true;
};

/// Minimum-deviation QP filter around a nominal law.
///
/// A step is infeasible when the hard rows have no common point or a
/// builder throws BoundaryError (a reciprocal barrier evaluated outside
/// its domain). Relax then applies the minimum-violation input; Hold
/// reapplies the last feasible input (zero before the first one). A
/// boundary error always holds, since no rows exist to relax.
class SafetyFilter {
public:
    SafetyFilter(NominalLaw nominal, std::vector<ConstraintBuilder> safety_rows,
                 std::vector<ConstraintBuilder> clf_rows = {}, FilterOptions options = {});

    PolicyOutput operator()(const Eigen::VectorXd& state, double t);

    /// Forget the held input and the warm start.
    void reset();

    const QpResult& last_result() const { return last_; }

private:
    NominalLaw nominal_;
    std::vector<ConstraintBuilder> safety_;
    std::vector<ConstraintBuilder> clf_;
    FilterOptions options_;
    QpWarmStart warm_;
    QpResult last_;
    std::optional<Eigen::VectorXd> held_;
    QpProblem problem_;
};

/// Policy closure over a shared SafetyFilter.
Policy safety_filter_policy(NominalLaw nominal, std::vector<ConstraintBuilder> safety_rows,
                            Fallback fallback = Fallback::Relax);

}  // namespace stochcbf
