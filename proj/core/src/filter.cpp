#include "stochcbf/filter.hpp"

#include <utility>

#include "stochcbf/errors.hpp"

namespace stochcbf {

const char* to_string(ControllerMode mode) {
    switch (mode) {
        case ControllerMode::BaselineLinear: return "baseline_linear";
        case ControllerMode::ZcbfComplete: return "zcbf_complete";
        case ControllerMode::RcbfComplete: return "rcbf_complete";
        case ControllerMode::ZcbfIncomplete: return "zcbf_incomplete";
        case ControllerMode::RcbfIncomplete: return "rcbf_incomplete";
        case ControllerMode::SimplifiedCbf: return "simplified_cbf";
    }
    return "unknown";
}

ControllerMode parse_controller_mode(const std::string& name) {
    for (ControllerMode m : {ControllerMode::BaselineLinear, ControllerMode::ZcbfComplete, ControllerMode::RcbfComplete,
                             ControllerMode::ZcbfIncomplete, ControllerMode::RcbfIncomplete,
                             ControllerMode::SimplifiedCbf})
        if (name == to_string(m)) return m;
    throw ConfigError("unknown controller mode '" + name + "'");
}

bool uses_estimate(ControllerMode mode) {
    return mode == ControllerMode::ZcbfIncomplete || mode == ControllerMode::RcbfIncomplete ||
           mode == ControllerMode::SimplifiedCbf;
}

const char* to_string(TraceVariant variant) { return variant == TraceVariant::KNu ? "knu" : "sigma"; }

TraceVariant parse_trace_variant(const std::string& name) {
    if (name == "knu") return TraceVariant::KNu;
    if (name == "sigma") return TraceVariant::Sigma;
    throw ConfigError("unknown trace variant '" + name + "' (expected knu or sigma)");
}

const char* to_string(Fallback fallback) { return fallback == Fallback::Hold ? "hold" : "relax"; }

Fallback parse_fallback(const std::string& name) {
    if (name == "hold") return Fallback::Hold;
    if (name == "relax") return Fallback::Relax;
    throw ConfigError("unknown fallback '" + name + "' (expected hold or relax)");
}

namespace {

template <class T>
const T& require(const std::optional<T>& field, const char* name) {
    if (!field) throw MissingContext(std::string("table1_constraint: missing ") + name);
    return *field;
}

Eigen::MatrixXd incomplete_diffusion(const Table1Context& ctx) {
    if (ctx.trace == TraceVariant::Sigma) return ctx.system->sigma(ctx.x);
    return require(ctx.K, "K") * require(ctx.nu, "nu");
}

double robustness(const Eigen::VectorXd& grad, const Table1Context& ctx, double gamma) {
    const Eigen::MatrixXd& K = require(ctx.K, "K");
    const Eigen::MatrixXd& c = require(ctx.c, "c");
    if (K.rows() != grad.size() || c.rows() != K.cols()) throw DimensionMismatch("table1_constraint: bad K or c");
    return gamma * (grad.transpose() * K * c).norm();
}

}  // namespace

AffineInputConstraint table1_constraint(ControllerMode mode, const Table1Context& ctx) {
    if (!ctx.system) throw MissingContext("table1_constraint: missing system");
    const ControlAffineSystem& sys = *ctx.system;
    if (ctx.x.size() != sys.n()) throw DimensionMismatch("table1_constraint: state has wrong size");

    switch (mode) {
        case ControllerMode::BaselineLinear:
            throw ConfigError("table1_constraint: baseline_linear has no constraint row");
        case ControllerMode::ZcbfComplete:
            return zcbf_constraint(sys, require(ctx.h, "h"), ctx.x, ctx.kappa);
        case ControllerMode::RcbfComplete:
            return rcbf_constraint(sys, ReciprocalBarrier(require(ctx.h, "h")), ctx.alpha3, ctx.x);
        case ControllerMode::SimplifiedCbf: {
            const SafetyFunction& h = require(ctx.h, "h");
            const Eigen::VectorXd grad = h.grad(ctx.x);
            AffineInputConstraint row;
            row.a = sys.g(ctx.x).transpose() * grad;
            row.b = -grad.dot(sys.f(ctx.x)) - ctx.kappa * h.value(ctx.x);
            return row;
        }
        case ControllerMode::ZcbfIncomplete: {
            const ShrunkSafety& s = require(ctx.shrunk, "shrunk safety function");
            const Eigen::VectorXd grad = s.hhat.grad(ctx.x);
            AffineInputConstraint row;
            row.a = sys.g(ctx.x).transpose() * grad;
            row.b = -grad.dot(sys.f(ctx.x)) + robustness(grad, ctx, s.gamma) -
                    0.5 * ito_trace(incomplete_diffusion(ctx), s.hhat.hess(ctx.x)) - ctx.kappa * s.hhat.value(ctx.x);
            return row;
        }
        case ControllerMode::RcbfIncomplete: {
            const ShrunkSafety& s = require(ctx.shrunk, "shrunk safety function");
            const ReciprocalBarrier B(s.hhat);
            const Eigen::VectorXd grad = B.grad(ctx.x);
            AffineInputConstraint row;
            row.sense = Sense::LessEqual;
            row.a = sys.g(ctx.x).transpose() * grad;
            row.b = ctx.alpha3(s.hhat.value(ctx.x)) - grad.dot(sys.f(ctx.x)) - robustness(grad, ctx, s.gamma) -
                    0.5 * ito_trace(incomplete_diffusion(ctx), B.hess(ctx.x));
            return row;
        }
    }
    throw ConfigError("table1_constraint: unknown mode");
}

SafetyFilter::SafetyFilter(NominalLaw nominal, std::vector<ConstraintBuilder> safety_rows,
                           std::vector<ConstraintBuilder> clf_rows, FilterOptions options)
    : nominal_(std::move(nominal)), safety_(std::move(safety_rows)), clf_(std::move(clf_rows)), options_(options) {
    if (!nominal_) throw ConfigError("SafetyFilter: nominal law is required");
    problem_.soft_weight = options_.clf_weight;
}

void SafetyFilter::reset() {
    warm_.active_set.clear();
    held_.reset();
    last_ = QpResult{};
}

PolicyOutput SafetyFilter::operator()(const Eigen::VectorXd& state, double t) {
    problem_.u_nom = nominal_(state, t);
    problem_.constraints.clear();
    problem_.soft_constraints.clear();

    PolicyOutput out;
    auto hold = [&] {
        out.u = held_ ? *held_ : Eigen::VectorXd::Zero(problem_.u_nom.size());
        out.feasible = false;
        out.deviation = (out.u - problem_.u_nom).norm();
        last_ = QpResult{QpStatus::Infeasible, out.u, {}, 0.0, 0.0, 0};
        warm_.active_set.clear();
        return out;
    };

    try {
        for (const auto& build : safety_) build(state, t, problem_.constraints);
        for (const auto& build : clf_) build(state, t, options_.strict_clf ? problem_.constraints : problem_.soft_constraints);
    } catch (const BoundaryError&) {
        return hold();
    }

    QpOptions qp_options;
    qp_options.relax_on_infeasible = options_.fallback == Fallback::Relax;
    last_ = solve_qp(problem_, qp_options, options_.warm_start ? &warm_ : nullptr);
    if (last_.status == QpStatus::Infeasible) return hold();

    out.u = last_.u;
    out.feasible = last_.status == QpStatus::Optimal;
    out.deviation = (out.u - problem_.u_nom).norm();
    if (out.feasible) held_ = out.u;
    return out;
}

Policy safety_filter_policy(NominalLaw nominal, std::vector<ConstraintBuilder> safety_rows, Fallback fallback) {
    FilterOptions options;
    options.fallback = fallback;
    auto filter = std::make_shared<SafetyFilter>(std::move(nominal), std::move(safety_rows),
                                                 std::vector<ConstraintBuilder>{}, options);
    return [filter](const Eigen::VectorXd& state, double t) { return (*filter)(state, t); };
}

}  // namespace stochcbf
