#include "stochcbf/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "stochcbf/errors.hpp"

namespace stochcbf {

namespace {

LinearSystem double_integrator_agent(double sigma_p, double sigma_v) {
    LinearSystem s;
    s.F = Eigen::MatrixXd::Zero(4, 4);
    s.F.topRightCorner(2, 2).setIdentity();
    s.G = Eigen::MatrixXd::Zero(4, 2);
    s.G.bottomRows(2).setIdentity();
    s.sigma = Eigen::MatrixXd::Zero(4, 4);
    s.sigma.diagonal() << sigma_p, sigma_p, sigma_v, sigma_v;
    return s;
}

LinearSystem stack_agents(const LinearSystem& agent, int count) {
    LinearSystem s;
    s.F = Eigen::MatrixXd::Zero(4 * count, 4 * count);
    s.G = Eigen::MatrixXd::Zero(4 * count, 2 * count);
    s.sigma = Eigen::MatrixXd::Zero(4 * count, 4 * count);
    for (int i = 0; i < count; ++i) {
        s.F.block(4 * i, 4 * i, 4, 4) = agent.F;
        s.G.block(4 * i, 2 * i, 4, 2) = agent.G;
        s.sigma.block(4 * i, 4 * i, 4, 4) = agent.sigma;
    }
    return s;
}

void check_params(const CollisionParams& p) {
    if (p.n_agents < 2) throw ConfigError("collision scenario needs at least two agents");
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(p.rho, "rho");
    positive(p.safe_distance, "safe_distance");
    positive(p.k1, "k1");
    positive(p.k2, "k2");
    positive(p.sigma_p, "sigma_p");
    positive(p.sigma_v, "sigma_v");
    positive(p.nu, "nu");
}

Eigen::Vector2d relative(const Eigen::VectorXd& x, int i, int j, int offset) {
    return x.segment<2>(4 * i + offset) - x.segment<2>(4 * j + offset);
}

}  // namespace

CollisionScenario build_collision_scenario(const CollisionParams& params) {
    check_params(params);
    const int N = params.n_agents;
    const LinearSystem agent = double_integrator_agent(params.sigma_p, params.sigma_v);
    CollisionScenario sc{params, agent, ControlAffineSystem(stack_agents(agent, N)), Eigen::VectorXd::Zero(4 * N),
                         Eigen::Matrix2Xd(2, N), {}};
    for (int i = 0; i < N; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / N;
        const Eigen::Vector2d p(params.rho * std::cos(theta), params.rho * std::sin(theta));
        sc.x0.segment<2>(4 * i) = p;
        sc.goals.col(i) = -p;
    }
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            if (relative(sc.x0, i, j, 0).norm() < params.safe_distance)
                throw ConfigError("agents " + std::to_string(i) + " and " + std::to_string(j) +
                                  " start closer than the safe distance");
            sc.pairs.emplace_back(i, j);
        }
    return sc;
}

Eigen::VectorXd CollisionScenario::nominal(const Eigen::VectorXd& x) const {
    const int N = n_agents();
    Eigen::VectorXd u(2 * N);
    for (int i = 0; i < N; ++i)
        u.segment<2>(2 * i) = -params.k1 * (x.segment<2>(4 * i) - goals.col(i)) - params.k2 * x.segment<2>(4 * i + 2);
    return u;
}

Eigen::VectorXd CollisionScenario::margins(const Eigen::VectorXd& x) const {
    Eigen::VectorXd h(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k)
        h[static_cast<Eigen::Index>(k)] = relative(x, pairs[k].first, pairs[k].second, 0).norm() - params.safe_distance;
    return h;
}

Eigen::VectorXd CollisionScenario::agent_margins(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(n_agents(), std::numeric_limits<double>::infinity());
    const Eigen::VectorXd h = margins(x);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double v = h[static_cast<Eigen::Index>(k)];
        out[pairs[k].first] = std::min(out[pairs[k].first], v);
        out[pairs[k].second] = std::min(out[pairs[k].second], v);
    }
    return out;
}

SafetyFunction CollisionScenario::pair_safety(std::size_t pair) const {
    const auto [i, j] = pairs.at(pair);
    return pairwise_distance_safety(4 * n_agents(), 4 * i, 4 * j, 2, params.safe_distance);
}

Eigen::Matrix4d CollisionScenario::agent_diffusion_covariance() const {
    const Eigen::MatrixXd S = agent.sigma * agent.sigma.transpose();
    return S;
}

std::unique_ptr<EkfObserver> make_collision_observer(const CollisionScenario& scenario) {
    std::vector<EkfObserver::Block> blocks;
    const ObservationModel obs(Eigen::MatrixXd::Identity(4, 4), scenario.params.nu * Eigen::MatrixXd::Identity(4, 4));
    for (int i = 0; i < scenario.n_agents(); ++i)
        blocks.push_back(EkfObserver::Block{ControlAffineSystem(scenario.agent), obs, 4 * i, 2 * i});
    return std::make_unique<EkfObserver>(std::move(blocks));
}

LiftedPair lifted_pair(const Eigen::Vector2d& dp, const Eigen::Vector2d& dv, const Eigen::Matrix2d& M,
                       double safe_distance) {
    const double d = dp.norm();
    if (!(d > 0.0)) throw BoundaryError("lifted_pair: coincident positions");
    const Eigen::Vector2d& x = dp;
    const Eigen::Vector2d& w = dv;
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    const double d3 = d * d * d, d5 = d3 * d * d, d7 = d5 * d * d;
    const double s = x.dot(w);
    const double q = x.dot(M * x);
    const double trM = M.trace();
    const Eigen::Vector2d n = x / d;
    const Eigen::Matrix2d xxT = x * x.transpose();
    const Eigen::Matrix2d proj = (I - n * n.transpose()) / d;

    LiftedPair out;
    out.value = s / d + 0.5 * (trM / d - q / d3) + d - safe_distance;

    const Eigen::Vector2d gx = n + w / d - s * x / d3 - 0.5 * trM * x / d3 - (M * x / d3 - 1.5 * q * x / d5);
    out.grad << gx, n;

    const Eigen::Matrix2d Mx_xT = M * xxT;
    const Eigen::Matrix2d Hxx = proj - (w * x.transpose() + x * w.transpose()) / d3 - s * I / d3 + 3.0 * s * xxT / d5 +
                                0.5 * trM * (-I / d3 + 3.0 * xxT / d5) -
                                0.5 * (2.0 * M / d3 - 6.0 * (Mx_xT + Mx_xT.transpose()) / d5 - 3.0 * q * I / d5 +
                                       15.0 * q * xxT / d7);
    out.hess.setZero();
    out.hess.topLeftCorner<2, 2>() = Hxx;
    out.hess.topRightCorner<2, 2>() = proj;
    out.hess.bottomLeftCorner<2, 2>() = proj;
    return out;
}

SafetyFunction lifted_pair_safety(int n_agents, int i, int j, const Eigen::Matrix2d& M, double safe_distance) {
    if (i < 0 || j < 0 || i >= n_agents || j >= n_agents || i == j)
        throw ConfigError("lifted_pair_safety: bad agent indices");
    auto eval = [=](const Eigen::VectorXd& x) {
        return lifted_pair(relative(x, i, j, 0), relative(x, i, j, 2), M, safe_distance);
    };
    return SafetyFunction(
        [eval](const Eigen::VectorXd& x) { return eval(x).value; },
        [eval, n_agents, i, j](const Eigen::VectorXd& x) {
            const LiftedPair L = eval(x);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(4 * n_agents);
            g.segment<4>(4 * i) = L.grad;
            g.segment<4>(4 * j) = -L.grad;
            return g;
        },
        [eval, n_agents, i, j](const Eigen::VectorXd& x) {
            const LiftedPair L = eval(x);
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4 * n_agents, 4 * n_agents);
            H.block<4, 4>(4 * i, 4 * i) = L.hess;
            H.block<4, 4>(4 * j, 4 * j) = L.hess;
            H.block<4, 4>(4 * i, 4 * j) = -L.hess;
            H.block<4, 4>(4 * j, 4 * i) = -L.hess;
            return H;
        });
}

void collision_rows(const CollisionScenario& scenario, const PairRowSettings& settings, const Eigen::VectorXd& state,
                    const std::vector<Eigen::Matrix4d>& diffusion, const std::vector<Eigen::Matrix4d>* Kc,
                    std::vector<AffineInputConstraint>& rows) {
    const ControllerMode mode = settings.mode;
    if (mode == ControllerMode::BaselineLinear) return;
    const int N = scenario.n_agents();
    if (state.size() != 4 * N || static_cast<int>(diffusion.size()) != N)
        throw DimensionMismatch("collision_rows: state or diffusion has wrong size");
    const bool incomplete = mode == ControllerMode::ZcbfIncomplete || mode == ControllerMode::RcbfIncomplete;
    const bool reciprocal = mode == ControllerMode::RcbfComplete || mode == ControllerMode::RcbfIncomplete;
    if (incomplete && (!Kc || static_cast<int>(Kc->size()) != N))
        throw MissingContext("collision_rows: incomplete modes need K c for every agent");
    const double shift = incomplete ? settings.hbar_gamma : 0.0;

    for (const auto& [i, j] : scenario.pairs) {
        const Eigen::Vector2d dv = relative(state, i, j, 2);
        const Eigen::Matrix4d W = diffusion[i] + diffusion[j];
        const LiftedPair L = lifted_pair(relative(state, i, j, 0), dv, W.topLeftCorner<2, 2>(),
                                         scenario.params.safe_distance);
        const double h = L.value - shift;

        Eigen::Vector4d grad = L.grad;
        Eigen::Matrix4d hess = L.hess;
        AffineInputConstraint row;
        if (reciprocal) {
            if (!(h > 0.0)) throw BoundaryError("collision_rows: reciprocal barrier outside its domain");
            hess = 2.0 * grad * grad.transpose() / (h * h * h) - hess / (h * h);
            grad = -grad / (h * h);
            row.sense = Sense::LessEqual;
            row.b = settings.alpha3(h);
        } else {
            row.b = -settings.kappa * h;
        }
        row.b -= grad.head<2>().dot(dv) + 0.5 * hess.cwiseProduct(W).sum();
        if (incomplete) {
            const double spread = std::sqrt((grad.transpose() * (*Kc)[i]).squaredNorm() +
                                            (grad.transpose() * (*Kc)[j]).squaredNorm());
            row.b += (reciprocal ? -1.0 : 1.0) * settings.gamma * spread;
        }
        row.a = Eigen::VectorXd::Zero(2 * N);
        row.a.segment<2>(2 * i) = grad.tail<2>();
        row.a.segment<2>(2 * j) = -grad.tail<2>();
        rows.push_back(std::move(row));
    }
}

ErrorRadius collision_error_radius(const CollisionScenario& scenario, double eps, double horizon, double dt) {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
    const double nu2 = scenario.params.nu * scenario.params.nu;
    ErrorRadius r;
    r.lambda_star = calibrate_lambda_star(scenario.agent.F, I, scenario.agent.sigma * scenario.agent.sigma.transpose(),
                                          nu2 * I, 1e-12 * I, dt, horizon);
    const int n = 4 * scenario.n_agents();
    r.gamma = gamma_lti(r.lambda_star, n, eps);
    r.hbar_gamma = shrink(scenario.pair_safety(0), PairwiseShrink::stacked(n, 0, 4, 2, scenario.params.safe_distance),
                          r.gamma)
                       .hbar_gamma;
    return r;
}

Policy make_collision_policy(const CollisionScenario& scenario, const PairRowSettings& settings,
                             TraceVariant trace, const EkfObserver* observer, FilterOptions options) {
    const ControllerMode mode = settings.mode;
    const bool incomplete = mode == ControllerMode::ZcbfIncomplete || mode == ControllerMode::RcbfIncomplete;
    if (incomplete && !observer) throw MissingContext("make_collision_policy: incomplete modes need an observer");

    auto sc = std::make_shared<const CollisionScenario>(scenario);
    NominalLaw nominal = [sc](const Eigen::VectorXd& x, double) { return sc->nominal(x); };
    std::vector<ConstraintBuilder> builders;
    if (mode != ControllerMode::BaselineLinear) {
        const int N = sc->n_agents();
        const Eigen::Matrix4d plant = sc->agent_diffusion_covariance();
        const Eigen::Matrix4d none = Eigen::Matrix4d::Zero();
        builders.push_back([sc, settings, trace, observer, incomplete, plant, none, N](
                               const Eigen::VectorXd& state, double, std::vector<AffineInputConstraint>& rows) {
            std::vector<Eigen::Matrix4d> diffusion(static_cast<std::size_t>(N),
                                                   settings.mode == ControllerMode::SimplifiedCbf ? none : plant);
            std::vector<Eigen::Matrix4d> Kc;
            if (incomplete) {
                Kc.resize(static_cast<std::size_t>(N));
                for (int i = 0; i < N; ++i) {
                    const auto& block = observer->block(static_cast<std::size_t>(i));
                    const Eigen::MatrixXd& K = observer->block_state(static_cast<std::size_t>(i)).K;
                    Kc[static_cast<std::size_t>(i)] = K * block.observation.c();
                    if (trace == TraceVariant::KNu) {
                        const Eigen::MatrixXd Knu = K * block.observation.nu();
                        diffusion[static_cast<std::size_t>(i)] = Knu * Knu.transpose();
                    }
                }
            }
            collision_rows(*sc, settings, state, diffusion, incomplete ? &Kc : nullptr, rows);
        });
    }
    auto filter = std::make_shared<SafetyFilter>(std::move(nominal), std::move(builders),
                                                 std::vector<ConstraintBuilder>{}, options);
    return [filter](const Eigen::VectorXd& state, double t) { return (*filter)(state, t); };
}

ScalarScenario build_scalar_scenario(double x0, double nominal_input, double sigma) {
    if (!(sigma >= 0.0)) throw ConfigError("scalar scenario: sigma must be >= 0");
    LinearSystem s{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Constant(1, 1, sigma)};
    return ScalarScenario{ControlAffineSystem(std::move(s)), affine_safety(Eigen::VectorXd::Ones(1), 0.0),
                          Eigen::VectorXd::Constant(1, x0), nominal_input};
}

Policy make_scalar_policy(const ScalarScenario& scenario, ControllerMode mode, double kappa, FilterOptions options) {
    auto sc = std::make_shared<const ScalarScenario>(scenario);
    NominalLaw nominal = [sc](const Eigen::VectorXd&, double) {
        return Eigen::VectorXd::Constant(1, sc->nominal_input);
    };
    std::vector<ConstraintBuilder> builders;
    switch (mode) {
        case ControllerMode::BaselineLinear: break;
        case ControllerMode::ZcbfComplete:
            builders.push_back([sc, kappa](const Eigen::VectorXd& x, double, std::vector<AffineInputConstraint>& rows) {
                rows.push_back(zcbf_constraint(sc->system, sc->h, x, kappa));
            });
            break;
        case ControllerMode::RcbfComplete:
            builders.push_back([sc](const Eigen::VectorXd& x, double, std::vector<AffineInputConstraint>& rows) {
                rows.push_back(rcbf_constraint(sc->system, ReciprocalBarrier(sc->h), ClassK::identity(), x));
            });
            break;
        default:
            throw ConfigError(std::string("scalar scenario does not support mode ") + to_string(mode));
    }
    auto filter = std::make_shared<SafetyFilter>(std::move(nominal), std::move(builders),
                                                 std::vector<ConstraintBuilder>{}, options);
    return [filter](const Eigen::VectorXd& state, double t) { return (*filter)(state, t); };
}

}  // namespace stochcbf
