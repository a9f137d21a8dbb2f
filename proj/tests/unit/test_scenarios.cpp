#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stochcbf/errors.hpp"
#include "stochcbf/scenarios.hpp"
#include "stochcbf_verify/oracles.hpp"

using namespace stochcbf;

TEST(CollisionScenario, TwoAntipodalAgents) {
    CollisionParams p;
    p.n_agents = 2;
    const CollisionScenario sc = build_collision_scenario(p);
    ASSERT_EQ(sc.pairs.size(), 1u);
    EXPECT_NEAR(sc.margins(sc.x0)[0], 290.0, 1e-12);
    EXPECT_NEAR(sc.goals(0, 0), -150.0, 1e-12);
    EXPECT_EQ(sc.system.n(), 8);
    EXPECT_EQ(sc.system.m(), 4);
}

TEST(CollisionScenario, DefaultsAndPairCount) {
    const CollisionScenario sc = build_collision_scenario({});
    EXPECT_EQ(sc.n_agents(), 10);
    EXPECT_EQ(sc.pairs.size(), 45u);
    EXPECT_EQ(sc.margins(sc.x0).size(), 45);
    EXPECT_GT(sc.margins(sc.x0).minCoeff(), 0.0);
    for (int i = 0; i < 10; ++i) {
        EXPECT_NEAR(sc.x0.segment(4 * i, 2).norm(), 150.0, 1e-12);
        EXPECT_NEAR((sc.goals.col(i) + sc.x0.segment(4 * i, 2)).norm(), 0.0, 1e-12);
    }
}

TEST(CollisionScenario, NominalLaw) {
    CollisionParams p;
    p.n_agents = 2;
    const CollisionScenario sc = build_collision_scenario(p);
    Eigen::VectorXd x = sc.x0;
    x.segment(2, 2) = Eigen::Vector2d(1.0, -2.0);
    const Eigen::VectorXd u = sc.nominal(x);
    // -k1 (p - r) - k2 v with p = (150, 0), r = (-150, 0).
    EXPECT_NEAR(u[0], -300.0 - 2.0, 1e-12);
    EXPECT_NEAR(u[1], 4.0, 1e-12);
}

TEST(CollisionScenario, RejectsBadConfigs) {
    CollisionParams p;
    p.n_agents = 1;
    EXPECT_THROW(build_collision_scenario(p), ConfigError);
    p.n_agents = 10;
    p.rho = 10.0;
    EXPECT_THROW(build_collision_scenario(p), ConfigError);
    p.rho = 150.0;
    p.sigma_v = 0.0;
    EXPECT_THROW(build_collision_scenario(p), ConfigError);
}

TEST(LiftedPair, HeadOnValue) {
    const Eigen::Matrix2d M = 2.0 * Eigen::Matrix2d::Identity();
    const LiftedPair lp = lifted_pair(Eigen::Vector2d(20, 0), Eigen::Vector2d(-3, 0), M, 10.0);
    // w + 1/2 tr(H_d M) + d - D_s with tr(H_d M) = 2/d.
    EXPECT_NEAR(lp.value, -3.0 + 1.0 / 20.0 + 10.0, 1e-14);
    EXPECT_THROW(lifted_pair(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), M, 10.0), BoundaryError);
}

TEST(LiftedPair, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 gen(12);
    for (int k = 0; k < 100; ++k) {
        const Eigen::MatrixXd L = verify::random_matrix(gen, 2, 2);
        const Eigen::Matrix2d M = L * L.transpose();
        Eigen::Vector4d z = 10.0 * verify::random_matrix(gen, 4, 1).col(0);
        if (z.head<2>().norm() < 2.0) z.head<2>() += Eigen::Vector2d(5, 5);
        const verify::ScalarFn fn = [&M](const Eigen::VectorXd& v) {
            return lifted_pair(v.head<2>(), v.tail<2>(), M, 10.0).value;
        };
        const LiftedPair lp = lifted_pair(z.head<2>(), z.tail<2>(), M, 10.0);
        EXPECT_LT(verify::scaled_error(verify::fd_gradient(fn, z, 1e-6), lp.grad), 1e-6);
        EXPECT_LT(verify::scaled_error(verify::fd_hessian(fn, z, 1e-3), lp.hess), 1e-4);
    }
}

TEST(LiftedPair, IsTheItoLiftOfTheDistance) {
    // h1 = dh0/dx f + 1/2 tr(sigma^T d2h0/dx2 sigma) + h0 on the stacked two-agent system.
    CollisionParams p;
    p.n_agents = 2;
    p.sigma_p = 0.7;
    p.sigma_v = 1.3;
    const CollisionScenario sc = build_collision_scenario(p);
    const SafetyFunction h0 = sc.pair_safety(0);
    const Eigen::Matrix2d M = 2.0 * sc.agent_diffusion_covariance().topLeftCorner<2, 2>();
    const SafetyFunction h1 = lifted_pair_safety(2, 0, 1, M, 10.0);
    std::mt19937_64 gen(3);
    for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd x = sc.x0 + 20.0 * verify::random_matrix(gen, 8, 1).col(0);
        const Eigen::MatrixXd S = sc.system.sigma(x);
        const double lift = h0.grad(x).dot(sc.system.f(x)) + 0.5 * (S.transpose() * h0.hess(x) * S).trace() + h0(x);
        EXPECT_NEAR(h1(x), lift, 1e-10);
    }
}

TEST(CollisionRows, CompleteRowEqualsGenericZcbfOfLift) {
    CollisionParams p;
    p.n_agents = 3;
    const CollisionScenario sc = build_collision_scenario(p);
    const std::vector<Eigen::Matrix4d> diffusion(3, sc.agent_diffusion_covariance());
    const Eigen::Matrix2d M = 2.0 * sc.agent_diffusion_covariance().topLeftCorner<2, 2>();
    std::mt19937_64 gen(9);
    for (int k = 0; k < 10; ++k) {
        const Eigen::VectorXd x = sc.x0 + 10.0 * verify::random_matrix(gen, 12, 1).col(0);
        PairRowSettings settings;
        settings.kappa = 1.5;
        std::vector<AffineInputConstraint> rows;
        collision_rows(sc, settings, x, diffusion, nullptr, rows);
        ASSERT_EQ(rows.size(), 3u);
        for (std::size_t q = 0; q < sc.pairs.size(); ++q) {
            const auto [i, j] = sc.pairs[q];
            const AffineInputConstraint ref =
                zcbf_constraint(sc.system, lifted_pair_safety(3, i, j, M, 10.0), x, 1.5);
            EXPECT_LT((rows[q].a - ref.a).norm(), 1e-10);
            EXPECT_NEAR(rows[q].b, ref.b, 1e-9 * std::max(1.0, std::abs(ref.b)));
        }
    }
}

TEST(CollisionRows, IncompleteRowsAreTighter) {
    CollisionParams p;
    p.n_agents = 2;
    const CollisionScenario sc = build_collision_scenario(p);
    const std::vector<Eigen::Matrix4d> diffusion(2, 0.1 * Eigen::Matrix4d::Identity());
    const std::vector<Eigen::Matrix4d> Kc(2, 0.5 * Eigen::Matrix4d::Identity());
    PairRowSettings complete;
    PairRowSettings incomplete;
    incomplete.mode = ControllerMode::ZcbfIncomplete;
    incomplete.gamma = 2.0;
    incomplete.hbar_gamma = 2.0 * std::sqrt(2.0);
    std::vector<AffineInputConstraint> a, b;
    collision_rows(sc, complete, sc.x0, diffusion, nullptr, a);
    collision_rows(sc, incomplete, sc.x0, diffusion, &Kc, b);
    EXPECT_EQ(a[0].a, b[0].a);
    EXPECT_GT(b[0].b, a[0].b);
    // Shift kappa hbar plus gamma times the spread of the row.
    EXPECT_GT(b[0].b - a[0].b, incomplete.hbar_gamma);
    EXPECT_THROW(collision_rows(sc, incomplete, sc.x0, diffusion, nullptr, b), MissingContext);
}

TEST(CollisionErrorRadius, LemmaFormula) {
    const CollisionScenario sc = build_collision_scenario({});
    const ErrorRadius r = collision_error_radius(sc, 0.1, 5.0, 1e-3);
    EXPECT_GT(r.lambda_star, 0.0);
    EXPECT_NEAR(r.gamma, std::sqrt(40.0 * r.lambda_star / 0.1), 1e-12);
    EXPECT_NEAR(r.hbar_gamma, std::sqrt(2.0) * r.gamma, 1e-12);
}

TEST(ScalarScenario, PolicyClampsNominal) {
    const ScalarScenario sc = build_scalar_scenario(1.0, -5.0, 1.0);
    const Policy zcbf = make_scalar_policy(sc, ControllerMode::ZcbfComplete, 1.0);
    EXPECT_NEAR(zcbf(Eigen::VectorXd::Constant(1, 2.0), 0.0).u[0], -2.0, 1e-14);
    const Policy base = make_scalar_policy(sc, ControllerMode::BaselineLinear, 1.0);
    EXPECT_EQ(base(Eigen::VectorXd::Constant(1, 2.0), 0.0).u[0], -5.0);
    EXPECT_THROW(make_scalar_policy(sc, ControllerMode::ZcbfIncomplete, 1.0), ConfigError);
}
