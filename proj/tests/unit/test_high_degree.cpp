#include <gtest/gtest.h>

#include <random>

#include "stochcbf/cbf.hpp"
#include "stochcbf/errors.hpp"
#include "stochcbf/high_degree.hpp"
#include "stochcbf_verify/oracles.hpp"

using namespace stochcbf;

namespace {

Eigen::MatrixXd shift(int n) {
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) F(i, i + 1) = 1.0;
    return F;
}

LinearSystem double_integrator(double sigma = 1.0) {
    return {shift(2), (Eigen::MatrixXd(2, 1) << 0, 1).finished(), sigma * Eigen::MatrixXd::Identity(2, 2)};
}

}  // namespace

TEST(RelativeDegree, Examples) {
    const LinearSystem di = double_integrator();
    EXPECT_EQ(relative_degree(di.F, di.G, Eigen::Vector2d(1, 0)), 1);
    EXPECT_EQ(relative_degree(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 0)), 0);
    EXPECT_EQ(relative_degree(shift(3), Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 0)), 2);
}

TEST(RelativeDegree, NoneThrows) {
    EXPECT_THROW(relative_degree(Eigen::MatrixXd::Zero(2, 2), (Eigen::MatrixXd(2, 1) << 0, 1).finished(),
                                 Eigen::Vector2d(1, 0)),
                 NoRelativeDegree);
}

TEST(RelativeDegree, RandomChainTriples) {
    std::mt19937_64 gen(41);
    for (int k = 0; k < 100; ++k) {
        const verify::ChainTriple t = verify::random_chain_triple(gen, 2 + k % 4);
        EXPECT_EQ(relative_degree(t.F, t.G, t.a), t.degree);
    }
}

TEST(AffineChain, DoubleIntegrator) {
    const LinearSystem di = double_integrator();
    const AffineChain chain = build_affine_chain(di.F, di.sigma, Eigen::Vector2d(1, 0), 0.0, 1);
    ASSERT_EQ(chain.depth(), 1);
    EXPECT_EQ(chain.c[0], Eigen::VectorXd(Eigen::Vector2d(1, 0)));
    EXPECT_EQ(chain.c[1], Eigen::VectorXd(Eigen::Vector2d(1, 1)));
    EXPECT_EQ(chain.d[0], 0.0);
    EXPECT_EQ(chain.d[1], 0.0);
}

TEST(AffineChain, ZeroDriftKeepsA) {
    const Eigen::Vector3d a(1, -2, 0.5);
    const AffineChain chain = build_affine_chain(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 2), a, 0.0, 4);
    for (const auto& c : chain.c) EXPECT_EQ(c, Eigen::VectorXd(a));
}

TEST(AffineChain, OffsetNeverChanges) {
    std::mt19937_64 gen(2);
    const Eigen::MatrixXd F = verify::random_matrix(gen, 2, 2);
    const AffineChain chain = build_affine_chain(F, Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 0), 5.0, 4);
    for (double d : chain.d) EXPECT_EQ(d, -5.0);
}

TEST(AffineChain, MatchesNumericLift) {
    std::mt19937_64 gen(17);
    for (int k = 0; k < 50; ++k) {
        const int n = 1 + k % 5;
        const Eigen::MatrixXd F = verify::random_matrix(gen, n, n);
        const Eigen::MatrixXd sigma = verify::random_matrix(gen, n, 2);
        const Eigen::VectorXd a = verify::random_matrix(gen, n, 1).col(0);
        const AffineChain chain = build_affine_chain(F, sigma, a, 0.7, 4);
        for (int i = 0; i < 4; ++i) {
            const Eigen::VectorXd ci = chain.c[i];
            const double di = chain.d[i];
            const auto [c_next, d_next] = verify::affine_fit(
                verify::numeric_lift(F, sigma, [ci, di](const Eigen::VectorXd& x) { return ci.dot(x) + di; }), n);
            EXPECT_LT((c_next - chain.c[i + 1]).norm(), 1e-6 * std::max(1.0, c_next.norm()));
            EXPECT_NEAR(d_next, chain.d[i + 1], 1e-6);
        }
    }
}

TEST(AffineChain, GeneralLiftAgreesOnAffine) {
    const LinearSystem di = double_integrator();
    const ControlAffineSystem sys(di);
    const std::vector<SafetyFunction> general = ito_chain(sys, affine_safety(Eigen::Vector2d(1, 0), 0.5), 2);
    const AffineChain chain = build_affine_chain(di.F, di.sigma, Eigen::Vector2d(1, 0), 0.5, 2);
    for (const Eigen::Vector2d& x : {Eigen::Vector2d(1, 2), Eigen::Vector2d(-3, 0.5)})
        for (int i = 0; i <= 2; ++i) EXPECT_NEAR(general[i](x), chain.value(i, x), 1e-6);
}

TEST(AffineChain, SigmaShapeIsChecked) {
    EXPECT_THROW(build_affine_chain(shift(2), Eigen::MatrixXd::Identity(3, 3), Eigen::Vector2d(1, 0), 0.0, 1),
                 DimensionMismatch);
}

TEST(HrdConstraint, DoubleIntegratorExamples) {
    const LinearSystem di = double_integrator();
    const AffineChain chain = build_affine_chain(di.F, di.sigma, Eigen::Vector2d(1, 0), 0.0, 1);
    const AffineInputConstraint c1 = hrd_constraint(chain, di, Eigen::Vector2d(2, -1));
    EXPECT_DOUBLE_EQ(c1.a[0], 1.0);
    EXPECT_DOUBLE_EQ(c1.b, 0.0);
    const AffineInputConstraint c2 = hrd_constraint(chain, di, Eigen::Vector2d(2, 0));
    EXPECT_DOUBLE_EQ(c2.b, -2.0);
}

TEST(HrdConstraint, DepthZeroIsTheZcbfRow) {
    const LinearSystem sys{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    const AffineChain chain = build_affine_chain(sys.F, sys.sigma, Eigen::Vector2d(1, 0), 0.0, 0);
    const Eigen::Vector2d x(0.4, -1.0);
    const AffineInputConstraint a = hrd_constraint(chain, sys, x);
    const AffineInputConstraint b = zcbf_constraint(ControlAffineSystem(sys), affine_safety(Eigen::Vector2d(1, 0), 0.0), x);
    EXPECT_EQ(a.a, b.a);
    EXPECT_DOUBLE_EQ(a.b, b.b);
}

TEST(MembershipCbar, Examples) {
    const LinearSystem di = double_integrator();
    const AffineChain chain = build_affine_chain(di.F, di.sigma, Eigen::Vector2d(1, 0), 0.0, 1);
    EXPECT_TRUE(membership_cbar(chain, Eigen::Vector2d(1, 0)));
    EXPECT_FALSE(membership_cbar(chain, Eigen::Vector2d(1, -2)));
    EXPECT_TRUE(membership_cbar(chain, Eigen::Vector2d(0, 0)));
}
