#include <gtest/gtest.h>

#include "support.hpp"

using namespace kronrisk;
using kronrisk::test::random_matrix;
using kronrisk::test::rel_error;

namespace {

// Minimum-norm solution of a full-row-rank system via the normal equations.
Vector normal_equations_solve(const Matrix& a, const Vector& b) {
    return a.transpose() * (a * a.transpose()).fullPivLu().solve(b);
}

// Maturity density with a chosen leading eigenvector and a flat remainder.
KroneckerCovarianceModel model_with_leading(const Vector& u1) {
    const Eigen::Index n = u1.size();
    const Vector u = u1.normalized();
    const double rest = 0.2 / static_cast<double>(n - 1);
    Matrix th = 0.8 * u * u.transpose() + rest * (Matrix::Identity(n, n) - u * u.transpose());
    th = 0.5 * (th + th.transpose()).eval();
    return {1.0, {th, Matrix::Identity(2, 2) / 2.0}};
}

} // namespace

TEST(MinVariance, IdentityGivesEqualWeights) {
    const Vector w = min_variance_full(Matrix::Identity(4, 4));
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(w(i), 0.25, 1e-15);
}

TEST(MinVariance, DiagonalWeightsInverseToVariance) {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 0.75;
    s(1, 1) = 0.25;
    const Vector w = min_variance_full(s);
    EXPECT_NEAR(w(0), 0.25, 1e-15);
    EXPECT_NEAR(w(1), 0.75, 1e-15);
    EXPECT_NEAR(portfolio_variance(w, s), 0.1875, 1e-15);
}

TEST(MinVariance, SingularCovarianceIsRejected) {
    try {
        min_variance_full(Matrix::Constant(3, 3, 1.0));
        FAIL() << "singular covariance must be rejected";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
    }
    const KroneckerCovarianceModel singular(1.0, {Matrix::Constant(2, 2, 0.5), Matrix::Identity(2, 2) / 2.0});
    EXPECT_THROW(min_variance_separable(singular), Error);
}

TEST(MinVariance, SeparableSolutionEqualsFullSolution) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto model = random_model({2 + seed % 9, 2 + seed % 6}, 500 + seed);
        const auto w = min_variance_separable(model);
        EXPECT_NEAR(w.maturity.sum(), 1.0, 1e-12);
        EXPECT_NEAR(w.country.sum(), 1.0, 1e-12);
        const Vector full = min_variance_full(full_covariance(model));
        EXPECT_LT((w.full() - full).cwiseAbs().maxCoeff(), 1e-10) << "seed " << seed;
    }
}

TEST(MinVariance, BeatsRandomBudgetPortfolios) {
    const auto model = random_model({6, 4}, 3);
    const Matrix sigma = full_covariance(model);
    const double best = portfolio_variance(min_variance_separable(model).full(), sigma);
    NormalStream rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        Vector w(24);
        for (Eigen::Index i = 0; i < 24; ++i) w(i) = rng();
        w /= w.sum();
        EXPECT_GE(portfolio_variance(w, sigma), best - 1e-14);
    }
}

TEST(FactorExposure, ProductFormulaMatchesInnerProduct) {
    const auto model = random_model({5, 3}, 12);
    const auto d = decompose(model);
    NormalStream rng(9);
    const SeparableWeights w{random_matrix(5, 1, rng).col(0), random_matrix(3, 1, rng).col(0)};
    for (const auto& f : all_composed_eigenpairs(d)) EXPECT_NEAR(factor_exposure(w, f), f.loading.dot(w.full()), 1e-13);
    EXPECT_THROW(factor_exposure({Vector::Ones(3), Vector::Ones(3)}, composed_factor(d, 0, 0)), Error);
}

TEST(PseudoInverse, BasicSystems) {
    const Vector b = (Vector(3) << 1, 2, 3).finished();
    EXPECT_EQ(pseudo_inverse_solve(Matrix::Identity(3, 3), b), b);
    EXPECT_EQ(pseudo_inverse_solve(Matrix::Zero(3, 3), b), Vector::Zero(3));
    const Vector w = pseudo_inverse_solve(Matrix::Ones(1, 2), Vector::Constant(1, 2.0));
    EXPECT_NEAR(w(0), 1.0, 1e-15);
    EXPECT_NEAR(w(1), 1.0, 1e-15);
    EXPECT_THROW(pseudo_inverse_solve(Matrix::Identity(3, 3), Vector::Ones(2)), Error);
}

TEST(PseudoInverse, LeastSquaresAndMinimumNormOnRankDeficientInputs) {
    NormalStream rng(10);
    for (int trial = 0; trial < 30; ++trial) {
        // 5 x 6 of rank 3.
        const Matrix a = random_matrix(5, 3, rng) * random_matrix(3, 6, rng);
        const Vector b = random_matrix(5, 1, rng).col(0);
        const Vector x = pseudo_inverse_solve(a, b);
        EXPECT_LT((a.transpose() * (a * x - b)).norm(), 1e-9 * a.norm() * b.norm());
        // x lies in the row space: orthogonal to the null space of a.
        const Eigen::FullPivLU<Matrix> lu(a);
        EXPECT_LT((lu.kernel().transpose() * x).norm(), 1e-9 * std::max(1.0, x.norm()));
    }
}

TEST(Hedge, ThreeMaturityWorkedExample) {
    const auto d = decompose(random_model({3, 2}, 1));
    const auto res = hedge(d, {HedgeDomain::maturity, 2, 0});
    const Vector expected = (Vector(3) << -0.5, -0.5, 1.0).finished();
    EXPECT_LT((res.weights - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((res.weights - normal_equations_solve(res.system, res.rhs)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(res.consistent);
    EXPECT_EQ(res.exposures.size(), 0);
}

TEST(Hedge, ConstraintsHoldOnRandomSpecs) {
    const auto d = decompose(random_model({15, 8}, 44));
    NormalStream rng(45);
    for (int trial = 0; trial < 40; ++trial) {
        const auto domain = trial % 2 == 0 ? HedgeDomain::maturity : HedgeDomain::country;
        const std::size_t size = domain == HedgeDomain::maturity ? 15 : 8;
        const auto target = static_cast<std::size_t>(rng.uniform() * static_cast<double>(size));
        const auto r = static_cast<std::size_t>(trial % 4);
        const auto res = hedge(d, {domain, target, r});
        ASSERT_TRUE(res.consistent);
        EXPECT_LE(res.residual, 1e-10);
        EXPECT_NEAR(res.weights(static_cast<Eigen::Index>(target)), 1.0, 1e-10);
        EXPECT_NEAR(res.weights.sum(), 0.0, 1e-10);
        for (Eigen::Index k = 0; k < res.exposures.size(); ++k) EXPECT_LE(std::abs(res.exposures(k)), 1e-9);
        EXPECT_LT((res.weights - normal_equations_solve(res.system, res.rhs)).norm(), 1e-9);
    }
}

TEST(Hedge, InconsistentSystemIsFlagged) {
    // delta_3 = 1/3 + (-1, -1, 2)/3 lies in span{1, u1}.
    const auto d = decompose(model_with_leading((Vector(3) << -1, -1, 2).finished()));
    const auto res = hedge(d, {HedgeDomain::maturity, 2, 1});
    EXPECT_FALSE(res.consistent);
    EXPECT_GT(res.residual, 1e-8);
    HedgeOptions strict;
    strict.strict = true;
    try {
        hedge(d, {HedgeDomain::maturity, 2, 1}, strict);
        FAIL() << "strict hedge must throw";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
    }
    // Other targets of the same model are fine.
    EXPECT_TRUE(hedge(d, {HedgeDomain::maturity, 0, 1}).consistent);
}

TEST(Hedge, RejectsOutOfRangeSpecs) {
    const auto d = decompose(random_model({4, 3}, 2));
    EXPECT_THROW(hedge(d, {HedgeDomain::maturity, 4, 0}), Error);
    EXPECT_THROW(hedge(d, {HedgeDomain::maturity, 0, 3}), Error);
    EXPECT_THROW(hedge(d, {HedgeDomain::country, 0, 2}), Error);
    EXPECT_NO_THROW(hedge(d, {HedgeDomain::country, 0, 1}));
    const auto one = decompose(KroneckerCovarianceModel(1.0, {Matrix::Identity(3, 3) / 3.0, Matrix::Ones(1, 1)}));
    EXPECT_THROW(hedge(one, {HedgeDomain::country, 0, 0}), Error);
}

TEST(Hedge, CompositeExposureVanishesThroughProductFormula) {
    const auto d = decompose(random_model({6, 4}, 5));
    const auto res = hedge(d, {HedgeDomain::maturity, 4, 2});
    NormalStream rng(6);
    const SeparableWeights w{res.weights, random_matrix(4, 1, rng).col(0)};
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t l = 0; l < 2; ++l) EXPECT_LE(std::abs(factor_exposure(w, composed_factor(d, k, l))), 1e-9);
}
