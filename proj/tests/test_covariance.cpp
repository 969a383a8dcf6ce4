#include <gtest/gtest.h>

#include "support.hpp"

using namespace kronrisk;
using kronrisk::test::rel_error;

namespace {

// Partial traces of a vectorized maturity x country covariance: an
// estimator-independent route to the two densities.
std::pair<Matrix, Matrix> partial_traces(const Matrix& s, Eigen::Index im, Eigen::Index ic) {
    Matrix tm = Matrix::Zero(im, im);
    Matrix tc = Matrix::Zero(ic, ic);
    for (Eigen::Index j = 0; j < ic; ++j)
        for (Eigen::Index i = 0; i < im; ++i)
            for (Eigen::Index i2 = 0; i2 < im; ++i2) tm(i, i2) += s(i + im * j, i2 + im * j);
    for (Eigen::Index i = 0; i < im; ++i)
        for (Eigen::Index j = 0; j < ic; ++j)
            for (Eigen::Index j2 = 0; j2 < ic; ++j2) tc(j, j2) += s(i + im * j, i + im * j2);
    return {tm / s.trace(), tc / s.trace()};
}

std::vector<DenseTensor> alternating_corner(std::size_t t_count) {
    std::vector<DenseTensor> out;
    for (std::size_t t = 0; t < t_count; ++t) {
        const double s = t % 2 == 0 ? 1.0 : -1.0;
        out.emplace_back(Dims{2, 2}, std::vector<double>{s, 0, 0, 0});
    }
    return out;
}

Matrix corner(Eigen::Index n) {
    Matrix e = Matrix::Zero(n, n);
    e(0, 0) = 1.0;
    return e;
}

} // namespace

TEST(ModelValidation, RejectsInvalidDensities) {
    Matrix ok = Matrix::Identity(2, 2) / 2.0;
    EXPECT_NO_THROW(KroneckerCovarianceModel(1.0, {ok, ok}));
    EXPECT_THROW(KroneckerCovarianceModel(-1.0, {ok}), Error);
    EXPECT_THROW(KroneckerCovarianceModel(1.0, {}), Error);
    EXPECT_THROW(KroneckerCovarianceModel(1.0, {Matrix::Identity(2, 2)}), Error);
    Matrix asym = ok;
    asym(0, 1) = 0.1;
    EXPECT_THROW(KroneckerCovarianceModel(1.0, {asym}), Error);
    Matrix indefinite(2, 2);
    indefinite << 0.5, 0.9, 0.9, 0.5;
    EXPECT_THROW(KroneckerCovarianceModel(1.0, {indefinite}), Error);
    EXPECT_THROW(KroneckerCovarianceModel(1.0, {Matrix::Ones(2, 3) / 2.0}), Error);
    try {
        KroneckerCovarianceModel(1.0, {Matrix::Identity(2, 2)});
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::usage);
    }
}

TEST(Estimate, AlternatingCornerSamples) {
    const auto samples = alternating_corner(4);
    const auto model = estimate(samples);
    EXPECT_DOUBLE_EQ(model.sigma2(), 4.0 / 3.0);
    EXPECT_EQ(model.theta(0), corner(2));
    EXPECT_EQ(model.theta(1), corner(2));
    EXPECT_EQ(model.sample_count(), 4u);
    EXPECT_TRUE(model.demeaned());
    const auto report = separability_diagnostic(samples, model);
    EXPECT_LT(report.relative_error, 1e-15);
    EXPECT_EQ(report.full_params, 10u);
    EXPECT_EQ(report.separable_params, 7u);
}

TEST(Estimate, WithoutDemeanUsesRawSecondMoment) {
    std::vector<DenseTensor> samples{DenseTensor(Dims{2}, {1, 1}), DenseTensor(Dims{2}, {1, 1}),
                                     DenseTensor(Dims{2}, {1, 1})};
    const auto model = estimate(samples, EstimateOptions{false});
    EXPECT_DOUBLE_EQ(model.sigma2(), 6.0 / 2.0);
    EXPECT_LT(rel_error(model.theta(0), Matrix::Constant(2, 2, 0.5)), 1e-15);
    EXPECT_FALSE(model.demeaned());
    // Demeaning the same constant samples leaves nothing to estimate.
    EXPECT_THROW(estimate(samples), Error);
}

TEST(Estimate, DegenerateAndMalformedInputs) {
    std::vector<DenseTensor> zeros(3, DenseTensor::zeros({3, 2}));
    try {
        estimate(zeros);
        FAIL() << "zero samples must not estimate";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
    }
    EXPECT_THROW(estimate(zeros, EstimateOptions{false}), Error);

    std::vector<DenseTensor> one{DenseTensor(Dims{2}, {1, 2})};
    try {
        estimate(one);
        FAIL() << "a single sample must be rejected";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::validation);
    }
    std::vector<DenseTensor> mixed{DenseTensor(Dims{2}, {1, 2}), DenseTensor(Dims{1, 2}, {1, 2})};
    EXPECT_THROW(estimate(mixed), Error);
}

TEST(Estimate, ThetasAreValidDensities) {
    NormalStream rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto dims = kronrisk::test::random_dims(1 + trial % 3, 5, rng);
        std::vector<DenseTensor> samples;
        for (int t = 0; t < 12; ++t) samples.push_back(kronrisk::test::random_tensor(dims, rng));
        const auto model = estimate(samples);
        for (const auto& th : model.thetas()) {
            EXPECT_NEAR(th.trace(), 1.0, 1e-12);
            EXPECT_EQ(th, th.transpose());
            EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(th).eigenvalues()(0), -1e-12);
        }
    }
}

TEST(Estimate, MatchesPartialTracesOfSampleCovariance) {
    NormalStream rng(12);
    std::vector<DenseTensor> samples;
    for (int t = 0; t < 40; ++t) samples.push_back(kronrisk::test::random_tensor({4, 3}, rng));
    for (bool demean : {true, false}) {
        const auto model = estimate(samples, EstimateOptions{demean});
        const Matrix s = brute_force_covariance(samples, demean);
        EXPECT_NEAR(model.sigma2(), s.trace(), 1e-12 * s.trace());
        const auto [tm, tc] = partial_traces(s, 4, 3);
        EXPECT_LT(rel_error(model.theta(0), tm), 1e-12);
        EXPECT_LT(rel_error(model.theta(1), tc), 1e-12);
    }
}

TEST(Estimate, ScaleEquivariance) {
    NormalStream rng(13);
    std::vector<DenseTensor> samples;
    std::vector<DenseTensor> scaled;
    for (int t = 0; t < 30; ++t) {
        samples.push_back(kronrisk::test::random_tensor({3, 2, 2}, rng));
        const auto d = samples.back().data();
        std::vector<double> v(d.begin(), d.end());
        for (double& x : v) x *= 3.0;
        scaled.emplace_back(samples.back().dims(), std::move(v));
    }
    const auto a = estimate(samples);
    const auto b = estimate(scaled);
    EXPECT_NEAR(b.sigma2(), 9.0 * a.sigma2(), 1e-12 * b.sigma2());
    for (std::size_t n = 0; n < 3; ++n) EXPECT_LT(rel_error(b.theta(n), a.theta(n)), 1e-12);
}

TEST(Estimate, RecoversGeneratingModel) {
    const auto truth = random_model({4, 3}, 99);
    const auto model = estimate(sample_kronecker_gaussian({truth, 50000, 5}));
    EXPECT_LT(std::abs(model.sigma2() - truth.sigma2()) / truth.sigma2(), 0.02);
    for (std::size_t n = 0; n < 2; ++n) EXPECT_LT((model.theta(n) - truth.theta(n)).norm(), 0.02);
}

TEST(Estimate, ErrorShrinksWithSampleSize) {
    const auto truth = random_model({4, 3}, 7);
    const Matrix sigma = full_covariance(truth);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t t : {500u, 5000u, 50000u}) {
        const auto model = estimate(sample_kronecker_gaussian({truth, t, 21}));
        const double err = rel_error(full_covariance(model), sigma);
        EXPECT_LT(err, previous) << "T = " << t;
        previous = err;
    }
}

TEST(FullCovariance, ScaledIdentityDensities) {
    const KroneckerCovarianceModel model(4.0, {Matrix::Identity(2, 2) / 2.0, Matrix::Identity(2, 2) / 2.0});
    EXPECT_EQ(full_covariance(model), Matrix::Identity(4, 4));
}

TEST(FullCovariance, BlocksAndTraces) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto model = random_model({5, 4}, seed);
        const Matrix sigma = full_covariance(model);
        EXPECT_NEAR(sigma.trace(), model.sigma2(), 1e-12 * model.sigma2());
        EXPECT_EQ(sigma, sigma.transpose());
        double diag_traces = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                const Matrix block = cross_country_block(model, i, j);
                EXPECT_LT((block - sigma.block(5 * i, 5 * j, 5, 5)).cwiseAbs().maxCoeff(), 1e-15);
                EXPECT_NEAR(block.trace(),
                            model.sigma2() * model.theta(1)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                            1e-13);
            }
            diag_traces += cross_country_block(model, i, i).trace();
        }
        EXPECT_NEAR(diag_traces, model.sigma2(), 1e-12);
    }
    const auto model = random_model({3, 2}, 1);
    EXPECT_THROW(cross_country_block(model, 2, 0), Error);
    EXPECT_THROW(cross_country_block(random_model({3, 2, 2}, 1), 0, 0), Error);
}

TEST(ParameterCounts, KnownValues) {
    EXPECT_EQ(parameter_counts({15, 8}), (ParameterCounts{7260, 157}));
    EXPECT_EQ(parameter_counts({1}), (ParameterCounts{1, 2}));
    EXPECT_EQ(parameter_counts({2, 2}), (ParameterCounts{10, 7}));
    EXPECT_EQ(parameter_counts({3, 4, 5}), (ParameterCounts{1830, 1 + 6 + 10 + 15}));
    EXPECT_THROW(parameter_counts({}), Error);
}

TEST(Separability, ExactlySeparableSamplesGiveZeroError) {
    // Each sample is a multiple of a rank-one outer product, so the
    // sample covariance is exactly s * (b b^T kron a a^T).
    Matrix a(3, 1);
    a << 1, 2, 2;
    Matrix b(2, 1);
    b << 3, 4;
    std::vector<DenseTensor> samples;
    for (double s : {1.0, -1.0, 2.0, -2.0}) samples.push_back(DenseTensor::from_matrix(s * a * b.transpose()));
    const auto model = estimate(samples, EstimateOptions{false});
    const auto report = separability_diagnostic(samples, model);
    EXPECT_LT(report.relative_error, 1e-14);
    EXPECT_EQ(report.per_block_errors.rows(), 2);
    EXPECT_LT(report.per_block_errors.maxCoeff(), 1e-14);
}

TEST(Separability, NonSeparableSamplesAreDetected) {
    // Country 1 moves maturity 1, country 2 moves maturity 2: the
    // covariance is block diagonal with different blocks.
    std::vector<DenseTensor> samples;
    for (double s : {1.0, -1.0, 1.0, -1.0}) {
        samples.emplace_back(Dims{2, 2}, std::vector<double>{s, 0, 0, 0});
        samples.emplace_back(Dims{2, 2}, std::vector<double>{0, 0, 0, s});
    }
    const auto model = estimate(samples);
    const auto report = separability_diagnostic(samples, model);
    EXPECT_GT(report.relative_error, 0.3);
    EXPECT_THROW(separability_diagnostic(samples, random_model({3, 2}, 1)), Error);
}
