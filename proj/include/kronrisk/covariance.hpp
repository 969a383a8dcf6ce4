#pragma once

// Kronecker-separable second-moment model for tensor-valued returns:
//
//   E{||X||^2} = sigma2,   E{X_(n) X_(n)^T} = sigma2 * Theta_n,
//   E{x x^T}   = sigma2 * (Theta_N kron ... kron Theta_1),   x = vec(X),
//
// where every covariance density Theta_n has unit trace.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kronrisk/error.hpp"
#include "kronrisk/tensor.hpp"

namespace kronrisk {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;

class KroneckerCovarianceModel {
public:
    KroneckerCovarianceModel() = default;

    /// Validates sigma2 >= 0 and, for every Theta, symmetry, positive
    /// semidefiniteness and unit trace (all to 1e-10).
    KroneckerCovarianceModel(double sigma2, std::vector<Matrix> thetas, std::size_t sample_count = 0,
                             bool demeaned = false)
        : sigma2_(sigma2), thetas_(std::move(thetas)), sample_count_(sample_count), demeaned_(demeaned) {
        detail::require(std::isfinite(sigma2_) && sigma2_ >= 0.0, ErrorKind::usage, "sigma2 must be finite and >= 0");
        detail::require(!thetas_.empty(), ErrorKind::usage, "model needs at least one mode");
        for (std::size_t n = 0; n < thetas_.size(); ++n) {
            const Matrix& th = thetas_[n];
            const std::string tag = "Theta[" + std::to_string(n) + "]";
            detail::require(th.rows() >= 1 && th.rows() == th.cols(), ErrorKind::usage, tag + " must be square");
            detail::require(th.allFinite(), ErrorKind::usage, tag + " has non-finite entries");
            detail::require((th - th.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol, ErrorKind::usage,
                            tag + " is not symmetric");
            detail::require(std::abs(th.trace() - 1.0) <= kTraceTol, ErrorKind::usage,
                            tag + " does not have unit trace (trace = " + std::to_string(th.trace()) + ")");
            const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(th, Eigen::EigenvaluesOnly).eigenvalues()(0);
            detail::require(min_eig >= -kPsdTol, ErrorKind::usage,
                            tag + " is not positive semidefinite (min eigenvalue " + std::to_string(min_eig) + ")");
            dims_.push_back(static_cast<std::size_t>(th.rows()));
        }
    }

    [[nodiscard]] double sigma2() const noexcept { return sigma2_; }
    [[nodiscard]] const std::vector<Matrix>& thetas() const noexcept { return thetas_; }
    [[nodiscard]] const Matrix& theta(std::size_t n) const { return thetas_.at(n); }
    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t order() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t sample_count() const noexcept { return sample_count_; }
    [[nodiscard]] bool demeaned() const noexcept { return demeaned_; }

private:
    double sigma2_ = 0.0;
    std::vector<Matrix> thetas_;
    Dims dims_;
    std::size_t sample_count_ = 0;
    bool demeaned_ = false;
};

struct EstimateOptions {
    /// Subtract the per-element sample mean before estimation. The T - 1
    /// denominator is used either way.
    bool demean = true;
};

namespace detail {

inline void check_samples(std::span<const DenseTensor> samples) {
    require(samples.size() >= 2, ErrorKind::validation,
            "need at least 2 samples, got " + std::to_string(samples.size()));
    const Dims& dims = samples.front().dims();
    for (std::size_t t = 1; t < samples.size(); ++t)
        require(samples[t].dims() == dims, ErrorKind::validation,
                "sample " + std::to_string(t) + " has dims " + dims_string(samples[t].dims()) + ", expected " +
                    dims_string(dims));
}

inline std::vector<double> mean_buffer(std::span<const DenseTensor> samples) {
    std::vector<double> mean(samples.front().size(), 0.0);
    for (const auto& s : samples) {
        const auto d = s.data();
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += d[k];
    }
    for (double& m : mean) m /= static_cast<double>(samples.size());
    return mean;
}

// Samples with the mean removed (or copied verbatim when demean is off).
inline std::vector<DenseTensor> centred(std::span<const DenseTensor> samples, bool demean) {
    std::vector<DenseTensor> out;
    out.reserve(samples.size());
    if (!demean) {
        out.assign(samples.begin(), samples.end());
        return out;
    }
    const auto mean = mean_buffer(samples);
    for (const auto& s : samples) {
        const auto d = s.data();
        std::vector<double> c(d.begin(), d.end());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] -= mean[k];
        out.emplace_back(s.dims(), std::move(c));
    }
    return out;
}

// Stacks vectorized samples as the columns of a K x T matrix.
inline Matrix sample_columns(std::span<const DenseTensor> samples) {
    Matrix x(static_cast<Eigen::Index>(samples.front().size()), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t t = 0; t < samples.size(); ++t) x.col(static_cast<Eigen::Index>(t)) = vectorize(samples[t]);
    return x;
}

} // namespace detail

/// Closed-form estimators: sigma2 = sum ||X_t||^2 / (T-1) and
/// Theta_n = sum X_t,(n) X_t,(n)^T / (sigma2 (T-1)), symmetrized and
/// normalised to unit trace.
inline KroneckerCovarianceModel estimate(std::span<const DenseTensor> samples, EstimateOptions opts = {}) {
    detail::check_samples(samples);
    const std::size_t count = samples.size();
    const double denom = static_cast<double>(count - 1);
    const Dims dims = samples.front().dims();

    double raw_sumsq = 0.0;
    for (const auto& s : samples) raw_sumsq += s.frobenius_norm() * s.frobenius_norm();

    const auto xs = detail::centred(samples, opts.demean);
    double sumsq = 0.0;
    for (const auto& x : xs) {
        for (double v : x.data()) sumsq += v * v;
    }
    // Identical samples leave rounding-level residue after demeaning.
    detail::require(sumsq > 0.0 && sumsq > 1e-26 * raw_sumsq, ErrorKind::numerical,
                    "degenerate data: total variance is zero, covariance densities are undefined");
    const double sigma2 = sumsq / denom;

    std::vector<Matrix> thetas;
    thetas.reserve(dims.size());
    for (std::size_t n = 0; n < dims.size(); ++n) {
        const auto in = static_cast<Eigen::Index>(dims[n]);
        Matrix acc = Matrix::Zero(in, in);
        for (const auto& x : xs) {
            const Matrix u = unfold(x, n).matrix;
            acc.noalias() += u * u.transpose();
        }
        Matrix theta = acc / (sigma2 * denom);
        theta = 0.5 * (theta + theta.transpose()).eval();
        theta /= theta.trace();
        thetas.push_back(std::move(theta));
    }
    return {sigma2, std::move(thetas), count, opts.demean};
}

inline KroneckerCovarianceModel estimate(const std::vector<DenseTensor>& samples, EstimateOptions opts = {}) {
    return estimate(std::span<const DenseTensor>(samples), opts);
}

/// sigma2 * (Theta_N kron ... kron Theta_1).
inline Matrix full_covariance(const KroneckerCovarianceModel& model) {
    return model.sigma2() * kronecker_reversed(model.thetas());
}

/// (i, j) block of the order-2 covariance: sigma2 * Theta_c(i, j) * Theta_m.
/// Indices are zero-based country indices.
inline Matrix cross_country_block(const KroneckerCovarianceModel& model, std::size_t i, std::size_t j) {
    detail::require(model.order() == 2, ErrorKind::usage, "cross_country_block needs an order-2 model");
    const std::size_t ic = model.dims()[1];
    detail::require(i < ic && j < ic, ErrorKind::usage, "country index out of range");
    return model.sigma2() * model.theta(1)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
           model.theta(0);
}

struct ParameterCounts {
    std::uint64_t full = 0;
    std::uint64_t separable = 0;
    friend bool operator==(const ParameterCounts&, const ParameterCounts&) = default;
};

/// Distinct parameters of an unrestricted K x K covariance versus the
/// separable form (one sigma2 plus one symmetric matrix per mode).
inline ParameterCounts parameter_counts(const Dims& dims) {
    detail::require(!dims.empty(), ErrorKind::usage, "parameter_counts needs nonempty dims");
    std::uint64_t k = 1;
    std::uint64_t sep = 0;
    for (std::size_t d : dims) {
        k *= d;
        sep += (static_cast<std::uint64_t>(d) * d + d) / 2;
    }
    return {(k * k + k) / 2, 1 + sep};
}

struct SeparabilityReport {
    double relative_error = 0.0;
    std::uint64_t full_params = 0;
    std::uint64_t separable_params = 0;
    /// Relative Frobenius error of each block, blocks indexed by the last mode
    /// (country x country for order-2 panels).
    Matrix per_block_errors;
};

/// Unrestricted sample covariance (1/(T-1)) sum x_t x_t^T of vectorized samples.
inline Matrix sample_covariance(std::span<const DenseTensor> samples, bool demean) {
    detail::check_samples(samples);
    const auto xs = detail::centred(samples, demean);
    const Matrix x = detail::sample_columns(xs);
    return (x * x.transpose()) / static_cast<double>(samples.size() - 1);
}

/// Compares the unrestricted sample covariance with the model-implied one.
/// The model's demeaning flag decides whether the samples are centred.
inline SeparabilityReport separability_diagnostic(std::span<const DenseTensor> samples,
                                                  const KroneckerCovarianceModel& model) {
    detail::check_samples(samples);
    detail::require(samples.front().dims() == model.dims(), ErrorKind::validation,
                    "model dims " + detail::dims_string(model.dims()) + " do not match samples " +
                        detail::dims_string(samples.front().dims()));
    const Matrix s = sample_covariance(samples, model.demeaned());
    const double s_norm = s.norm();
    detail::require(s_norm > 0.0, ErrorKind::numerical, "sample covariance is identically zero");
    const Matrix sigma = full_covariance(model);

    SeparabilityReport report;
    report.relative_error = (s - sigma).norm() / s_norm;
    const auto counts = parameter_counts(model.dims());
    report.full_params = counts.full;
    report.separable_params = counts.separable;

    const auto nb = static_cast<Eigen::Index>(model.dims().back());
    const Eigen::Index b = s.rows() / nb;
    report.per_block_errors.resize(nb, nb);
    for (Eigen::Index j = 0; j < nb; ++j) {
        for (Eigen::Index i = 0; i < nb; ++i) {
            const double ref = s.block(i * b, j * b, b, b).norm();
            const double diff = (s.block(i * b, j * b, b, b) - sigma.block(i * b, j * b, b, b)).norm();
            report.per_block_errors(i, j) =
                ref > 0.0 ? diff / ref : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        }
    }
    return report;
}

inline SeparabilityReport separability_diagnostic(const std::vector<DenseTensor>& samples,
                                                  const KroneckerCovarianceModel& model) {
    return separability_diagnostic(std::span<const DenseTensor>(samples), model);
}

} // namespace kronrisk
