#pragma once

// Portfolio analytics on (separable) covariance: minimum-variance portfolios
// and factor hedges solved as minimum-norm least squares.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kronrisk/covariance.hpp"
#include "kronrisk/error.hpp"
#include "kronrisk/factors.hpp"
#include "kronrisk/tensor.hpp"

namespace kronrisk {

/// Relative eigenvalue floor below which a covariance is treated as singular.
inline constexpr double kDefiniteRelTol = 1e-12;

/// Portfolio expressed as one weight vector per domain; the full weight vector
/// over vec(X) is country kron maturity.
struct SeparableWeights {
    Vector maturity;
    Vector country;

    [[nodiscard]] Vector full() const { return kronecker(country, maturity); }
};

inline double portfolio_variance(const Vector& w, const Matrix& sigma) {
    detail::require(sigma.rows() == sigma.cols() && sigma.rows() == w.size(), ErrorKind::usage,
                    "weights of length " + std::to_string(w.size()) + " do not match a " +
                        std::to_string(sigma.rows()) + "x" + std::to_string(sigma.cols()) + " covariance");
    return w.dot(sigma * w);
}

namespace detail {

// Gate for inversion: min eigenvalue must exceed 1e-12 of the max.
inline void require_positive_definite(const Matrix& sigma, const std::string& what) {
    require(sigma.rows() == sigma.cols() && sigma.rows() >= 1, ErrorKind::usage, what + " must be square");
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(sigma, Eigen::EigenvaluesOnly).eigenvalues();
    const double lo = eig(0);
    const double hi = eig(eig.size() - 1);
    if (!(hi > 0.0 && lo > kDefiniteRelTol * hi)) {
        fail(ErrorKind::numerical, what + " is not positive definite: min eigenvalue " + std::to_string(lo) +
                                       ", max eigenvalue " + std::to_string(hi) +
                                       (hi > 0.0 ? ", ratio " + std::to_string(lo / hi) : std::string{}));
    }
}

inline Vector min_variance_weights(const Matrix& sigma, const std::string& what) {
    require_positive_definite(sigma, what);
    const Vector ones = Vector::Ones(sigma.rows());
    const Vector x = sigma.ldlt().solve(ones);
    return x / ones.dot(x);
}

} // namespace detail

/// Sigma^{-1} 1 / (1^T Sigma^{-1} 1).
inline Vector min_variance_full(const Matrix& sigma) { return detail::min_variance_weights(sigma, "covariance"); }

/// Per-domain minimum-variance problems on Theta_m and Theta_c.
inline SeparableWeights min_variance_separable(const KroneckerCovarianceModel& model) {
    detail::require(model.order() == 2, ErrorKind::usage, "separable minimum variance needs an order-2 model");
    return {detail::min_variance_weights(model.theta(0), "maturity covariance density"),
            detail::min_variance_weights(model.theta(1), "country covariance density")};
}

/// u^T w for separable u and w: (u_c^T w_c)(u_m^T w_m).
inline double factor_exposure(const SeparableWeights& w, const ComposedFactor& f) {
    detail::require(w.maturity.size() == f.maturity_loading.size() && w.country.size() == f.country_loading.size(),
                    ErrorKind::usage, "weights and factor have mismatched domain sizes");
    return f.country_loading.dot(w.country) * f.maturity_loading.dot(w.maturity);
}

/// Minimum-norm least-squares solution A^+ b. Singular values below
/// rcond * (largest singular value) are treated as zero.
inline Vector pseudo_inverse_solve(const Matrix& a, const Vector& b, double rcond = 1e-12) {
    detail::require(a.rows() == b.size(), ErrorKind::usage, "pseudo_inverse_solve: row count does not match rhs");
    if (a.size() == 0) return Vector::Zero(a.cols());
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = s.size() ? rcond * s(0) : 0.0;
    Vector coeffs = svd.matrixU().transpose() * b;
    for (Eigen::Index i = 0; i < s.size(); ++i) coeffs(i) = (s(i) > cutoff && s(i) > 0.0) ? coeffs(i) / s(i) : 0.0;
    return svd.matrixV() * coeffs;
}

enum class HedgeDomain { maturity = 0, country = 1 };

inline const char* to_string(HedgeDomain d) { return d == HedgeDomain::maturity ? "maturity" : "country"; }

struct HedgeSpec {
    HedgeDomain domain = HedgeDomain::maturity;
    std::size_t target = 0;  // zero-based asset index within the domain
    std::size_t factors = 3; // number of leading domain factors hedged
};

struct HedgeOptions {
    double residual_threshold = 1e-8;
    /// Throw instead of returning when the system is inconsistent.
    bool strict = false;
    double rcond = 1e-12;
};

struct HedgeResult {
    Vector weights;
    double residual = 0.0;
    bool consistent = true;
    Vector exposures; // u_k^T w for each hedged domain factor k
    Matrix system;
    Vector rhs;
};

/// Stacks [delta_i^T; 1^T; U(:, 0:r)^T] w = (1, 0, ..., 0) in one domain and
/// solves it by pseudoinverse: long one unit of asset i, self-financing, and
/// orthogonal to the leading r domain factors.
inline HedgeResult hedge(const FactorDecomposition& d, const HedgeSpec& spec, const HedgeOptions& opts = {}) {
    const auto mode = static_cast<std::size_t>(spec.domain);
    detail::require(mode < d.order(), ErrorKind::usage, "hedge domain not present in decomposition");
    const std::size_t size = d.dims()[mode];
    detail::require(size >= 2, ErrorKind::usage, "hedging needs a domain with at least two assets");
    detail::require(spec.target < size, ErrorKind::usage,
                    "hedge target index " + std::to_string(spec.target + 1) + " out of range 1.." +
                        std::to_string(size));
    detail::require(spec.factors <= size - 2, ErrorKind::usage,
                    "number of hedged factors " + std::to_string(spec.factors) + " out of range 0.." +
                        std::to_string(size - 2));

    const auto n = static_cast<Eigen::Index>(size);
    const auto r = static_cast<Eigen::Index>(spec.factors);
    const Matrix& u = d.eigenvectors(mode);

    HedgeResult out;
    out.system = Matrix::Zero(2 + r, n);
    out.system(0, static_cast<Eigen::Index>(spec.target)) = 1.0;
    out.system.row(1).setOnes();
    if (r > 0) out.system.bottomRows(r) = u.leftCols(r).transpose();
    out.rhs = Vector::Zero(2 + r);
    out.rhs(0) = 1.0;

    out.weights = pseudo_inverse_solve(out.system, out.rhs, opts.rcond);
    out.residual = (out.system * out.weights - out.rhs).norm();
    out.consistent = out.residual <= opts.residual_threshold;
    out.exposures = u.leftCols(r).transpose() * out.weights;
    if (opts.strict && !out.consistent) {
        detail::fail(ErrorKind::numerical, "hedge system is inconsistent: residual " + std::to_string(out.residual) +
                                               " exceeds threshold " + std::to_string(opts.residual_threshold));
    }
    return out;
}

} // namespace kronrisk
