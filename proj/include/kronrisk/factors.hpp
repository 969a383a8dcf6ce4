#pragma once

// Multilinear PCA: per-mode eigendecompositions of the covariance densities,
// and the global eigenpairs of the full covariance they compose into.
//
// For an order-2 model with maturity mode 0 and country mode 1,
//   u_i = u_k^(c) kron u_l^(m),   lambda_i = sigma2 * lambda_k^(c) * lambda_l^(m),
//   i = k * I_m + l   (zero-based).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kronrisk/covariance.hpp"
#include "kronrisk/error.hpp"
#include "kronrisk/tensor.hpp"

namespace kronrisk {

inline constexpr double kEigenClipTol = 1e-10;
inline constexpr double kOrthogonalityTol = 1e-10;

/// Eigenpairs of a symmetric matrix, columns of `vectors` matching `values`.
struct Eigensystem {
    Matrix vectors;
    Vector values;
};

namespace detail {

// Flip v so that its largest-magnitude entry is positive. Entries within a
// relative 1e-9 of the maximum count as tied; the lowest index wins.
inline void fix_sign(Eigen::Ref<Vector> v) {
    if (v.size() == 0) return;
    const double max_abs = v.cwiseAbs().maxCoeff();
    if (max_abs == 0.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) >= max_abs * (1.0 - 1e-9)) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

inline bool lexicographically_greater(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) != b(i)) return a(i) > b(i);
    }
    return false;
}

// Descending, sign-fixed eigensystem. Eigenvalues in [-1e-10, 0) are clipped
// to zero; anything more negative is an error. Runs of eigenvalues within
// 1e-12 of each other are ordered by lexicographically descending vectors.
inline Eigensystem sorted_eigensystem(const Matrix& sym, const std::string& what) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    require(solver.info() == Eigen::Success, ErrorKind::numerical, "eigendecomposition failed for " + what);
    const Eigen::Index n = sym.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::reverse(order.begin(), order.end());

    Eigensystem out{Matrix(n, n), Vector(n)};
    for (Eigen::Index c = 0; c < n; ++c) {
        const Eigen::Index src = order[static_cast<std::size_t>(c)];
        double lambda = solver.eigenvalues()(src);
        if (lambda < 0.0) {
            require(lambda >= -kEigenClipTol, ErrorKind::numerical,
                    what + " has a negative eigenvalue " + std::to_string(lambda));
            lambda = 0.0;
        }
        out.values(c) = lambda;
        out.vectors.col(c) = solver.eigenvectors().col(src);
        fix_sign(out.vectors.col(c));
    }

    for (Eigen::Index start = 0; start < n;) {
        Eigen::Index stop = start + 1;
        while (stop < n && out.values(stop - 1) - out.values(stop) <= 1e-12) ++stop;
        if (stop - start > 1) {
            std::vector<Vector> cols;
            for (Eigen::Index c = start; c < stop; ++c) cols.emplace_back(out.vectors.col(c));
            std::stable_sort(cols.begin(), cols.end(), lexicographically_greater);
            for (Eigen::Index c = start; c < stop; ++c) out.vectors.col(c) = cols[static_cast<std::size_t>(c - start)];
        }
        start = stop;
    }
    return out;
}

} // namespace detail

class FactorDecomposition {
public:
    FactorDecomposition() = default;

    /// Builds a decomposition from explicit parts. Each eigenvector matrix must
    /// be orthogonal and each eigenvalue vector nonnegative, descending and
    /// summing to one (tolerance 1e-10).
    FactorDecomposition(double sigma2, std::vector<Matrix> eigenvectors, std::vector<Vector> eigenvalues)
        : sigma2_(sigma2), vectors_(std::move(eigenvectors)), values_(std::move(eigenvalues)) {
        detail::require(!vectors_.empty() && vectors_.size() == values_.size(), ErrorKind::usage,
                        "decomposition needs one eigenvector matrix and one eigenvalue vector per mode");
        for (std::size_t n = 0; n < vectors_.size(); ++n) {
            const Matrix& u = vectors_[n];
            const Vector& l = values_[n];
            const std::string tag = "mode " + std::to_string(n);
            detail::require(u.rows() == u.cols() && u.rows() == l.size(), ErrorKind::usage, tag + ": shape mismatch");
            detail::require((u.transpose() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <=
                                kOrthogonalityTol,
                            ErrorKind::usage, tag + ": eigenvectors are not orthonormal");
            detail::require(std::abs(l.sum() - 1.0) <= kTraceTol, ErrorKind::usage,
                            tag + ": eigenvalues do not sum to one");
            for (Eigen::Index i = 0; i < l.size(); ++i) {
                detail::require(l(i) >= -kEigenClipTol, ErrorKind::usage, tag + ": negative eigenvalue");
                if (i > 0) detail::require(l(i) <= l(i - 1), ErrorKind::usage, tag + ": eigenvalues not descending");
            }
            dims_.push_back(static_cast<std::size_t>(u.rows()));
        }
    }

    [[nodiscard]] double sigma2() const noexcept { return sigma2_; }
    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t order() const noexcept { return dims_.size(); }
    [[nodiscard]] const Matrix& eigenvectors(std::size_t n) const { return vectors_.at(n); }
    [[nodiscard]] const Vector& eigenvalues(std::size_t n) const { return values_.at(n); }

    /// Theta_n rebuilt as U diag(lambda) U^T.
    [[nodiscard]] Matrix reconstruct(std::size_t n) const {
        return vectors_.at(n) * values_.at(n).asDiagonal() * vectors_.at(n).transpose();
    }

private:
    double sigma2_ = 0.0;
    std::vector<Matrix> vectors_;
    std::vector<Vector> values_;
    Dims dims_;
};

inline FactorDecomposition decompose(const KroneckerCovarianceModel& model) {
    std::vector<Matrix> vectors;
    std::vector<Vector> values;
    for (std::size_t n = 0; n < model.order(); ++n) {
        auto es = detail::sorted_eigensystem(model.theta(n), "Theta[" + std::to_string(n) + "]");
        vectors.push_back(std::move(es.vectors));
        values.push_back(std::move(es.values));
    }
    return {model.sigma2(), std::move(vectors), std::move(values)};
}

/// Global factor of the order-2 covariance built from one country factor and
/// one maturity factor.
struct ComposedFactor {
    std::size_t global_index = 0;
    std::size_t country_index = 0;
    std::size_t maturity_index = 0;
    Vector country_loading;  // u_k^(c)
    Vector maturity_loading; // u_l^(m)
    Vector loading;          // u_k^(c) kron u_l^(m)
    double eigenvalue = 0.0;
};

inline ComposedFactor composed_factor(const FactorDecomposition& d, std::size_t k, std::size_t l) {
    detail::require(d.order() == 2, ErrorKind::usage, "composed factors need an order-2 decomposition");
    const std::size_t im = d.dims()[0];
    const std::size_t ic = d.dims()[1];
    detail::require(k < ic, ErrorKind::usage, "country factor index out of range");
    detail::require(l < im, ErrorKind::usage, "maturity factor index out of range");
    const auto ki = static_cast<Eigen::Index>(k);
    const auto li = static_cast<Eigen::Index>(l);
    ComposedFactor f;
    f.global_index = k * im + l;
    f.country_index = k;
    f.maturity_index = l;
    f.country_loading = d.eigenvectors(1).col(ki);
    f.maturity_loading = d.eigenvectors(0).col(li);
    f.loading = kronecker(f.country_loading, f.maturity_loading);
    f.eigenvalue = d.sigma2() * d.eigenvalues(1)(ki) * d.eigenvalues(0)(li);
    return f;
}

/// Every composed factor, by descending eigenvalue (ties by global index).
inline std::vector<ComposedFactor> all_composed_eigenpairs(const FactorDecomposition& d) {
    detail::require(d.order() == 2, ErrorKind::usage, "composed factors need an order-2 decomposition");
    std::vector<ComposedFactor> out;
    out.reserve(d.dims()[0] * d.dims()[1]);
    for (std::size_t k = 0; k < d.dims()[1]; ++k)
        for (std::size_t l = 0; l < d.dims()[0]; ++l) out.push_back(composed_factor(d, k, l));
    std::stable_sort(out.begin(), out.end(),
                     [](const ComposedFactor& a, const ComposedFactor& b) { return a.eigenvalue > b.eigenvalue; });
    return out;
}

struct VarianceRow {
    std::size_t factor = 0; // one-based position in the table
    std::string symbol;     // e.g. "u1(m)"
    double fraction = 0.0;
    double cumulative = 0.0;
    std::string label;
};

struct VarianceTable {
    std::string domain;
    std::vector<VarianceRow> rows;
};

/// Interpretation labels attached by table position for order-2 panels.
inline std::vector<std::string> position_labels(std::size_t mode) {
    if (mode == 0) return {"Global level", "Global slope", "Global curvature"};
    if (mode == 1) return {"Global risk premium"};
    return {};
}

inline std::string domain_tag(std::size_t mode, std::size_t order) {
    if (order == 2) return mode == 0 ? "m" : "c";
    return std::to_string(mode + 1);
}

/// Explained-variance fractions of one mode's factors.
inline VarianceTable variance_table(const FactorDecomposition& d, std::size_t mode,
                                    const std::vector<std::string>& labels = {}) {
    detail::check_mode(d.order(), mode);
    const Vector& l = d.eigenvalues(mode);
    const double total = l.sum();
    const std::string tag = domain_tag(mode, d.order());
    VarianceTable table{tag, {}};
    double cum = 0.0;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        const double frac = l(i) / total;
        cum += frac;
        VarianceRow row;
        row.factor = static_cast<std::size_t>(i) + 1;
        row.symbol = "u" + std::to_string(i + 1) + "(" + tag + ")";
        row.fraction = frac;
        row.cumulative = std::min(cum, 1.0);
        if (static_cast<std::size_t>(i) < labels.size()) row.label = labels[static_cast<std::size_t>(i)];
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Explained-variance fractions of the composed global factors.
inline VarianceTable composed_variance_table(const FactorDecomposition& d) {
    const auto pairs = all_composed_eigenpairs(d);
    VarianceTable table{"global", {}};
    double cum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& f = pairs[i];
        const double frac = d.eigenvalues(1)(static_cast<Eigen::Index>(f.country_index)) *
                            d.eigenvalues(0)(static_cast<Eigen::Index>(f.maturity_index));
        cum += frac;
        VarianceRow row;
        row.factor = i + 1;
        row.symbol = "u" + std::to_string(f.country_index + 1) + "(c) x u" + std::to_string(f.maturity_index + 1) + "(m)";
        row.fraction = frac;
        row.cumulative = std::min(cum, 1.0);
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Classical PCA of one country's domestic curve.
struct DomesticPca {
    Matrix eigenvectors;
    Vector eigenvalues;
    Vector fractions;
};

/// PCA of the maturity fibres of country `country` (zero-based) across time,
/// using the demeaned, (T-1)-normalised sample covariance.
inline DomesticPca domestic_pca(std::span<const DenseTensor> samples, std::size_t country) {
    detail::check_samples(samples);
    detail::require(samples.front().order() == 2, ErrorKind::usage, "domestic_pca needs order-2 samples");
    const std::size_t ic = samples.front().dim(1);
    detail::require(country < ic, ErrorKind::usage, "country index out of range");
    const auto im = static_cast<Eigen::Index>(samples.front().dim(0));
    const auto count = static_cast<Eigen::Index>(samples.size());

    Matrix fibres(im, count);
    for (Eigen::Index t = 0; t < count; ++t)
        fibres.col(t) = samples[static_cast<std::size_t>(t)].as_matrix().col(static_cast<Eigen::Index>(country));
    const Vector mean = fibres.rowwise().mean();
    fibres.colwise() -= mean;
    Matrix cov = (fibres * fibres.transpose()) / static_cast<double>(count - 1);
    cov = 0.5 * (cov + cov.transpose()).eval();
    const double total = cov.trace();
    detail::require(total > 0.0, ErrorKind::numerical,
                    "degenerate domestic curve for country " + std::to_string(country) + ": zero covariance");

    auto es = detail::sorted_eigensystem(cov, "domestic covariance");
    DomesticPca out;
    out.fractions = es.values / es.values.sum();
    out.eigenvectors = std::move(es.vectors);
    out.eigenvalues = std::move(es.values);
    return out;
}

inline DomesticPca domestic_pca(const std::vector<DenseTensor>& samples, std::size_t country) {
    return domestic_pca(std::span<const DenseTensor>(samples), country);
}

/// Core tensor of a sample: X x_1 U1^T ... x_N UN^T.
inline DenseTensor factor_scores(const DenseTensor& sample, const FactorDecomposition& d) {
    detail::require(sample.dims() == d.dims(), ErrorKind::usage,
                    "sample dims " + detail::dims_string(sample.dims()) + " do not match decomposition " +
                        detail::dims_string(d.dims()));
    std::vector<Matrix> mats;
    for (std::size_t n = 0; n < d.order(); ++n) mats.push_back(d.eigenvectors(n).transpose());
    return multi_mode_product(sample, mats);
}

/// Inverse of factor_scores.
inline DenseTensor from_factor_scores(const DenseTensor& scores, const FactorDecomposition& d) {
    detail::require(scores.dims() == d.dims(), ErrorKind::usage, "score dims do not match decomposition");
    std::vector<Matrix> mats;
    for (std::size_t n = 0; n < d.order(); ++n) mats.push_back(d.eigenvectors(n));
    return multi_mode_product(scores, mats);
}

} // namespace kronrisk
