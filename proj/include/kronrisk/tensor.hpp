#pragma once

// Dense order-N tensors and the multilinear operators built on them.
//
// Layout: the flat buffer stores the mode-1 index fastest and the mode-N
// index slowest (generalised column-major). Mode numbers in this API are
// zero-based, so "mode 0" is the first mode.
//
// Unfolding column order: the mode-n unfolding lists its columns by cycling
// the remaining modes with the lowest-numbered remaining mode fastest. With
// this convention vec(X x_1 U1 ... x_N UN) = (UN kron ... kron U1) vec(X).

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kronrisk/error.hpp"

namespace kronrisk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

namespace detail {

inline std::size_t product(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_string(const Dims& dims) {
    std::string out = "(";
    for (std::size_t n = 0; n < dims.size(); ++n) {
        if (n) out += "x";
        out += std::to_string(dims[n]);
    }
    return out + ")";
}

} // namespace detail

class DenseTensor {
public:
    DenseTensor() = default;

    DenseTensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
        detail::require(!dims_.empty(), ErrorKind::usage, "tensor order must be at least 1");
        for (std::size_t d : dims_)
            detail::require(d >= 1, ErrorKind::usage, "tensor dimensions must be positive");
        detail::require(detail::product(dims_) == data_.size(), ErrorKind::usage,
                        "buffer length does not match dims " + detail::dims_string(dims_));
    }

    static DenseTensor zeros(Dims dims) {
        const std::size_t k = detail::product(dims);
        return {std::move(dims), std::vector<double>(k, 0.0)};
    }

    /// Order-2 tensor whose (i, j) entry is m(i, j).
    static DenseTensor from_matrix(const Matrix& m) {
        std::vector<double> data(m.data(), m.data() + m.size());
        return {Dims{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(data)};
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t order() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t n) const { return dims_.at(n); }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    /// Linear offset of a zero-based multi-index.
    [[nodiscard]] std::size_t offset(std::span<const std::size_t> index) const {
        detail::require(index.size() == dims_.size(), ErrorKind::usage, "index arity does not match tensor order");
        std::size_t off = 0;
        std::size_t stride = 1;
        for (std::size_t n = 0; n < dims_.size(); ++n) {
            detail::require(index[n] < dims_[n], ErrorKind::usage, "tensor index out of range");
            off += index[n] * stride;
            stride *= dims_[n];
        }
        return off;
    }

    [[nodiscard]] double operator()(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    [[nodiscard]] double operator()(std::initializer_list<std::size_t> index) const {
        return (*this)(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Order-2 view as a matrix (rows = mode 0).
    [[nodiscard]] Matrix as_matrix() const {
        detail::require(order() == 2, ErrorKind::usage, "as_matrix requires an order-2 tensor");
        return Eigen::Map<const Matrix>(data_.data(), static_cast<Eigen::Index>(dims_[0]),
                                        static_cast<Eigen::Index>(dims_[1]));
    }

    [[nodiscard]] double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Dims dims_;
    std::vector<double> data_;
};

/// Mode-n unfolding: an I_n x (K / I_n) matrix whose columns are the mode-n fibres.
struct Unfolding {
    std::size_t mode = 0;
    Matrix matrix;
    Dims source_dims;
};

inline Vector vectorize(const DenseTensor& t) {
    const auto d = t.data();
    return Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
}

namespace detail {

// Sizes of the modes before and after mode n in the flat buffer.
inline std::pair<std::size_t, std::size_t> split_strides(const Dims& dims, std::size_t n) {
    std::size_t left = 1;
    for (std::size_t k = 0; k < n; ++k) left *= dims[k];
    std::size_t right = 1;
    for (std::size_t k = n + 1; k < dims.size(); ++k) right *= dims[k];
    return {left, right};
}

inline void check_mode(std::size_t order, std::size_t n) {
    require(n < order, ErrorKind::usage,
            "mode " + std::to_string(n) + " out of range for order-" + std::to_string(order) + " tensor");
}

} // namespace detail

inline Unfolding unfold(const DenseTensor& t, std::size_t n) {
    detail::check_mode(t.order(), n);
    const auto [left, right] = detail::split_strides(t.dims(), n);
    const std::size_t in = t.dim(n);
    const auto src = t.data();
    Matrix m(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(left * right));
    for (std::size_t b = 0; b < right; ++b)
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t a = 0; a < left; ++a)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a + left * b)) = src[a + left * (i + in * b)];
    return {n, std::move(m), t.dims()};
}

inline DenseTensor fold(const Matrix& m, std::size_t n, const Dims& dims) {
    detail::require(!dims.empty(), ErrorKind::usage, "fold needs a nonempty dimension list");
    detail::check_mode(dims.size(), n);
    const std::size_t k = detail::product(dims);
    detail::require(static_cast<std::size_t>(m.rows()) == dims[n] &&
                        static_cast<std::size_t>(m.rows() * m.cols()) == k,
                    ErrorKind::usage,
                    "matrix shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        " does not fold into dims " + detail::dims_string(dims) + " along mode " + std::to_string(n));
    const auto [left, right] = detail::split_strides(dims, n);
    const std::size_t in = dims[n];
    std::vector<double> data(k);
    for (std::size_t b = 0; b < right; ++b)
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t a = 0; a < left; ++a)
                data[a + left * (i + in * b)] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a + left * b));
    return {dims, std::move(data)};
}

/// t x_n u, where u is J_n x I_n. Unfold, left-multiply, re-tensorize.
inline DenseTensor mode_n_product(const DenseTensor& t, const Matrix& u, std::size_t n) {
    detail::check_mode(t.order(), n);
    detail::require(static_cast<std::size_t>(u.cols()) == t.dim(n), ErrorKind::usage,
                    "mode-" + std::to_string(n) + " product: matrix has " + std::to_string(u.cols()) +
                        " columns, tensor mode has " + std::to_string(t.dim(n)));
    Dims out = t.dims();
    out[n] = static_cast<std::size_t>(u.rows());
    const Matrix product = u * unfold(t, n).matrix;
    return fold(product, n, out);
}

/// Applies mats[n] along every mode n in turn.
inline DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Matrix> mats) {
    detail::require(mats.size() == t.order(), ErrorKind::usage, "multi_mode_product needs one matrix per mode");
    DenseTensor y = t;
    for (std::size_t n = 0; n < mats.size(); ++n) y = mode_n_product(y, mats[n], n);
    return y;
}

inline DenseTensor multi_mode_product(const DenseTensor& t, const std::vector<Matrix>& mats) {
    return multi_mode_product(t, std::span<const Matrix>(mats));
}

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Left fold of kronecker over mats in the order given: ((m0 kron m1) kron m2) ...
inline Matrix kronecker_seq(std::span<const Matrix> mats) {
    detail::require(!mats.empty(), ErrorKind::usage, "kronecker_seq needs at least one matrix");
    Matrix acc = mats.front();
    for (std::size_t k = 1; k < mats.size(); ++k) acc = kronecker(acc, mats[k]);
    return acc;
}

inline Matrix kronecker_seq(const std::vector<Matrix>& mats) { return kronecker_seq(std::span<const Matrix>(mats)); }

/// kronecker_seq over mats in reverse order (mats[N-1] kron ... kron mats[0]),
/// the operator that acts on vectorized tensors.
inline Matrix kronecker_reversed(std::span<const Matrix> mats) {
    std::vector<Matrix> rev(mats.rbegin(), mats.rend());
    return kronecker_seq(rev);
}

} // namespace kronrisk
