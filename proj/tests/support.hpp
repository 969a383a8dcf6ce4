#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "kronrisk/kronrisk.hpp"

namespace kronrisk::test {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, NormalStream& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng();
    return m;
}

inline DenseTensor random_tensor(const Dims& dims, NormalStream& rng) {
    std::vector<double> data(detail::product(dims));
    for (double& v : data) v = rng();
    return {dims, std::move(data)};
}

inline Dims random_dims(std::size_t order, std::size_t max_dim, NormalStream& rng) {
    Dims dims;
    for (std::size_t n = 0; n < order; ++n)
        dims.push_back(1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_dim)));
    return dims;
}

inline double rel_error(const Matrix& a, const Matrix& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

inline std::vector<double> sorted(const Vector& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace kronrisk::test
