#pragma once

// Deterministic tensor-valued Gaussian samples with an exactly
// Kronecker-separable covariance, and brute-force oracles for tests.
//
// Random stream: std::mt19937_64 seeded with the 64-bit seed; each draw is
// mapped to u = ((bits >> 11) + 0.5) * 2^-53 and then through the AS241
// (PPND16) inverse normal CDF. Any port that uses the same two algorithms
// reproduces the stream exactly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kronrisk/covariance.hpp"
#include "kronrisk/error.hpp"
#include "kronrisk/panel.hpp"
#include "kronrisk/tensor.hpp"

namespace kronrisk {

/// Inverse standard normal CDF, Wichura's AS241 (PPND16), ~1e-16 relative accuracy.
inline double normal_quantile(double p) {
    detail::require(p > 0.0 && p < 1.0, ErrorKind::usage, "normal_quantile needs p in (0, 1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double val = 0.0;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                   1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                   0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                   0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                   7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

/// Seeded standard-normal stream (mt19937_64 + AS241).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    double operator()() { return normal_quantile(uniform()); }

private:
    std::mt19937_64 engine_;
};

/// Symmetric PSD square root L with L L^T = theta (eigendecomposition based,
/// so singular inputs are fine).
inline Matrix psd_sqrt(const Matrix& theta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(theta);
    detail::require(es.info() == Eigen::Success, ErrorKind::numerical, "eigendecomposition failed in psd_sqrt");
    Vector root(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < root.size(); ++i) {
        const double l = es.eigenvalues()(i);
        detail::require(l >= -kPsdTol, ErrorKind::usage, "matrix is not positive semidefinite");
        root(i) = std::sqrt(std::max(l, 0.0));
    }
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

struct GeneratorConfig {
    KroneckerCovarianceModel model;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
};

/// X_t = sigma * Z_t x_1 L_1 ... x_N L_N with Z_t i.i.d. standard normal,
/// drawn in buffer order, one sample after another. For order 2 this is
/// sigma * L_m Z_t L_c^T.
inline std::vector<DenseTensor> sample_kronecker_gaussian(const GeneratorConfig& cfg) {
    detail::require(cfg.sample_count >= 1, ErrorKind::usage, "sample_count must be at least 1");
    const auto& model = cfg.model;
    const double sigma = std::sqrt(model.sigma2());
    std::vector<Matrix> roots;
    for (const auto& th : model.thetas()) roots.push_back(psd_sqrt(th));

    NormalStream rng(cfg.seed);
    const Dims& dims = model.dims();
    const std::size_t k = detail::product(dims);
    std::vector<DenseTensor> out;
    out.reserve(cfg.sample_count);
    for (std::size_t t = 0; t < cfg.sample_count; ++t) {
        std::vector<double> z(k);
        for (double& v : z) v = rng();
        if (dims.size() == 2) {
            const Eigen::Map<const Matrix> zm(z.data(), static_cast<Eigen::Index>(dims[0]),
                                              static_cast<Eigen::Index>(dims[1]));
            const Matrix x = sigma * (roots[0] * zm * roots[1].transpose());
            out.push_back(DenseTensor::from_matrix(x));
        } else {
            DenseTensor x = multi_mode_product(DenseTensor(dims, std::move(z)), roots);
            const auto d = x.data();
            std::vector<double> scaled(d.begin(), d.end());
            for (double& v : scaled) v *= sigma;
            out.emplace_back(dims, std::move(scaled));
        }
    }
    return out;
}

/// (1/(T-1)) sum_t x_t x_t^T on vectorized samples, accumulated entry by
/// entry. Kept free of the estimator code paths so it can serve as an oracle.
inline Matrix brute_force_covariance(std::span<const DenseTensor> samples, bool demean = false) {
    detail::require(samples.size() >= 2, ErrorKind::validation, "brute_force_covariance needs at least 2 samples");
    const std::size_t k = samples.front().size();
    for (const auto& s : samples)
        detail::require(s.dims() == samples.front().dims(), ErrorKind::validation, "inconsistent sample dims");
    std::vector<double> mean(k, 0.0);
    if (demean) {
        for (const auto& s : samples)
            for (std::size_t a = 0; a < k; ++a) mean[a] += s.data()[a];
        for (double& m : mean) m /= static_cast<double>(samples.size());
    }
    Matrix c = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (const auto& s : samples) {
        const auto d = s.data();
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += (d[a] - mean[a]) * (d[b] - mean[b]);
    }
    return c / static_cast<double>(samples.size() - 1);
}

inline Matrix brute_force_covariance(const std::vector<DenseTensor>& samples, bool demean = false) {
    return brute_force_covariance(std::span<const DenseTensor>(samples), demean);
}

/// Random unit-trace positive definite matrix: (A A^T + ridge I) / trace.
inline Matrix random_density(std::size_t n, NormalStream& rng, double ridge = 0.05) {
    const auto m = static_cast<Eigen::Index>(n);
    Matrix a(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i) a(i, j) = rng();
    Matrix th = a * a.transpose() + ridge * static_cast<double>(n) * Matrix::Identity(m, m);
    th = 0.5 * (th + th.transpose()).eval();
    return th / th.trace();
}

/// Random valid positive definite model with sigma2 in [0.5, 2.5).
inline KroneckerCovarianceModel random_model(const Dims& dims, std::uint64_t seed) {
    NormalStream rng(seed);
    const double sigma2 = 0.5 + 2.0 * rng.uniform();
    std::vector<Matrix> thetas;
    for (std::size_t d : dims) thetas.push_back(random_density(d, rng));
    return {sigma2, std::move(thetas)};
}

inline std::vector<double> default_maturities(std::size_t im) {
    if (im == 15) return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 25, 30};
    std::vector<double> out;
    for (std::size_t i = 1; i <= im; ++i) out.push_back(static_cast<double>(i));
    return out;
}

inline std::vector<std::string> default_countries(std::size_t ic) {
    if (ic == 8) return {"SF", "EU", "GB", "JP", "AU", "NZ", "CA", "US"};
    std::vector<std::string> out;
    for (std::size_t j = 1; j <= ic; ++j) out.push_back("C" + std::to_string(j));
    return out;
}

/// Desk-style order-2 model: a maturity density dominated by level, slope and
/// curvature shapes (92% / 6% / 1%, the last 1% spread over the remaining
/// factors) and a country density with a common component plus idiosyncratic
/// variance. sigma2 defaults to 0.01 pp^2 per cell.
inline KroneckerCovarianceModel desk_model(std::size_t im = 15, std::size_t ic = 8, double sigma2 = -1.0) {
    detail::require(im >= 3 && ic >= 1, ErrorKind::usage, "desk_model needs at least 3 maturities and 1 country");
    const auto m = static_cast<Eigen::Index>(im);
    const auto mats = default_maturities(im);
    Matrix shapes(m, m);
    shapes.setIdentity();
    const double tau = 3.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double x = mats[static_cast<std::size_t>(i)] / tau;
        const double slope = (1.0 - std::exp(-x)) / x;
        shapes(i, 0) = 1.0;
        shapes(i, 1) = slope;
        shapes(i, 2) = slope - std::exp(-x);
    }
    // Orthonormal basis whose leading columns span level, slope, curvature.
    Eigen::HouseholderQR<Matrix> qr(shapes);
    const Matrix q = qr.householderQ() * Matrix::Identity(m, m);

    Vector lambda(m);
    lambda(0) = 0.92;
    lambda(1) = 0.06;
    lambda(2) = 0.01;
    double tail = 0.0;
    for (Eigen::Index i = 3; i < m; ++i) tail += std::pow(0.5, static_cast<double>(i - 2));
    for (Eigen::Index i = 3; i < m; ++i) lambda(i) = 0.01 * std::pow(0.5, static_cast<double>(i - 2)) / tail;
    if (m == 3) lambda(0) += 0.01;
    Matrix theta_m = q * lambda.asDiagonal() * q.transpose();
    theta_m = 0.5 * (theta_m + theta_m.transpose()).eval();
    theta_m /= theta_m.trace();

    const auto c = static_cast<Eigen::Index>(ic);
    Matrix corr = Matrix::Constant(c, c, 0.55);
    corr.diagonal().setOnes();
    Vector vol(c);
    for (Eigen::Index j = 0; j < c; ++j) vol(j) = 0.8 + 0.4 * static_cast<double>(j % 4) / 3.0;
    Matrix theta_c = vol.asDiagonal() * corr * vol.asDiagonal();
    theta_c /= theta_c.trace();

    if (sigma2 < 0.0) sigma2 = 0.01 * static_cast<double>(im * ic);
    return {sigma2, {theta_m, theta_c}};
}

struct PanelSimulation {
    std::size_t sample_count = 234; // weekly returns
    std::uint64_t seed = 20150101;
    double base_rate = 2.0;
    Date start = Date{std::chrono::year{2015}, std::chrono::January, std::chrono::day{1}};
    int step_days = 7;
    std::vector<double> maturities;     // defaults from model dims
    std::vector<std::string> countries; // defaults from model dims
};

/// Rate panel whose first differences are samples of `model`: rates start at
/// base_rate and accumulate the simulated returns.
inline CurvePanel simulate_panel(const KroneckerCovarianceModel& model, const PanelSimulation& sim) {
    detail::require(model.order() == 2, ErrorKind::usage, "panel simulation needs an order-2 model");
    const std::size_t im = model.dims()[0];
    const std::size_t ic = model.dims()[1];
    auto maturities = sim.maturities.empty() ? default_maturities(im) : sim.maturities;
    auto countries = sim.countries.empty() ? default_countries(ic) : sim.countries;
    detail::require(maturities.size() == im && countries.size() == ic, ErrorKind::usage,
                    "axis labels do not match model dims");
    const auto samples = sample_kronecker_gaussian({model, sim.sample_count, sim.seed});

    const std::size_t nt = sim.sample_count + 1;
    std::vector<Date> dates;
    for (std::size_t t = 0; t < nt; ++t)
        dates.emplace_back(std::chrono::sys_days{sim.start} + std::chrono::days{sim.step_days * static_cast<int>(t)});
    std::vector<double> rates(nt * im * ic, sim.base_rate);
    for (std::size_t t = 1; t < nt; ++t) {
        const auto x = samples[t - 1].data();
        for (std::size_t j = 0; j < ic; ++j)
            for (std::size_t i = 0; i < im; ++i) {
                const std::size_t cur = i + im * (j + ic * t);
                const std::size_t prev = i + im * (j + ic * (t - 1));
                rates[cur] = rates[prev] + x[i + im * j];
            }
    }
    std::vector<char> missing(rates.size(), 0);
    return {std::move(dates), std::move(maturities), std::move(countries), std::move(rates), std::move(missing)};
}

} // namespace kronrisk
