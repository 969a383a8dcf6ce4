// Simulate maturity x country returns, fit a separable model, and print the
// leading factors, a minimum-variance portfolio and a level/slope hedge.

#include <iostream>

#include "kronrisk/kronrisk.hpp"

int main() {
    using namespace kronrisk;

    const auto truth = desk_model(15, 8);
    const auto samples = sample_kronecker_gaussian({truth, 2000, 7});
    const auto model = estimate(samples);

    const auto counts = parameter_counts(model.dims());
    std::cout << "parameters: full " << counts.full << ", separable " << counts.separable << "\n";
    std::cout << "separability error: " << separability_diagnostic(samples, model).relative_error << "\n\n";

    const auto dec = decompose(model);
    std::cout << render_variance_table(variance_table(dec, 0, position_labels(0))) << "\n";

    const auto top = composed_factor(dec, 0, 0);
    std::cout << "top composed factor variance: " << top.eigenvalue << "\n";

    const auto w = min_variance_separable(model);
    std::cout << "min-variance variance: " << portfolio_variance(w.full(), full_covariance(model)) << "\n";

    // Long the 10Y point, hedged against level and slope.
    const auto h = hedge(dec, {HedgeDomain::maturity, 9, 2});
    std::cout << "hedge residual: " << h.residual << "\nweights:";
    for (Eigen::Index i = 0; i < h.weights.size(); ++i) std::cout << ' ' << h.weights(i);
    std::cout << "\n";
}
