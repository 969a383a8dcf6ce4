#pragma once

// Command-line front end: estimate, factors, minvar, hedge, simulate, validate.
//
// Exit codes: 0 success, 2 I/O, 3 data validation (and bad arguments),
// 4 model parse, 5 numerical failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kronrisk/kronrisk.hpp"

namespace kronrisk::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, io_error = 2, data_error = 3, model_error = 4, numerical_error = 5 };

inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::io: return io_error;
    case ErrorKind::validation: return data_error;
    case ErrorKind::model_parse: return model_error;
    case ErrorKind::numerical: return numerical_error;
    case ErrorKind::usage: return data_error;
    }
    return data_error;
}

struct RunConfig {
    std::string command;
    std::string input;
    std::string output_dir = ".";
    std::string format = "csv";
    bool demean = true;
    std::string returns = "diff";
    bool domestic = false;
    std::string domain = "maturity";
    std::size_t index = 1;
    std::size_t factors = 3;
    std::uint64_t seed = 20150101;
    bool strict = false;
    // simulate
    std::size_t samples = 234;
    std::size_t maturities = 15;
    std::size_t countries = 8;
    double sigma2 = -1.0;
};

inline spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto l = spdlog::stderr_color_mt("kronrisk");
        l->set_pattern("[%l] %v");
        auto level = spdlog::level::warn;
        if (const char* env = std::getenv("KRONRISK_LOG")) {
            const std::string v = env;
            if (v == "error") level = spdlog::level::err;
            else if (v == "warn") level = spdlog::level::warn;
            else if (v == "info") level = spdlog::level::info;
            else if (v == "debug") level = spdlog::level::debug;
        }
        l->set_level(level);
        return l;
    }();
    return *logger;
}

// ---- file helpers -----------------------------------------------------------

inline std::string read_file(const std::string& path) {
    detail::require(!path.empty(), ErrorKind::io, "no input given (use --input)");
    if (!fs::exists(path)) detail::fail(ErrorKind::io, "input not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) detail::fail(ErrorKind::io, "cannot open input: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a temporary sibling and renames into place.
inline void write_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path(), ec);
    if (ec) detail::fail(ErrorKind::io, "cannot create output directory for " + path.string() + ": " + ec.message());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) detail::fail(ErrorKind::io, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) detail::fail(ErrorKind::io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) detail::fail(ErrorKind::io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    logger().info("wrote {}", path.string());
}

inline void write_json(const RunConfig& cfg, const std::string& name, const Json& j) {
    write_file(fs::path(cfg.output_dir) / name, j.dump(2) + "\n");
}

inline void write_csv(const RunConfig& cfg, const std::string& name, const std::string& csv) {
    if (cfg.format == "csv") write_file(fs::path(cfg.output_dir) / name, csv);
}

// ---- shared stages ----------------------------------------------------------

struct LoadedPanel {
    CurvePanel panel;
    ReturnSet returns;
};

inline LoadedPanel load_returns(const RunConfig& cfg) {
    std::istringstream in(read_file(cfg.input));
    LoadedPanel out{load_curve_panel(in), {}};
    const auto method = cfg.returns == "log" ? ReturnMethod::log_ratio : ReturnMethod::first_difference;
    const auto policy = cfg.strict ? MissingPolicy::strict : MissingPolicy::forward_fill;
    out.returns = compute_returns(out.panel, method, policy);
    if (out.returns.filled_cells > 0) logger().warn("forward-filled {} missing cells", out.returns.filled_cells);
    logger().info("loaded {} dates x {} maturities x {} countries", out.panel.date_count(), out.panel.maturity_count(),
               out.panel.country_count());
    return out;
}

inline std::vector<std::vector<std::string>> panel_labels(const ReturnSet& r) {
    std::vector<std::string> mats;
    for (double m : r.maturities) mats.push_back(format_maturity(m));
    return {mats, r.countries};
}

inline std::vector<std::string> labels_or_numbers(const ModelDocument& doc, std::size_t mode) {
    if (mode < doc.axis_labels.size()) return doc.axis_labels[mode];
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= doc.model.dims().at(mode); ++i) out.push_back(std::to_string(i));
    return out;
}

inline bool is_json_input(const std::string& path) { return fs::path(path).extension() == ".json"; }

inline ModelDocument load_model(const RunConfig& cfg) {
    const auto doc = parse_model(read_file(cfg.input));
    detail::require(doc.model.order() == 2, ErrorKind::model_parse, "model must be order 2 (maturity x country)");
    return doc;
}

// ---- commands ---------------------------------------------------------------

inline int cmd_estimate(const RunConfig& cfg) {
    const auto loaded = load_returns(cfg);
    const auto& samples = loaded.returns.samples;
    const auto model = estimate(samples, EstimateOptions{cfg.demean});
    const ModelDocument doc{model, panel_labels(loaded.returns)};
    write_json(cfg, "model.json", model_to_json(doc));

    const auto report = separability_diagnostic(samples, model);
    write_json(cfg, "separability.json", separability_json(report));
    write_csv(cfg, "separability_blocks.csv", [&] {
        std::ostringstream os;
        os << "country";
        for (const auto& c : loaded.returns.countries) os << ',' << csv_field(c);
        os << '\n';
        for (Eigen::Index i = 0; i < report.per_block_errors.rows(); ++i) {
            os << csv_field(loaded.returns.countries[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < report.per_block_errors.cols(); ++j)
                os << ',' << number(report.per_block_errors(i, j));
            os << '\n';
        }
        return os.str();
    }());

    std::cout << "samples: " << samples.size() << "\n"
              << "sigma2: " << number(model.sigma2()) << "\n"
              << "parameters: full " << report.full_params << ", separable " << report.separable_params << "\n"
              << "separability relative error: " << number(report.relative_error) << "\n";
    return ok;
}

inline int cmd_factors(const RunConfig& cfg) {
    ModelDocument doc;
    std::optional<ReturnSet> returns;
    if (is_json_input(cfg.input)) {
        detail::require(!cfg.domestic, ErrorKind::validation, "--domestic needs a panel (CSV) input");
        doc = load_model(cfg);
    } else {
        auto loaded = load_returns(cfg);
        doc = ModelDocument{estimate(loaded.returns.samples, EstimateOptions{cfg.demean}),
                            panel_labels(loaded.returns)};
        returns = std::move(loaded.returns);
    }
    const auto dec = decompose(doc.model);
    const auto mats = labels_or_numbers(doc, 0);
    const auto ctys = labels_or_numbers(doc, 1);

    const auto table_m = variance_table(dec, 0, position_labels(0));
    const auto table_c = variance_table(dec, 1, position_labels(1));
    write_csv(cfg, "loadings_maturity.csv", loadings_csv(dec.eigenvectors(0), mats, "m", "maturity"));
    write_csv(cfg, "loadings_country.csv", loadings_csv(dec.eigenvectors(1), ctys, "c", "country"));
    write_csv(cfg, "variance_maturity.csv", variance_table_csv(table_m));
    write_csv(cfg, "variance_country.csv", variance_table_csv(table_c));

    Json j;
    j["sigma2"] = dec.sigma2();
    j["maturity"] = {{"labels", mats},
                     {"eigenvalues", vector_to_json(dec.eigenvalues(0))},
                     {"loadings", matrix_to_json(dec.eigenvectors(0))},
                     {"variance_table", variance_table_json(table_m)}};
    j["country"] = {{"labels", ctys},
                    {"eigenvalues", vector_to_json(dec.eigenvalues(1))},
                    {"loadings", matrix_to_json(dec.eigenvectors(1))},
                    {"variance_table", variance_table_json(table_c)}};

    std::cout << "Maturity-domain factors\n" << render_variance_table(table_m) << "\n"
              << "Country-domain factors\n" << render_variance_table(table_c);

    if (cfg.domestic) {
        std::vector<DomesticPca> pcas;
        Json dj = Json::array();
        for (std::size_t c = 0; c < returns->countries.size(); ++c) {
            pcas.push_back(domestic_pca(returns->samples, c));
            dj.push_back({{"economy", returns->countries[c]},
                          {"fractions", vector_to_json(pcas.back().fractions)},
                          {"loadings", matrix_to_json(pcas.back().eigenvectors)}});
        }
        j["domestic"] = std::move(dj);
        write_csv(cfg, "domestic_pca.csv", domestic_table_csv(returns->countries, pcas));
        std::cout << "\nDomestic PCA [%]\n" << render_domestic_table(returns->countries, pcas);
    }
    write_json(cfg, "factors.json", j);
    return ok;
}

inline int cmd_minvar(const RunConfig& cfg) {
    const auto doc = load_model(cfg);
    const auto w = min_variance_separable(doc.model);
    const Vector full = w.full();
    const double variance = portfolio_variance(full, full_covariance(doc.model));
    const auto mats = labels_or_numbers(doc, 0);
    const auto ctys = labels_or_numbers(doc, 1);

    write_csv(cfg, "weights_maturity.csv", weights_csv(w.maturity, mats));
    write_csv(cfg, "weights_country.csv", weights_csv(w.country, ctys));
    write_csv(cfg, "weights_full.csv", weights_csv(full, full_asset_labels(mats, ctys)));
    Json j;
    j["maturity_weights"] = vector_to_json(w.maturity);
    j["country_weights"] = vector_to_json(w.country);
    j["full_weights"] = vector_to_json(full);
    j["portfolio_variance"] = variance;
    write_json(cfg, "minvar.json", j);

    std::cout << "minimum-variance portfolio variance: " << number(variance) << "\n";
    return ok;
}

inline int cmd_hedge(const RunConfig& cfg) {
    const auto doc = load_model(cfg);
    const auto dec = decompose(doc.model);
    detail::require(cfg.domain == "maturity" || cfg.domain == "country", ErrorKind::validation,
                    "--domain must be maturity or country");
    detail::require(cfg.index >= 1, ErrorKind::validation, "--index is one-based");
    HedgeSpec spec{cfg.domain == "maturity" ? HedgeDomain::maturity : HedgeDomain::country, cfg.index - 1,
                   cfg.factors};
    HedgeOptions opts;
    opts.strict = cfg.strict;
    HedgeResult res;
    try {
        res = hedge(dec, spec, opts);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::usage) detail::fail(ErrorKind::validation, e.what());
        throw;
    }
    if (!res.consistent) logger().warn("hedge system is inconsistent (residual {:.3e})", res.residual);

    const std::size_t mode = static_cast<std::size_t>(spec.domain);
    write_csv(cfg, "hedge_weights.csv", weights_csv(res.weights, labels_or_numbers(doc, mode)));
    Json j;
    j["domain"] = to_string(spec.domain);
    j["index"] = cfg.index;
    j["factors_hedged"] = cfg.factors;
    j["weights"] = vector_to_json(res.weights);
    j["residual"] = res.residual;
    j["consistent"] = res.consistent;
    j["factor_exposures"] = vector_to_json(res.exposures);
    write_json(cfg, "hedge.json", j);

    std::cout << "hedge weights (" << to_string(spec.domain) << "):";
    for (Eigen::Index i = 0; i < res.weights.size(); ++i) std::cout << ' ' << number(res.weights(i));
    std::cout << "\nresidual: " << number(res.residual) << (res.consistent ? "" : " (inconsistent)") << "\n";
    return ok;
}

inline int cmd_simulate(const RunConfig& cfg) {
    KroneckerCovarianceModel model;
    PanelSimulation sim;
    if (!cfg.input.empty()) {
        const auto doc = load_model(cfg);
        model = doc.model;
        if (doc.axis_labels.size() == 2) {
            for (const auto& m : doc.axis_labels[0]) {
                double v = 0.0;
                detail::require(detail::parse_double(m, v), ErrorKind::model_parse,
                                "maturity label '" + m + "' is not numeric");
                sim.maturities.push_back(v);
            }
            sim.countries = doc.axis_labels[1];
        }
    } else {
        detail::require(cfg.maturities >= 3 && cfg.countries >= 1, ErrorKind::validation,
                        "simulate needs --maturities >= 3 and --countries >= 1");
        model = desk_model(cfg.maturities, cfg.countries, cfg.sigma2);
    }
    detail::require(cfg.samples >= 1, ErrorKind::validation, "--samples must be at least 1");
    sim.sample_count = cfg.samples;
    sim.seed = cfg.seed;
    const auto panel = simulate_panel(model, sim);
    std::ostringstream os;
    write_curve_panel(os, panel);
    write_file(fs::path(cfg.output_dir) / "synthetic_panel.csv", os.str());
    std::cout << "seed: " << cfg.seed << "\n";
    return ok;
}

inline int cmd_validate(const RunConfig& cfg) {
    std::istringstream in(read_file(cfg.input));
    const auto panel = load_curve_panel(in);
    const auto report = validate_panel(panel);
    write_json(cfg, "validation.json", validation_json(report));
    std::cout << "dates: " << report.date_count << ", maturities: " << report.maturities.size()
              << ", countries: " << report.countries.size() << ", median spacing: "
              << number(report.median_spacing_days) << " days\n";
    for (const auto& issue : report.issues) std::cout << to_string(issue.kind) << ": " << issue.message << "\n";
    const std::size_t blocking =
        report.count(PanelIssue::Kind::missing_cell) + report.count(PanelIssue::Kind::non_monotone_timestamp);
    if (cfg.strict && blocking > 0) {
        std::cerr << "error: panel has " << blocking << " blocking issue(s)\n";
        return data_error;
    }
    return ok;
}

inline int dispatch(const RunConfig& cfg) {
    if (cfg.command == "estimate") return cmd_estimate(cfg);
    if (cfg.command == "factors") return cmd_factors(cfg);
    if (cfg.command == "minvar") return cmd_minvar(cfg);
    if (cfg.command == "hedge") return cmd_hedge(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "validate") return cmd_validate(cfg);
    detail::fail(ErrorKind::validation, "unknown command '" + cfg.command + "'");
}

/// Parses arguments and runs one command; returns the process exit code.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"Kronecker-separable risk factor models for maturity x country return panels", "kronrisk"};
    app.set_config("--config", "", "TOML-style config file; command-line flags take precedence");
    app.require_subcommand(1);

    RunConfig cfg;
    // Shared options live on the root app so flat config keys reach every
    // command; subcommands fall through to them.
    app.add_option("--input", cfg.input, "Input panel CSV or model JSON");
    app.add_option("--output-dir", cfg.output_dir, "Directory for output files")->capture_default_str();
    app.add_option("--format", cfg.format, "Output table format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app.add_flag("--demean,!--no-demean", cfg.demean, "Subtract the sample mean before estimation");
    app.add_option("--returns", cfg.returns, "Return transform")->check(CLI::IsMember({"diff", "log"}));
    app.add_flag("--strict", cfg.strict, "Fail on missing data and inconsistent hedges");

    auto add = [&](const char* name, const char* help) { return app.add_subcommand(name, help)->fallthrough(); };
    add("estimate", "Estimate a separable model from a rate panel");
    auto* factors_cmd = add("factors", "Maturity and country factor loadings and variance tables");
    factors_cmd->add_flag("--domestic", cfg.domestic, "Also run per-country domestic PCA (panel input)");
    add("minvar", "Separable minimum-variance portfolio");
    auto* hedge_cmd = add("hedge", "Factor-hedged portfolio in one domain");
    hedge_cmd->add_option("--domain", cfg.domain, "Hedging domain")->check(CLI::IsMember({"maturity", "country"}));
    hedge_cmd->add_option("--index", cfg.index, "One-based index of the long asset in the domain");
    hedge_cmd->add_option("--r", cfg.factors, "Number of leading domain factors to hedge")->capture_default_str();
    auto* simulate_cmd = add("simulate", "Generate a synthetic rate panel");
    simulate_cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    simulate_cmd->add_option("--samples", cfg.samples, "Number of returns T")->capture_default_str();
    simulate_cmd->add_option("--maturities", cfg.maturities, "Number of maturities")->capture_default_str();
    simulate_cmd->add_option("--countries", cfg.countries, "Number of countries")->capture_default_str();
    simulate_cmd->add_option("--sigma2", cfg.sigma2, "Total variance (default 0.01 per cell)");
    add("validate", "Check a rate panel for missing or inconsistent data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return data_error;
    }
    for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();

    try {
        return dispatch(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical_error;
    }
}

} // namespace kronrisk::cli
