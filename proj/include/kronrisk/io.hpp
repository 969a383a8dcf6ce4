#pragma once

// JSON and CSV forms of models, factor tables, weights and reports.
//
// Model document:
//   {"sigma2": s, "dims": [I1, ...], "thetas": [[[row], ...], ...],
//    "sample_count": T, "demeaned": bool, "axis_labels": [[...], ...]}
// axis_labels is optional. Doubles are written in shortest round-trip form,
// so parsing a dumped document reproduces every value bit for bit.

#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kronrisk/covariance.hpp"
#include "kronrisk/error.hpp"
#include "kronrisk/factors.hpp"
#include "kronrisk/panel.hpp"
#include "kronrisk/portfolio.hpp"

namespace kronrisk {

using Json = nlohmann::ordered_json;

struct ModelDocument {
    KroneckerCovarianceModel model;
    /// One label list per mode (maturities, countries); may be empty.
    std::vector<std::vector<std::string>> axis_labels;
};

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Json model_to_json(const ModelDocument& doc) {
    const auto& m = doc.model;
    Json j;
    j["sigma2"] = m.sigma2();
    j["dims"] = m.dims();
    Json thetas = Json::array();
    for (const auto& th : m.thetas()) thetas.push_back(matrix_to_json(th));
    j["thetas"] = std::move(thetas);
    j["sample_count"] = m.sample_count();
    j["demeaned"] = m.demeaned();
    if (!doc.axis_labels.empty()) j["axis_labels"] = doc.axis_labels;
    return j;
}

inline ModelDocument model_from_json(const Json& j) {
    try {
        const double sigma2 = j.at("sigma2").get<double>();
        const auto dims = j.at("dims").get<std::vector<std::size_t>>();
        const auto& thetas_json = j.at("thetas");
        detail::require(thetas_json.is_array() && thetas_json.size() == dims.size(), ErrorKind::model_parse,
                        "model: thetas must hold one matrix per dim");
        std::vector<Matrix> thetas;
        for (std::size_t n = 0; n < dims.size(); ++n) {
            const auto rows = thetas_json[n].get<std::vector<std::vector<double>>>();
            const auto in = static_cast<Eigen::Index>(dims[n]);
            detail::require(rows.size() == dims[n], ErrorKind::model_parse,
                            "model: theta " + std::to_string(n) + " has wrong row count");
            Matrix th(in, in);
            for (Eigen::Index r = 0; r < in; ++r) {
                const auto& row = rows[static_cast<std::size_t>(r)];
                detail::require(row.size() == dims[n], ErrorKind::model_parse,
                                "model: theta " + std::to_string(n) + " has a ragged row");
                for (Eigen::Index c = 0; c < in; ++c) th(r, c) = row[static_cast<std::size_t>(c)];
            }
            thetas.push_back(std::move(th));
        }
        const auto count = j.value("sample_count", std::size_t{0});
        const bool demeaned = j.value("demeaned", false);
        ModelDocument doc{KroneckerCovarianceModel(sigma2, std::move(thetas), count, demeaned), {}};
        if (j.contains("axis_labels")) {
            doc.axis_labels = j.at("axis_labels").get<std::vector<std::vector<std::string>>>();
            detail::require(doc.axis_labels.size() == dims.size(), ErrorKind::model_parse,
                            "model: axis_labels must hold one list per dim");
            for (std::size_t n = 0; n < dims.size(); ++n)
                detail::require(doc.axis_labels[n].size() == dims[n], ErrorKind::model_parse,
                                "model: axis_labels[" + std::to_string(n) + "] has wrong length");
        }
        return doc;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::model_parse) throw;
        detail::fail(ErrorKind::model_parse, std::string("invalid model: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        detail::fail(ErrorKind::model_parse, std::string("invalid model document: ") + e.what());
    }
}

inline ModelDocument parse_model(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        detail::fail(ErrorKind::model_parse, std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

// ---- plain-text and CSV formatting ---------------------------------------

/// Fraction as a percentage with two decimals, e.g. 0.9237 -> "92.37".
inline std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

inline std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Factor | Symbol | Economic interpretation | Variance explained [%]
inline std::string render_variance_table(const VarianceTable& t) {
    std::size_t label_w = std::string("Economic interpretation").size();
    std::size_t sym_w = std::string("Symbol").size();
    for (const auto& r : t.rows) {
        label_w = std::max(label_w, r.label.size());
        sym_w = std::max(sym_w, r.symbol.size());
    }
    std::ostringstream os;
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    os << "Factor | " << pad("Symbol", sym_w) << " | " << pad("Economic interpretation", label_w)
       << " | Variance explained [%]\n";
    for (const auto& r : t.rows) {
        os << pad(std::to_string(r.factor), 6) << " | " << pad(r.symbol, sym_w) << " | " << pad(r.label, label_w)
           << " | " << percent(r.fraction) << "\n";
    }
    return os.str();
}

inline std::string variance_table_csv(const VarianceTable& t) {
    std::ostringstream os;
    os << "factor,symbol,interpretation,variance_explained_pct,cumulative_pct\n";
    for (const auto& r : t.rows)
        os << r.factor << ',' << csv_field(r.symbol) << ',' << csv_field(r.label) << ',' << percent(r.fraction) << ','
           << percent(r.cumulative) << '\n';
    return os.str();
}

inline Json variance_table_json(const VarianceTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"factor", r.factor},
                        {"symbol", r.symbol},
                        {"interpretation", r.label},
                        {"fraction", r.fraction},
                        {"cumulative", r.cumulative}});
    }
    return {{"domain", t.domain}, {"rows", std::move(rows)}};
}

/// One factor per column: header `label,u1(tag),u2(tag),...`, one row per axis label.
inline std::string loadings_csv(const Matrix& u, const std::vector<std::string>& axis, const std::string& tag,
                                const std::string& axis_name) {
    std::ostringstream os;
    os << axis_name;
    for (Eigen::Index k = 0; k < u.cols(); ++k) os << ",u" << (k + 1) << "(" << tag << ")";
    os << '\n';
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        os << csv_field(static_cast<std::size_t>(i) < axis.size() ? axis[static_cast<std::size_t>(i)]
                                                                   : std::to_string(i + 1));
        for (Eigen::Index k = 0; k < u.cols(); ++k) os << ',' << number(u(i, k));
        os << '\n';
    }
    return os.str();
}

/// Asset label + weight, one row per asset.
inline std::string weights_csv(const Vector& w, const std::vector<std::string>& labels) {
    std::ostringstream os;
    os << "asset,weight\n";
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        os << csv_field(static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)]
                                                                     : std::to_string(i + 1))
           << ',' << number(w(i)) << '\n';
    }
    return os.str();
}

/// Full-vector asset labels "maturity:country", maturity fastest.
inline std::vector<std::string> full_asset_labels(const std::vector<std::string>& maturities,
                                                  const std::vector<std::string>& countries) {
    std::vector<std::string> out;
    for (const auto& c : countries)
        for (const auto& m : maturities) out.push_back(m + "Y:" + c);
    return out;
}

inline Json separability_json(const SeparabilityReport& r) {
    return {{"relative_error", r.relative_error},
            {"full_params", r.full_params},
            {"separable_params", r.separable_params},
            {"per_block_errors", matrix_to_json(r.per_block_errors)}};
}

inline Json validation_json(const ValidationReport& r) {
    Json issues = Json::array();
    for (const auto& i : r.issues) issues.push_back({{"kind", to_string(i.kind)}, {"message", i.message}});
    std::vector<std::string> mats;
    for (double m : r.maturities) mats.push_back(format_maturity(m));
    return {{"dates", r.date_count},
            {"maturities", mats},
            {"countries", r.countries},
            {"median_spacing_days", r.median_spacing_days},
            {"fillable_cells", r.fillable_cells},
            {"unfillable_cells", r.unfillable_cells},
            {"issues", std::move(issues)}};
}

/// Domestic PCA summary: Economy | Level | Slope | Curvature (percent).
inline std::string domestic_table_csv(const std::vector<std::string>& countries,
                                      const std::vector<DomesticPca>& pcas) {
    std::ostringstream os;
    os << "economy,level_pct,slope_pct,curvature_pct\n";
    for (std::size_t j = 0; j < pcas.size(); ++j) {
        os << csv_field(countries[j]);
        for (Eigen::Index k = 0; k < 3; ++k)
            os << ',' << (k < pcas[j].fractions.size() ? percent(pcas[j].fractions(k)) : std::string{});
        os << '\n';
    }
    return os.str();
}

inline std::string render_domestic_table(const std::vector<std::string>& countries,
                                         const std::vector<DomesticPca>& pcas) {
    std::ostringstream os;
    os << "Economy | Level  | Slope  | Curvature\n";
    char buf[96];
    for (std::size_t j = 0; j < pcas.size(); ++j) {
        const auto& f = pcas[j].fractions;
        auto at = [&](Eigen::Index k) { return k < f.size() ? 100.0 * f(k) : 0.0; };
        std::snprintf(buf, sizeof buf, "%-7s | %6.2f | %6.2f | %6.2f\n", countries[j].c_str(), at(0), at(1), at(2));
        os << buf;
    }
    return os.str();
}

} // namespace kronrisk
