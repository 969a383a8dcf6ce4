#pragma once

// Rate-curve panels (date x maturity x country) and their conversion into
// order-2 return samples X_t with [X_t]_ij = return of maturity i, country j.
//
// File format: UTF-8 CSV, long format, header `date,country,maturity_years,rate`,
// ISO-8601 dates, rates in percentage points, rows in any order, blank rate =
// missing.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "kronrisk/error.hpp"
#include "kronrisk/tensor.hpp"

namespace kronrisk {

using Date = std::chrono::year_month_day;

/// Parses a strict `YYYY-MM-DD` date.
inline Date parse_date(std::string_view s) {
    auto bad = [&] { detail::fail(ErrorKind::validation, "invalid date '" + std::string(s) + "', expected YYYY-MM-DD"); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') bad();
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        const char* first = s.data() + pos;
        auto [ptr, ec] = std::from_chars(first, first + len, out);
        if (ec != std::errc{} || ptr != first + len) bad();
    };
    field(0, 4, y);
    field(5, 2, m);
    field(8, 2, d);
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) bad();
    return date;
}

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

/// Maturity label as written in files and reports, e.g. "10" or "0.5".
inline std::string format_maturity(double years) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", years);
    return buf;
}

class CurvePanel {
public:
    CurvePanel() = default;

    /// `rates` and `missing` are indexed (t, i, j) with the country index j
    /// slowest: offset = i + I_m * (j + I_c * t). Missing cells may hold any
    /// value. Timestamp order is checked by validate_panel and compute_returns.
    CurvePanel(std::vector<Date> dates, std::vector<double> maturities, std::vector<std::string> countries,
               std::vector<double> rates, std::vector<char> missing)
        : dates_(std::move(dates)), maturities_(std::move(maturities)), countries_(std::move(countries)),
          rates_(std::move(rates)), missing_(std::move(missing)) {
        const std::size_t cells = dates_.size() * maturities_.size() * countries_.size();
        detail::require(!dates_.empty() && !maturities_.empty() && !countries_.empty(), ErrorKind::validation,
                        "panel axes must be nonempty");
        detail::require(rates_.size() == cells && missing_.size() == cells, ErrorKind::validation,
                        "panel grid size does not match its axes");
        for (std::size_t i = 1; i < maturities_.size(); ++i)
            detail::require(maturities_[i] > maturities_[i - 1], ErrorKind::validation,
                            "maturities must be strictly increasing");
        std::set<std::string> seen(countries_.begin(), countries_.end());
        detail::require(seen.size() == countries_.size(), ErrorKind::validation, "country codes must be unique");
    }

    [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
    [[nodiscard]] const std::vector<double>& maturities() const noexcept { return maturities_; }
    [[nodiscard]] const std::vector<std::string>& countries() const noexcept { return countries_; }
    [[nodiscard]] std::size_t date_count() const noexcept { return dates_.size(); }
    [[nodiscard]] std::size_t maturity_count() const noexcept { return maturities_.size(); }
    [[nodiscard]] std::size_t country_count() const noexcept { return countries_.size(); }

    [[nodiscard]] std::size_t offset(std::size_t t, std::size_t i, std::size_t j) const {
        return i + maturities_.size() * (j + countries_.size() * t);
    }
    [[nodiscard]] double rate(std::size_t t, std::size_t i, std::size_t j) const { return rates_[offset(t, i, j)]; }
    [[nodiscard]] bool missing(std::size_t t, std::size_t i, std::size_t j) const {
        return missing_[offset(t, i, j)] != 0;
    }
    [[nodiscard]] std::size_t missing_count() const {
        return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), char{1}));
    }

    /// Copy with countries reordered: new country k is old country perm[k].
    [[nodiscard]] CurvePanel permute_countries(const std::vector<std::size_t>& perm) const {
        detail::require(perm.size() == countries_.size(), ErrorKind::usage, "permutation size mismatch");
        std::vector<std::string> countries;
        for (std::size_t k : perm) countries.push_back(countries_.at(k));
        std::vector<double> rates(rates_.size());
        std::vector<char> missing(missing_.size());
        for (std::size_t t = 0; t < dates_.size(); ++t)
            for (std::size_t k = 0; k < perm.size(); ++k)
                for (std::size_t i = 0; i < maturities_.size(); ++i) {
                    rates[offset(t, i, k)] = rates_[offset(t, i, perm[k])];
                    missing[offset(t, i, k)] = missing_[offset(t, i, perm[k])];
                }
        return {dates_, maturities_, std::move(countries), std::move(rates), std::move(missing)};
    }

private:
    std::vector<Date> dates_;
    std::vector<double> maturities_;
    std::vector<std::string> countries_;
    std::vector<double> rates_;
    std::vector<char> missing_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

} // namespace detail

/// Reads a long-format panel. Cells that are blank or absent are recorded
/// as missing, never filled.
inline CurvePanel load_curve_panel(std::istream& in) {
    using detail::fail;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::validation, "empty panel file: missing header");
    std::string_view header = line;
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    if (detail::trim(header) != "date,country,maturity_years,rate") {
        fail(ErrorKind::validation, "malformed header '" + std::string(detail::trim(header)) +
                                        "', expected 'date,country,maturity_years,rate'");
    }

    struct Cell {
        double rate;
        bool missing;
    };
    std::map<std::tuple<int, double, std::string>, Cell> cells; // keyed by (day number, maturity, country)
    std::set<int> day_set;
    std::set<double> maturity_set;
    std::vector<std::string> country_order; // first-seen order
    std::set<std::string> country_set;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv(line);
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (f.size() != 4)
            fail(ErrorKind::validation, where + "expected 4 fields, got " + std::to_string(f.size()));
        Date date;
        try {
            date = parse_date(f[0]);
        } catch (const Error& e) {
            fail(ErrorKind::validation, where + e.what());
        }
        const int day = std::chrono::sys_days{date}.time_since_epoch().count();
        const std::string country(f[1]);
        if (country.empty()) fail(ErrorKind::validation, where + "empty country code");
        double maturity = 0.0;
        if (!detail::parse_double(f[2], maturity) || maturity <= 0.0)
            fail(ErrorKind::validation, where + "invalid maturity_years '" + std::string(f[2]) + "'");
        Cell cell{std::numeric_limits<double>::quiet_NaN(), true};
        if (!f[3].empty()) {
            if (!detail::parse_double(f[3], cell.rate))
                fail(ErrorKind::validation, where + "non-numeric rate '" + std::string(f[3]) + "'");
            cell.missing = false;
        }
        const auto [it, inserted] = cells.emplace(std::make_tuple(day, maturity, country), cell);
        if (!inserted) {
            fail(ErrorKind::validation, where + "duplicate cell (" + std::string(f[0]) + ", " + format_maturity(maturity) +
                                            ", " + country + ")");
        }
        day_set.insert(day);
        maturity_set.insert(maturity);
        if (country_set.insert(country).second) country_order.push_back(country);
    }
    if (cells.empty()) fail(ErrorKind::validation, "panel file has no data rows");

    std::vector<Date> dates;
    for (int day : day_set) dates.emplace_back(std::chrono::sys_days{std::chrono::days{day}});
    const std::vector<double> maturities(maturity_set.begin(), maturity_set.end());
    const std::size_t im = maturities.size();
    const std::size_t ic = country_order.size();
    std::vector<double> rates(dates.size() * im * ic, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> missing(rates.size(), 1);

    std::map<std::string, std::size_t> country_index;
    for (std::size_t j = 0; j < ic; ++j) country_index[country_order[j]] = j;
    std::map<int, std::size_t> day_index;
    for (std::size_t t = 0; const int day : day_set) day_index[day] = t++;
    std::map<double, std::size_t> maturity_index;
    for (std::size_t i = 0; i < im; ++i) maturity_index[maturities[i]] = i;

    for (const auto& [key, cell] : cells) {
        const auto& [day, maturity, country] = key;
        const std::size_t off = maturity_index[maturity] + im * (country_index[country] + ic * day_index[day]);
        rates[off] = cell.rate;
        missing[off] = cell.missing ? 1 : 0;
    }
    return {std::move(dates), maturities, std::move(country_order), std::move(rates), std::move(missing)};
}

/// Writes a panel in the long CSV format, rows ordered by date, country, maturity.
inline void write_curve_panel(std::ostream& out, const CurvePanel& panel) {
    out << "date,country,maturity_years,rate\n";
    char buf[64];
    for (std::size_t t = 0; t < panel.date_count(); ++t) {
        const std::string date = format_date(panel.dates()[t]);
        for (std::size_t j = 0; j < panel.country_count(); ++j)
            for (std::size_t i = 0; i < panel.maturity_count(); ++i) {
                out << date << ',' << panel.countries()[j] << ',' << format_maturity(panel.maturities()[i]) << ',';
                if (!panel.missing(t, i, j)) {
                    std::snprintf(buf, sizeof buf, "%.12g", panel.rate(t, i, j));
                    out << buf;
                }
                out << '\n';
            }
    }
}

enum class ReturnMethod { first_difference, log_ratio };
enum class MissingPolicy { strict, forward_fill };

inline const char* to_string(ReturnMethod m) { return m == ReturnMethod::first_difference ? "diff" : "log"; }

struct ReturnSet {
    std::vector<DenseTensor> samples; // T tensors of dims (I_m, I_c)
    ReturnMethod method = ReturnMethod::first_difference;
    std::vector<Date> dates;          // end date of each return period
    std::vector<double> maturities;
    std::vector<std::string> countries;
    std::size_t filled_cells = 0;     // cells forward-filled before differencing
};

inline std::string cell_name(const CurvePanel& p, std::size_t t, std::size_t i, std::size_t j) {
    return "(" + format_date(p.dates()[t]) + ", " + format_maturity(p.maturities()[i]) + ", " + p.countries()[j] + ")";
}

/// Rate changes (percentage points) or log rate ratios between consecutive dates.
inline ReturnSet compute_returns(const CurvePanel& panel, ReturnMethod method = ReturnMethod::first_difference,
                                 MissingPolicy policy = MissingPolicy::strict) {
    const std::size_t nt = panel.date_count();
    const std::size_t im = panel.maturity_count();
    const std::size_t ic = panel.country_count();
    detail::require(nt >= 2, ErrorKind::validation, "need at least 2 dates to compute returns");
    for (std::size_t t = 1; t < nt; ++t)
        detail::require(std::chrono::sys_days{panel.dates()[t]} > std::chrono::sys_days{panel.dates()[t - 1]},
                        ErrorKind::validation, "timestamps are not strictly increasing at " + format_date(panel.dates()[t]));

    ReturnSet out;
    out.method = method;
    out.maturities = panel.maturities();
    out.countries = panel.countries();

    // Effective rate grid after the missing-data policy.
    std::vector<double> grid(nt * im * ic);
    for (std::size_t j = 0; j < ic; ++j)
        for (std::size_t i = 0; i < im; ++i)
            for (std::size_t t = 0; t < nt; ++t) {
                const std::size_t off = panel.offset(t, i, j);
                if (!panel.missing(t, i, j)) {
                    grid[off] = panel.rate(t, i, j);
                    continue;
                }
                if (policy == MissingPolicy::strict || t == 0) {
                    detail::fail(ErrorKind::validation,
                                 "missing cell " + cell_name(panel, t, i, j) +
                                     (policy == MissingPolicy::strict ? "" : " cannot be forward-filled"));
                }
                grid[off] = grid[panel.offset(t - 1, i, j)];
                ++out.filled_cells;
            }

    for (std::size_t t = 0; t + 1 < nt; ++t) {
        std::vector<double> x(im * ic);
        for (std::size_t j = 0; j < ic; ++j)
            for (std::size_t i = 0; i < im; ++i) {
                const double a = grid[panel.offset(t, i, j)];
                const double b = grid[panel.offset(t + 1, i, j)];
                if (method == ReturnMethod::first_difference) {
                    x[i + im * j] = b - a;
                } else {
                    if (!(a > 0.0 && b > 0.0))
                        detail::fail(ErrorKind::validation, "log returns need positive rates; nonpositive rate near " +
                                                                cell_name(panel, a > 0.0 ? t + 1 : t, i, j));
                    x[i + im * j] = std::log(b / a);
                }
            }
        out.samples.emplace_back(Dims{im, ic}, std::move(x));
        out.dates.push_back(panel.dates()[t + 1]);
    }
    return out;
}

struct PanelIssue {
    enum class Kind { missing_cell, non_monotone_timestamp, constant_series };
    Kind kind;
    std::string message;
};

inline const char* to_string(PanelIssue::Kind k) {
    switch (k) {
    case PanelIssue::Kind::missing_cell: return "missing_cell";
    case PanelIssue::Kind::non_monotone_timestamp: return "non_monotone_timestamp";
    case PanelIssue::Kind::constant_series: return "constant_series";
    }
    return "unknown";
}

struct ValidationReport {
    std::vector<PanelIssue> issues;
    std::size_t date_count = 0;
    std::vector<double> maturities;
    std::vector<std::string> countries;
    double median_spacing_days = 0.0;
    std::size_t fillable_cells = 0;   // missing cells forward-fill would repair
    std::size_t unfillable_cells = 0; // missing cells with no earlier observation

    [[nodiscard]] std::size_t count(PanelIssue::Kind k) const {
        return static_cast<std::size_t>(
            std::count_if(issues.begin(), issues.end(), [k](const PanelIssue& i) { return i.kind == k; }));
    }
};

inline ValidationReport validate_panel(const CurvePanel& panel) {
    ValidationReport r;
    r.date_count = panel.date_count();
    r.maturities = panel.maturities();
    r.countries = panel.countries();
    const auto& dates = panel.dates();

    std::vector<double> gaps;
    for (std::size_t t = 1; t < dates.size(); ++t) {
        const auto gap = (std::chrono::sys_days{dates[t]} - std::chrono::sys_days{dates[t - 1]}).count();
        gaps.push_back(static_cast<double>(gap));
        if (gap <= 0) {
            r.issues.push_back({PanelIssue::Kind::non_monotone_timestamp,
                                "timestamps not increasing: " + format_date(dates[t - 1]) + " then " + format_date(dates[t])});
        }
    }
    if (!gaps.empty()) {
        std::sort(gaps.begin(), gaps.end());
        const std::size_t mid = gaps.size() / 2;
        r.median_spacing_days = gaps.size() % 2 ? gaps[mid] : 0.5 * (gaps[mid - 1] + gaps[mid]);
    }

    for (std::size_t t = 0; t < panel.date_count(); ++t)
        for (std::size_t j = 0; j < panel.country_count(); ++j)
            for (std::size_t i = 0; i < panel.maturity_count(); ++i)
                if (panel.missing(t, i, j))
                    r.issues.push_back({PanelIssue::Kind::missing_cell, "missing cell " + cell_name(panel, t, i, j)});

    for (std::size_t j = 0; j < panel.country_count(); ++j)
        for (std::size_t i = 0; i < panel.maturity_count(); ++i) {
            bool seen = false;
            bool constant = true;
            double first = 0.0;
            for (std::size_t t = 0; t < panel.date_count(); ++t) {
                if (panel.missing(t, i, j)) {
                    ++(seen ? r.fillable_cells : r.unfillable_cells);
                    continue;
                }
                if (!seen) {
                    first = panel.rate(t, i, j);
                    seen = true;
                } else if (panel.rate(t, i, j) != first) {
                    constant = false;
                }
            }
            if (seen && constant && panel.date_count() >= 2) {
                r.issues.push_back({PanelIssue::Kind::constant_series,
                                    "constant series (" + format_maturity(panel.maturities()[i]) + ", " +
                                        panel.countries()[j] + ")"});
            }
        }
    return r;
}

} // namespace kronrisk
