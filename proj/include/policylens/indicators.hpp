#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/ingest.hpp"
#include "policylens/numfmt.hpp"
#include "policylens/themes.hpp"

namespace policylens::indicators {

/// Country-year counts per theme. A document with m labels contributes to
/// all m of its themes.
inline ThemePanel theme_counts(std::span<const ingest::PolicyDocument> docs,
                               std::span<const ThemeSet> labels) {
    if (labels.size() != docs.size()) throw Error("theme_counts: docs/labels length mismatch");
    std::map<std::pair<std::string, int>, std::array<int, kThemeCount>> cells;
    for (size_t i = 0; i < docs.size(); ++i) {
        auto& counts = cells[{docs[i].country_iso3, docs[i].year}];
        for (int k = 0; k < kThemeCount; ++k)
            if (labels[i].contains(static_cast<Theme>(k))) counts[k] += 1;
    }
    ThemePanel panel;
    panel.cells.reserve(cells.size());
    for (const auto& [key, counts] : cells)
        panel.cells.push_back({key.first, key.second, counts});
    return panel;
}

inline ThemePanel theme_counts(std::span<const ingest::PolicyDocument> docs) {
    std::vector<ThemeSet> labels;
    labels.reserve(docs.size());
    for (const auto& d : docs) labels.push_back(d.gold_labels);
    return theme_counts(docs, labels);
}

/// z_i = (x_i - mean)/s with the sample standard deviation (divisor n-1).
/// Degenerate series (constant, or a single point) standardize to zeros.
inline std::vector<double> zscore(std::span<const double> series) {
    if (series.empty()) throw Error("zscore: empty series");
    const double n = static_cast<double>(series.size());
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= n;
    if (series.size() == 1) return {0.0};
    double ss = 0.0;
    for (double x : series) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    std::vector<double> z(series.size(), 0.0);
    if (sd == 0.0) return z;
    for (size_t i = 0; i < series.size(); ++i) z[i] = (series[i] - mean) / sd;
    return z;
}

/// Panel cells plus pooled per-theme z-scores (standardized across all
/// country-year observations, not within country).
struct StandardizedPanel {
    std::vector<ThemePanel::Cell> cells;
    std::vector<std::array<double, kThemeCount>> z;  // aligned with cells
};

inline StandardizedPanel standardize(const ThemePanel& panel) {
    StandardizedPanel out;
    out.cells = panel.cells;
    out.z.assign(panel.cells.size(), {});
    if (panel.cells.empty()) return out;
    std::vector<double> series(panel.cells.size());
    for (int k = 0; k < kThemeCount; ++k) {
        for (size_t i = 0; i < panel.cells.size(); ++i)
            series[i] = static_cast<double>(panel.cells[i].counts[k]);
        auto z = zscore(series);
        for (size_t i = 0; i < z.size(); ++i) out.z[i][k] = z[i];
    }
    return out;
}

struct RankedCountry {
    std::string country_iso3;
    double mean_z = 0.0;
    std::vector<std::pair<int, double>> years;  // (year, z), year ascending
};

/// Countries ranked by mean z-score over their observed years, descending;
/// ties broken by ISO3 ascending. Returns at most k entries.
inline std::vector<RankedCountry> top_countries(const StandardizedPanel& panel, Theme theme,
                                                int k = 10) {
    if (k < 1) throw Error("top_countries: k must be positive");
    const int t = static_cast<int>(theme);
    std::map<std::string, RankedCountry> by_country;
    for (size_t i = 0; i < panel.cells.size(); ++i) {
        const auto& cell = panel.cells[i];
        auto& rc = by_country[cell.country_iso3];
        rc.country_iso3 = cell.country_iso3;
        rc.years.emplace_back(cell.year, panel.z[i][t]);
    }
    std::vector<RankedCountry> ranked;
    ranked.reserve(by_country.size());
    for (auto& [iso3, rc] : by_country) {
        double sum = 0.0;
        for (const auto& [year, z] : rc.years) sum += z;
        rc.mean_z = sum / static_cast<double>(rc.years.size());
        ranked.push_back(std::move(rc));
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.mean_z != b.mean_z) return a.mean_z > b.mean_z;
        return a.country_iso3 < b.country_iso3;
    });
    if (static_cast<int>(ranked.size()) > k) ranked.resize(k);
    return ranked;
}

inline std::vector<RankedCountry> top_countries(const ThemePanel& panel, Theme theme, int k = 10) {
    return top_countries(standardize(panel), theme, k);
}

struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;  // sorted ascending
};

namespace detail {

// Type-7 quantile: linear interpolation at position p*(n-1) on sorted data.
inline double quantile7(std::span<const double> sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Quartiles by the type-7 convention; whiskers at the most extreme points
/// within 1.5*IQR of the quartiles; everything beyond is an outlier.
inline BoxStats box_stats(std::span<const double> values) {
    if (values.empty()) throw Error("box_stats: empty series");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    BoxStats b;
    b.q1 = detail::quantile7(sorted, 0.25);
    b.median = detail::quantile7(sorted, 0.5);
    b.q3 = detail::quantile7(sorted, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_low = b.q3;
    b.whisker_high = b.q1;
    bool any_inside = false;
    for (double v : sorted) {
        if (v >= lo_fence && v <= hi_fence) {
            if (!any_inside) {
                b.whisker_low = v;
                any_inside = true;
            }
            b.whisker_high = v;
        } else {
            b.outliers.push_back(v);
        }
    }
    if (!any_inside) {  // quartiles are data points, so this cannot happen; keep the box legal
        b.whisker_low = b.q1;
        b.whisker_high = b.q3;
    }
    return b;
}

inline const std::vector<std::string> kCountsHeader = {"country_iso3", "year", "theme", "count",
                                                       "zscore"};

/// Long format, one row per (country, year, theme).
inline std::string theme_counts_to_csv(const StandardizedPanel& panel) {
    std::string out = csv_row(kCountsHeader);
    for (size_t i = 0; i < panel.cells.size(); ++i) {
        const auto& cell = panel.cells[i];
        for (int k = 0; k < kThemeCount; ++k)
            out += csv_row({cell.country_iso3, std::to_string(cell.year), kThemeNames[k],
                            std::to_string(cell.counts[k]), fmt_double(panel.z[i][k])});
    }
    return out;
}

inline const std::vector<std::string> kRankingHeader = {"theme", "rank", "country_iso3", "mean_z"};

inline std::string rankings_to_csv(
    const std::array<std::vector<RankedCountry>, kThemeCount>& per_theme) {
    std::string out = csv_row(kRankingHeader);
    for (int k = 0; k < kThemeCount; ++k)
        for (size_t r = 0; r < per_theme[k].size(); ++r)
            out += csv_row({kThemeNames[k], std::to_string(r + 1),
                            per_theme[k][r].country_iso3, fmt_double(per_theme[k][r].mean_z)});
    return out;
}

}
