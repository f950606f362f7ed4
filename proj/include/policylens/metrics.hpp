#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/numfmt.hpp"
#include "policylens/themes.hpp"

namespace policylens::metrics {

struct PerThemeCounts {
    struct Entry {
        long tp = 0;
        long fp = 0;
        long fn = 0;
        long support() const { return tp + fn; }
    };
    std::array<Entry, kThemeCount> themes{};
};

inline PerThemeCounts confusion_counts(std::span<const ThemeSet> predictions,
                                       std::span<const ThemeSet> golds) {
    if (predictions.size() != golds.size())
        throw Error("confusion_counts: predictions/golds length mismatch");
    PerThemeCounts counts;
    for (size_t i = 0; i < golds.size(); ++i) {
        for (int k = 0; k < kThemeCount; ++k) {
            const Theme t = static_cast<Theme>(k);
            const bool p = predictions[i].contains(t);
            const bool g = golds[i].contains(t);
            if (p && g)
                counts.themes[k].tp += 1;
            else if (p)
                counts.themes[k].fp += 1;
            else if (g)
                counts.themes[k].fn += 1;
        }
    }
    return counts;
}

struct MetricRow {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ReportTable {
    std::array<MetricRow, kThemeCount> per_theme{};
    std::array<long, kThemeCount> support{};
    MetricRow micro, macro, weighted;
    std::optional<MetricRow> samples;  // needs document-level label sets
    long total_support = 0;
};

namespace detail {

inline double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline MetricRow prf(long tp, long fp, long fn) {
    MetricRow m;
    m.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
    m.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
    m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
    return m;
}

}  // namespace detail

/// The full classification-report table. Micro metrics come from summed
/// counts, macro is the unweighted theme mean (zero-count themes included at
/// 0), weighted is the support-weighted mean. The samples average needs the
/// per-document label sets and is attached only when they are supplied; a
/// document where prediction and gold are both empty scores 1.0, and an
/// empty set against a non-empty one scores 0.0.
inline ReportTable classification_report(const PerThemeCounts& counts,
                                         std::span<const ThemeSet> predictions = {},
                                         std::span<const ThemeSet> golds = {}) {
    ReportTable table;
    long sum_tp = 0, sum_fp = 0, sum_fn = 0;
    for (int k = 0; k < kThemeCount; ++k) {
        const auto& e = counts.themes[k];
        if (e.tp < 0 || e.fp < 0 || e.fn < 0)
            throw Error("classification_report: negative confusion count");
        table.per_theme[k] = detail::prf(e.tp, e.fp, e.fn);
        table.support[k] = e.support();
        table.total_support += e.support();
        sum_tp += e.tp;
        sum_fp += e.fp;
        sum_fn += e.fn;
    }
    table.micro = detail::prf(sum_tp, sum_fp, sum_fn);
    for (int k = 0; k < kThemeCount; ++k) {
        table.macro.precision += table.per_theme[k].precision / kThemeCount;
        table.macro.recall += table.per_theme[k].recall / kThemeCount;
        table.macro.f1 += table.per_theme[k].f1 / kThemeCount;
        const double w =
            detail::safe_div(static_cast<double>(table.support[k]),
                             static_cast<double>(table.total_support));
        table.weighted.precision += w * table.per_theme[k].precision;
        table.weighted.recall += w * table.per_theme[k].recall;
        table.weighted.f1 += w * table.per_theme[k].f1;
    }

    if (!predictions.empty() || !golds.empty()) {
        if (predictions.size() != golds.size())
            throw Error("classification_report: predictions/golds length mismatch");
        MetricRow s;
        for (size_t i = 0; i < golds.size(); ++i) {
            const auto& p = predictions[i];
            const auto& g = golds[i];
            double dp, dr, df;
            if (p.empty() && g.empty()) {
                dp = dr = df = 1.0;
            } else if (p.empty() || g.empty()) {
                dp = dr = df = 0.0;
            } else {
                int inter = 0;
                for (int k = 0; k < kThemeCount; ++k)
                    if (p.contains(static_cast<Theme>(k)) && g.contains(static_cast<Theme>(k)))
                        ++inter;
                dp = static_cast<double>(inter) / p.size();
                dr = static_cast<double>(inter) / g.size();
                df = detail::safe_div(2.0 * dp * dr, dp + dr);
            }
            s.precision += dp;
            s.recall += dr;
            s.f1 += df;
        }
        const double n = static_cast<double>(golds.size());
        s.precision /= n;
        s.recall /= n;
        s.f1 /= n;
        table.samples = s;
    }
    return table;
}

struct PRCurve {
    std::vector<double> precision;  // aligned operating points, high threshold first
    std::vector<double> recall;
    double average_precision = 0.0;
};

/// Threshold sweep over distinct scores (all ties enter in one step);
/// AP is the step-wise sum of precision gains in recall.
inline PRCurve pr_curve(std::span<const double> scores, std::span<const uint8_t> golds) {
    if (scores.size() != golds.size()) throw Error("pr_curve: scores/golds length mismatch");
    long total_pos = 0;
    for (uint8_t g : golds) total_pos += g ? 1 : 0;
    if (total_pos == 0) throw Error("pr_curve: no gold positives (average precision undefined)");

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    PRCurve curve;
    long tp = 0, predicted = 0;
    double prev_recall = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += golds[order[j]] ? 1 : 0;
            ++predicted;
            ++j;
        }
        const double p = static_cast<double>(tp) / static_cast<double>(predicted);
        const double r = static_cast<double>(tp) / static_cast<double>(total_pos);
        curve.precision.push_back(p);
        curve.recall.push_back(r);
        curve.average_precision += (r - prev_recall) * p;
        prev_recall = r;
        i = j;
    }
    return curve;
}

inline const std::array<std::string, 4> kAverageNames = {"Micro Avg", "Macro Avg", "Weighted Avg",
                                                         "Samples Avg"};

/// CSV: one row per theme then the average rows, full-precision values.
inline std::string report_to_csv(const ReportTable& table) {
    std::string out = csv_row({"label", "precision", "recall", "f1", "support"});
    auto row = [&](const std::string& label, const MetricRow& m, long support) {
        out += csv_row({label, fmt_double(m.precision), fmt_double(m.recall), fmt_double(m.f1),
                        std::to_string(support)});
    };
    for (Theme t : kReportThemeOrder) {
        const int k = static_cast<int>(t);
        row(kThemeNames[k], table.per_theme[k], table.support[k]);
    }
    row(kAverageNames[0], table.micro, table.total_support);
    row(kAverageNames[1], table.macro, table.total_support);
    row(kAverageNames[2], table.weighted, table.total_support);
    if (table.samples) row(kAverageNames[3], *table.samples, table.total_support);
    return out;
}

/// Aligned fixed-width table, metrics at 2 decimals.
inline std::string report_to_text(const ReportTable& table) {
    std::vector<std::array<std::string, 5>> rows;
    rows.push_back({"", "Precision", "Recall", "F1-Score", "Support"});
    auto add = [&](const std::string& label, const MetricRow& m, long support) {
        rows.push_back({label, fmt_fixed(m.precision, 2), fmt_fixed(m.recall, 2),
                        fmt_fixed(m.f1, 2), std::to_string(support)});
    };
    for (Theme t : kReportThemeOrder) {
        const int k = static_cast<int>(t);
        add(kThemeNames[k], table.per_theme[k], table.support[k]);
    }
    add(kAverageNames[0], table.micro, table.total_support);
    add(kAverageNames[1], table.macro, table.total_support);
    add(kAverageNames[2], table.weighted, table.total_support);
    if (table.samples) add(kAverageNames[3], *table.samples, table.total_support);

    std::array<size_t, 5> width{};
    for (const auto& r : rows)
        for (int c = 0; c < 5; ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    for (const auto& r : rows) {
        std::string line = r[0] + std::string(width[0] - r[0].size(), ' ');
        for (int c = 1; c < 5; ++c) {
            line += "  ";
            line += std::string(width[c] - r[c].size(), ' ') + r[c];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line;
        out += '\n';
    }
    return out;
}

}
