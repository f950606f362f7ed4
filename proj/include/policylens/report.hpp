#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "policylens/ca.hpp"
#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/indicators.hpp"
#include "policylens/metrics.hpp"
#include "policylens/numfmt.hpp"
#include "policylens/panel.hpp"
#include "policylens/themes.hpp"

namespace policylens::report {

struct FigureSpec {
    enum class Kind { PrCurve, Boxplots, Biplot, CoefPlot };
    Kind kind = Kind::PrCurve;
    int width = 800;
    int height = 600;
    int margin_left = 60;
    int margin_right = 170;
    int margin_top = 40;
    int margin_bottom = 50;
    std::optional<std::pair<double, double>> x_range;  // fixed when set, else auto
    std::optional<std::pair<double, double>> y_range;

    void validate() const {
        if (width <= 0 || height <= 0) throw Error("figure spec: dimensions must be positive");
        if (margin_left < 0 || margin_right < 0 || margin_top < 0 || margin_bottom < 0)
            throw Error("figure spec: negative margin");
        if (margin_left + margin_right >= width || margin_top + margin_bottom >= height)
            throw Error("figure spec: margins exceed figure size");
        if (x_range && !(x_range->first < x_range->second))
            throw Error("figure spec: x range low must be below high");
        if (y_range && !(y_range->first < y_range->second))
            throw Error("figure spec: y range low must be below high");
    }
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Affine data-to-pixel map; the calibration attributes emitted with each
/// plot area let a reader invert it without knowing the layout.
struct LinearMap {
    double v0 = 0.0, v1 = 1.0;
    double p0 = 0.0, p1 = 1.0;
    double at(double v) const { return p0 + (v - v0) / (v1 - v0) * (p1 - p0); }
};

struct PlotArea {
    double x = 0, y = 0, w = 0, h = 0;
    LinearMap xmap, ymap;  // ymap runs top-down: v0 at the bottom edge
};

inline PlotArea make_area(const FigureSpec& spec, double xv0, double xv1, double yv0, double yv1) {
    PlotArea a;
    a.x = spec.margin_left;
    a.y = spec.margin_top;
    a.w = spec.width - spec.margin_left - spec.margin_right;
    a.h = spec.height - spec.margin_top - spec.margin_bottom;
    a.xmap = {xv0, xv1, a.x, a.x + a.w};
    a.ymap = {yv0, yv1, a.y + a.h, a.y};
    return a;
}

inline std::string px(double v) { return fmt_fixed(v, 2); }

inline std::string area_rect(const PlotArea& a, const std::string& extra_attrs = "") {
    std::string out = "<rect class=\"plot\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\" x=\"" +
                      px(a.x) + "\" y=\"" + px(a.y) + "\" width=\"" + px(a.w) + "\" height=\"" +
                      px(a.h) + "\" data-xv0=\"" + fmt_double(a.xmap.v0) + "\" data-xv1=\"" +
                      fmt_double(a.xmap.v1) + "\" data-px0=\"" + fmt_double(a.xmap.p0) +
                      "\" data-px1=\"" + fmt_double(a.xmap.p1) + "\" data-yv0=\"" +
                      fmt_double(a.ymap.v0) + "\" data-yv1=\"" + fmt_double(a.ymap.v1) +
                      "\" data-py0=\"" + fmt_double(a.ymap.p0) + "\" data-py1=\"" +
                      fmt_double(a.ymap.p1) + "\"";
    if (!extra_attrs.empty()) out += " " + extra_attrs;
    out += "/>\n";
    return out;
}

inline std::string text(double x, double y, const std::string& s, const std::string& attrs = "") {
    std::string out = "<text x=\"" + px(x) + "\" y=\"" + px(y) +
                      "\" font-family=\"sans-serif\" font-size=\"12\"";
    if (!attrs.empty()) out += " " + attrs;
    out += ">" + xml_escape(s) + "</text>\n";
    return out;
}

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke,
                        const std::string& attrs = "") {
    std::string out = "<line x1=\"" + px(x1) + "\" y1=\"" + px(y1) + "\" x2=\"" + px(x2) +
                      "\" y2=\"" + px(y2) + "\" stroke=\"" + stroke + "\"";
    if (!attrs.empty()) out += " " + attrs;
    out += "/>\n";
    return out;
}

inline std::string circle(double cx, double cy, double r, const std::string& fill,
                          const std::string& attrs = "") {
    std::string out = "<circle cx=\"" + px(cx) + "\" cy=\"" + px(cy) + "\" r=\"" + px(r) +
                      "\" fill=\"" + fill + "\"";
    if (!attrs.empty()) out += " " + attrs;
    out += "/>\n";
    return out;
}

inline std::string svg_open(const FigureSpec& spec) {
    std::string w = std::to_string(spec.width), h = std::to_string(spec.height);
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h +
           "\" viewBox=\"0 0 " + w + " " + h + "\">\n<rect width=\"" + w + "\" height=\"" + h +
           "\" fill=\"white\"/>\n";
}

/// 1-2-5 tick steps so axis labels stay deterministic and tidy.
inline std::vector<double> ticks(double lo, double hi, int target = 5) {
    std::vector<double> out;
    const double range = hi - lo;
    if (!(range > 0.0)) return out;
    const double raw = range / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    }
    double t = std::ceil(lo / step) * step;
    while (t <= hi + step * 1e-9) {
        out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
        t += step;
    }
    return out;
}

inline std::string tick_label(double v) {
    std::string s = fmt_sig(v, 3);
    return s == "-0" ? "0" : s;
}

inline void pad_range(double& lo, double& hi) {
    if (lo == hi) {
        lo -= 1.0;
        hi += 1.0;
        return;
    }
    const double pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
}

inline const std::array<std::string, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

inline std::string x_axis(const PlotArea& a, const std::string& label) {
    std::string out;
    for (double t : ticks(a.xmap.v0, a.xmap.v1)) {
        const double x = a.xmap.at(t);
        out += line(x, a.y + a.h, x, a.y + a.h + 4, "#444");
        out += text(x, a.y + a.h + 18, tick_label(t), "text-anchor=\"middle\"");
    }
    out += text(a.x + a.w / 2, a.y + a.h + 36, label, "text-anchor=\"middle\"");
    return out;
}

inline std::string y_axis(const PlotArea& a, const std::string& label) {
    std::string out;
    for (double t : ticks(a.ymap.v0, a.ymap.v1)) {
        const double y = a.ymap.at(t);
        out += line(a.x - 4, y, a.x, y, "#444");
        out += text(a.x - 8, y + 4, tick_label(t), "text-anchor=\"end\"");
    }
    if (!label.empty())
        out += "<text x=\"" + px(a.x - 42) + "\" y=\"" + px(a.y + a.h / 2) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" " +
               "transform=\"rotate(-90 " + px(a.x - 42) + " " + px(a.y + a.h / 2) + ")\">" +
               xml_escape(label) + "</text>\n";
    return out;
}

}  // namespace detail

struct NamedCurve {
    std::string name;
    metrics::PRCurve curve;
};

/// One polyline per theme on the [0,1]x[0,1] square, legend with 2dp AP.
inline std::string render_pr_curves(std::span<const NamedCurve> curves, FigureSpec spec = {}) {
    spec.kind = FigureSpec::Kind::PrCurve;
    spec.validate();
    if (curves.empty()) throw Error("render_pr_curves: no curves");

    auto a = detail::make_area(spec, spec.x_range ? spec.x_range->first : 0.0,
                               spec.x_range ? spec.x_range->second : 1.0,
                               spec.y_range ? spec.y_range->first : 0.0,
                               spec.y_range ? spec.y_range->second : 1.0);
    std::string svg = detail::svg_open(spec);
    svg += detail::area_rect(a);
    svg += detail::x_axis(a, "Recall");
    svg += detail::y_axis(a, "Precision");

    for (size_t c = 0; c < curves.size(); ++c) {
        const auto& pr = curves[c].curve;
        const std::string& color = detail::kPalette[c % detail::kPalette.size()];
        std::string points;
        if (!pr.recall.empty())  // anchor the sweep at recall 0 with its opening precision
            points += detail::px(a.xmap.at(0.0)) + "," + detail::px(a.ymap.at(pr.precision[0])) +
                      " ";
        for (size_t i = 0; i < pr.recall.size(); ++i)
            points += detail::px(a.xmap.at(pr.recall[i])) + "," +
                      detail::px(a.ymap.at(pr.precision[i])) + " ";
        if (!points.empty()) points.pop_back();
        svg += "<polyline class=\"pr-curve\" data-theme=\"" + detail::xml_escape(curves[c].name) +
               "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + points +
               "\"/>\n";

        const double ly = a.y + 14 + 18 * static_cast<double>(c);
        const double lx = a.x + a.w + 12;
        svg += detail::line(lx, ly - 4, lx + 18, ly - 4, color, "stroke-width=\"2\"");
        svg += detail::text(lx + 24, ly,
                            curves[c].name + " (AP=" + fmt_fixed(pr.average_precision, 2) + ")");
    }
    svg += "</svg>\n";
    return svg;
}

inline std::string pr_points_to_csv(std::span<const NamedCurve> curves) {
    std::string out = csv_row({"theme", "recall", "precision", "ap"});
    for (const auto& nc : curves)
        for (size_t i = 0; i < nc.curve.recall.size(); ++i)
            out += csv_row({nc.name, fmt_double(nc.curve.recall[i]),
                            fmt_double(nc.curve.precision[i]),
                            fmt_double(nc.curve.average_precision)});
    return out;
}

struct BoxFacet {
    std::string theme;
    struct Row {
        std::string country_iso3;
        indicators::BoxStats stats;
    };
    std::vector<Row> rows;  // rank order, best first
};

/// Faceted boxplots, one facet per theme, countries top-down in rank order,
/// a shared z-score x-axis across facets.
inline std::string render_boxplots(std::span<const BoxFacet> facets, FigureSpec spec = {}) {
    spec.kind = FigureSpec::Kind::Boxplots;
    spec.validate();
    if (facets.empty()) throw Error("render_boxplots: no facets");

    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& f : facets)
        for (const auto& r : f.rows) {
            const double rlo = r.stats.outliers.empty()
                                   ? r.stats.whisker_low
                                   : std::min(r.stats.whisker_low, r.stats.outliers.front());
            const double rhi = r.stats.outliers.empty()
                                   ? r.stats.whisker_high
                                   : std::max(r.stats.whisker_high, r.stats.outliers.back());
            lo = any ? std::min(lo, rlo) : rlo;
            hi = any ? std::max(hi, rhi) : rhi;
            any = true;
        }
    if (!any) {
        lo = -1.0;
        hi = 1.0;
    }
    detail::pad_range(lo, hi);
    if (spec.x_range) {
        lo = spec.x_range->first;
        hi = spec.x_range->second;
    }

    const int ncols = facets.size() > 1 ? 2 : 1;
    const int nrows = (static_cast<int>(facets.size()) + ncols - 1) / ncols;
    const double cell_w =
        (spec.width - spec.margin_left - spec.margin_right) / static_cast<double>(ncols);
    const double cell_h =
        (spec.height - spec.margin_top - spec.margin_bottom) / static_cast<double>(nrows);
    const double inner_pad_x = 34.0, inner_pad_y = 26.0;

    std::string svg = detail::svg_open(spec);
    for (size_t f = 0; f < facets.size(); ++f) {
        const int col = static_cast<int>(f) % ncols;
        const int row = static_cast<int>(f) / ncols;
        detail::PlotArea a;
        a.x = spec.margin_left + col * cell_w + inner_pad_x;
        a.y = spec.margin_top + row * cell_h + inner_pad_y;
        a.w = cell_w - inner_pad_x - 12.0;
        a.h = cell_h - inner_pad_y - 26.0;
        const double n = static_cast<double>(std::max<size_t>(facets[f].rows.size(), 1));
        a.xmap = {lo, hi, a.x, a.x + a.w};
        a.ymap = {0.0, n, a.y, a.y + a.h};  // rank 0 row centered at 0.5 from the top

        svg += detail::text(a.x, a.y - 8, facets[f].theme, "font-weight=\"bold\"");
        svg += detail::area_rect(a, "data-facet=\"" + detail::xml_escape(facets[f].theme) + "\"");
        for (double t : detail::ticks(lo, hi, 4)) {
            const double x = a.xmap.at(t);
            svg += detail::line(x, a.y + a.h, x, a.y + a.h + 3, "#444");
            svg += detail::text(x, a.y + a.h + 14, detail::tick_label(t), "text-anchor=\"middle\"");
        }

        if (facets[f].rows.empty()) {
            svg += detail::text(a.x + a.w / 2, a.y + a.h / 2, "no data",
                                "text-anchor=\"middle\" fill=\"#888\"");
            continue;
        }
        for (size_t i = 0; i < facets[f].rows.size(); ++i) {
            const auto& r = facets[f].rows[i];
            const double yc = a.ymap.at(static_cast<double>(i) + 0.5);
            const double half = std::min(9.0, a.h / n * 0.3);
            const std::string label_attr = "data-country=\"" + detail::xml_escape(r.country_iso3) +
                                           "\" data-theme=\"" +
                                           detail::xml_escape(facets[f].theme) + "\"";
            svg += detail::text(a.x - 6, yc + 4, r.country_iso3, "text-anchor=\"end\"");
            svg += detail::line(a.xmap.at(r.stats.whisker_low), yc, a.xmap.at(r.stats.q1), yc,
                                "#1f77b4");
            svg += detail::line(a.xmap.at(r.stats.q3), yc, a.xmap.at(r.stats.whisker_high), yc,
                                "#1f77b4");
            svg += detail::line(a.xmap.at(r.stats.whisker_low), yc - half / 2,
                                a.xmap.at(r.stats.whisker_low), yc + half / 2, "#1f77b4");
            svg += detail::line(a.xmap.at(r.stats.whisker_high), yc - half / 2,
                                a.xmap.at(r.stats.whisker_high), yc + half / 2, "#1f77b4");
            svg += "<rect class=\"box\" " + label_attr + " x=\"" + detail::px(a.xmap.at(r.stats.q1)) +
                   "\" y=\"" + detail::px(yc - half) + "\" width=\"" +
                   detail::px(a.xmap.at(r.stats.q3) - a.xmap.at(r.stats.q1)) + "\" height=\"" +
                   detail::px(2 * half) +
                   "\" fill=\"#aec7e8\" stroke=\"#1f77b4\" stroke-width=\"1\"/>\n";
            svg += detail::line(a.xmap.at(r.stats.median), yc - half, a.xmap.at(r.stats.median),
                                yc + half, "#1f3f5f", "stroke-width=\"2\" class=\"median\"");
            for (double o : r.stats.outliers)
                svg += detail::circle(a.xmap.at(o), yc, 2.5, "none",
                                      "stroke=\"#d62728\" class=\"outlier\"");
        }
    }
    svg += detail::text(spec.width / 2.0, spec.height - 12.0, "z-score", "text-anchor=\"middle\"");
    svg += "</svg>\n";
    return svg;
}

/// Symmetric CA map: countries and themes on dimensions 1-2, axis labels
/// carrying the inertia shares at 1dp.
inline std::string render_biplot(const ca::CAResult& res, FigureSpec spec = {}) {
    spec.kind = FigureSpec::Kind::Biplot;
    spec.validate();
    if (res.singular_values.size() < 2)
        throw Error("render_biplot: needs at least 2 dimensions (1-D result; biplot out of scope)");

    double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
    auto grow = [&](const Matrix& m, size_t i) {
        xlo = std::min(xlo, m(i, 0));
        xhi = std::max(xhi, m(i, 0));
        ylo = std::min(ylo, m(i, 1));
        yhi = std::max(yhi, m(i, 1));
    };
    for (size_t i = 0; i < res.row_labels.size(); ++i) grow(res.row_coords, i);
    for (size_t j = 0; j < res.col_labels.size(); ++j) grow(res.col_coords, j);
    detail::pad_range(xlo, xhi);
    detail::pad_range(ylo, yhi);
    if (spec.x_range) {
        xlo = spec.x_range->first;
        xhi = spec.x_range->second;
    }
    if (spec.y_range) {
        ylo = spec.y_range->first;
        yhi = spec.y_range->second;
    }

    auto a = detail::make_area(spec, xlo, xhi, ylo, yhi);
    std::string svg = detail::svg_open(spec);
    svg += detail::area_rect(a);
    if (xlo < 0.0 && xhi > 0.0)
        svg += detail::line(a.xmap.at(0.0), a.y, a.xmap.at(0.0), a.y + a.h, "#bbb",
                            "stroke-dasharray=\"4 3\"");
    if (ylo < 0.0 && yhi > 0.0)
        svg += detail::line(a.x, a.ymap.at(0.0), a.x + a.w, a.ymap.at(0.0), "#bbb",
                            "stroke-dasharray=\"4 3\"");
    svg += detail::x_axis(a, "Dim 1 (" + fmt_fixed(res.share[0] * 100.0, 1) + "%)");
    svg += detail::y_axis(a, "Dim 2 (" + fmt_fixed(res.share[1] * 100.0, 1) + "%)");

    for (size_t i = 0; i < res.row_labels.size(); ++i) {
        const double x = a.xmap.at(res.row_coords(i, 0));
        const double y = a.ymap.at(res.row_coords(i, 1));
        svg += detail::circle(x, y, 3, "#1f77b4",
                              "class=\"country\" data-label=\"" +
                                  detail::xml_escape(res.row_labels[i]) + "\"");
        svg += detail::text(x + 5, y - 4, res.row_labels[i], "fill=\"#1f77b4\" font-size=\"10\"");
    }
    for (size_t j = 0; j < res.col_labels.size(); ++j) {
        const double x = a.xmap.at(res.col_coords(j, 0));
        const double y = a.ymap.at(res.col_coords(j, 1));
        svg += "<rect class=\"theme\" data-label=\"" + detail::xml_escape(res.col_labels[j]) +
               "\" x=\"" + detail::px(x - 4) + "\" y=\"" + detail::px(y - 4) +
               "\" width=\"8\" height=\"8\" fill=\"#d62728\"/>\n";
        svg += detail::text(x + 7, y + 4, res.col_labels[j],
                            "fill=\"#d62728\" font-weight=\"bold\"");
    }
    svg += "</svg>\n";
    return svg;
}

/// Dot-and-whisker plot: one row per (outcome, regressor), dot at the
/// estimate, segment spanning the confidence interval, zero reference line.
inline std::string render_coef_plot(const panel::BatteryResult& battery, FigureSpec spec = {}) {
    spec.kind = FigureSpec::Kind::CoefPlot;
    spec.validate();
    if (battery.results.empty()) throw Error("render_coef_plot: empty battery");

    double lo = 0.0, hi = 0.0;
    size_t nrows = 0;
    for (const auto& res : battery.results)
        for (const auto& c : res.coefficients) {
            lo = std::min(lo, c.ci_low);
            hi = std::max(hi, c.ci_high);
            ++nrows;
        }
    detail::pad_range(lo, hi);
    if (spec.x_range) {
        lo = spec.x_range->first;
        hi = spec.x_range->second;
    }

    const double group_gap = 10.0;
    auto a = detail::make_area(spec, lo, hi, 0.0, 1.0);
    const double row_h = (a.h - group_gap * static_cast<double>(battery.results.size() - 1)) /
                         static_cast<double>(nrows);

    std::string svg = detail::svg_open(spec);
    svg += detail::area_rect(a);
    svg += detail::x_axis(a, "Coefficient");
    if (lo < 0.0 && hi > 0.0)
        svg += detail::line(a.xmap.at(0.0), a.y, a.xmap.at(0.0), a.y + a.h, "#999",
                            "stroke-dasharray=\"4 3\" class=\"zero-line\"");

    double y = a.y;
    for (const auto& res : battery.results) {
        svg += detail::text(a.x + 4, y + 12, res.outcome, "font-weight=\"bold\" fill=\"#333\"");
        for (const auto& c : res.coefficients) {
            const double yc = y + row_h / 2;
            const std::string tag = "data-outcome=\"" + detail::xml_escape(res.outcome) +
                                    "\" data-regressor=\"" + detail::xml_escape(c.name) + "\"";
            svg += detail::line(a.xmap.at(c.ci_low), yc, a.xmap.at(c.ci_high), yc, "#555",
                                "stroke-width=\"2\" class=\"ci\" " + tag);
            svg += detail::circle(a.xmap.at(c.beta), yc, 4, "#1f77b4", "class=\"beta-dot\" " + tag);
            svg += detail::text(a.x - 6, yc + 4, c.name, "text-anchor=\"end\"");
            svg += detail::text(a.xmap.at(c.beta) + 7, yc - 6, fmt_sig(c.beta, 3),
                                "font-size=\"10\" fill=\"#555\"");
            y += row_h;
        }
        y += group_gap;
    }
    svg += "</svg>\n";
    return svg;
}

}
