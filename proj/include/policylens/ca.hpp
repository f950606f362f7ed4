#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/linalg.hpp"
#include "policylens/numfmt.hpp"
#include "policylens/themes.hpp"

namespace policylens::ca {

inline const std::vector<std::string> kG7 = {"CAN", "DEU", "FRA", "GBR", "ITA", "JPN", "USA"};

struct ContingencyTable {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    Matrix counts;  // row_labels.size() x col_labels.size(), non-negative
    double n = 0.0;
    std::vector<std::string> warnings;  // dropped all-zero rows/columns
};

/// Aggregates the panel over years, keeps the top_n countries by total count
/// (ties by ISO3) unioned with always_include, and drops all-zero rows and
/// columns with a warning each.
inline ContingencyTable contingency_from_panel(const ThemePanel& panel, int top_n = 50,
                                               std::span<const std::string> always_include = kG7) {
    if (panel.cells.empty()) throw Error("contingency_from_panel: empty panel");

    struct Row {
        std::string iso3;
        std::array<long, kThemeCount> counts{};
        long total = 0;
    };
    std::map<std::string, Row> by_country;
    for (const auto& cell : panel.cells) {
        Row& row = by_country[cell.country_iso3];
        row.iso3 = cell.country_iso3;
        for (int k = 0; k < kThemeCount; ++k) {
            row.counts[k] += cell.counts[k];
            row.total += cell.counts[k];
        }
    }
    std::vector<Row> rows;
    rows.reserve(by_country.size());
    for (auto& [iso3, row] : by_country) rows.push_back(std::move(row));
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.total != b.total) return a.total > b.total;
        return a.iso3 < b.iso3;
    });

    ContingencyTable table;
    std::set<std::string> forced(always_include.begin(), always_include.end());
    std::vector<const Row*> selected;
    for (size_t i = 0; i < rows.size(); ++i) {
        const bool in_top = static_cast<int>(i) < top_n;
        if (!in_top && !forced.count(rows[i].iso3)) continue;
        if (rows[i].total == 0) {
            table.warnings.push_back("dropped all-zero country " + rows[i].iso3);
            continue;
        }
        selected.push_back(&rows[i]);
    }

    std::array<long, kThemeCount> col_totals{};
    for (const Row* r : selected)
        for (int k = 0; k < kThemeCount; ++k) col_totals[k] += r->counts[k];
    std::vector<int> kept_cols;
    for (int k = 0; k < kThemeCount; ++k) {
        if (col_totals[k] == 0)
            table.warnings.push_back(std::string("dropped all-zero theme ") + kThemeNames[k]);
        else
            kept_cols.push_back(k);
    }

    if (selected.size() < 2 || kept_cols.size() < 2)
        throw Error("contingency_from_panel: table is " + std::to_string(selected.size()) + "x" +
                    std::to_string(kept_cols.size()) + " after drops; need at least 2x2");

    table.counts = Matrix(selected.size(), kept_cols.size());
    for (size_t i = 0; i < selected.size(); ++i) {
        table.row_labels.push_back(selected[i]->iso3);
        for (size_t j = 0; j < kept_cols.size(); ++j) {
            table.counts(i, j) = static_cast<double>(selected[i]->counts[kept_cols[j]]);
            table.n += table.counts(i, j);
        }
    }
    for (int k : kept_cols) table.col_labels.push_back(kThemeNames[k]);
    return table;
}

struct Svd {
    Matrix u;                            // m x rank
    std::vector<double> singular_values;  // all of them, descending
    Matrix v;                            // n x n
    int rank = 0;                        // count of singular values > 1e-12
};

/// SVD via the cross-product route: Jacobi eigendecomposition of AtA gives V
/// and sigma^2; left vectors are recovered as Av/sigma for the non-negligible
/// singular values only. Safe because callers guarantee few columns. The sign
/// convention (largest-magnitude entry of each V column positive) makes the
/// factorization unique.
inline Svd svd_small(const Matrix& a) {
    if (a.cols() > 4) throw Error("svd_small: supports at most 4 columns");
    if (a.rows() == 0 || a.cols() == 0) throw Error("svd_small: empty matrix");
    const size_t n = a.cols();
    Matrix ata(n, n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (size_t r = 0; r < a.rows(); ++r) s += a(r, i) * a(r, j);
            ata(i, j) = s;
        }
    auto eig = jacobi_eigen_symmetric(ata);  // values descending

    Svd out;
    out.v = Matrix(n, n);
    for (size_t k = 0; k < n; ++k) {
        out.singular_values.push_back(std::sqrt(std::max(eig.values[k], 0.0)));
        size_t arg = 0;
        for (size_t i = 1; i < n; ++i)
            if (std::abs(eig.vectors(i, k)) > std::abs(eig.vectors(arg, k))) arg = i;
        const double sign = eig.vectors(arg, k) < 0.0 ? -1.0 : 1.0;
        for (size_t i = 0; i < n; ++i) out.v(i, k) = sign * eig.vectors(i, k);
    }
    while (out.rank < static_cast<int>(n) && out.singular_values[out.rank] > 1e-12) ++out.rank;

    out.u = Matrix(a.rows(), out.rank);
    for (int k = 0; k < out.rank; ++k) {
        const double inv = 1.0 / out.singular_values[k];
        for (size_t r = 0; r < a.rows(); ++r) {
            double s = 0.0;
            for (size_t j = 0; j < n; ++j) s += a(r, j) * out.v(j, k);
            out.u(r, k) = s * inv;
        }
    }
    return out;
}

struct CAResult {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<double> singular_values;  // nontrivial dimensions, descending
    std::vector<double> inertia;          // sigma_k^2
    std::vector<double> share;            // inertia_k / total
    double total_inertia = 0.0;
    Matrix row_coords;  // rows x dims, principal coordinates
    Matrix col_coords;  // cols x dims
};

/// Decomposes the standardized residual matrix S = Dr^{-1/2}(P - rc^T)Dc^{-1/2}.
/// Centering removes the trivial dimension by construction; any remaining
/// singular value at numerical zero is dropped, so an exact-independence
/// table yields zero dimensions.
inline CAResult correspondence_analysis(const ContingencyTable& table) {
    const size_t nr = table.counts.rows();
    const size_t nc = table.counts.cols();
    if (nr < 2 || nc < 2) throw Error("correspondence_analysis: need at least a 2x2 table");
    if (table.n <= 0.0) throw Error("correspondence_analysis: grand total must be positive");

    std::vector<double> r(nr, 0.0), c(nc, 0.0);
    for (size_t i = 0; i < nr; ++i)
        for (size_t j = 0; j < nc; ++j) {
            const double v = table.counts(i, j);
            if (v < 0.0) throw Error("correspondence_analysis: negative count");
            r[i] += v / table.n;
            c[j] += v / table.n;
        }
    for (size_t i = 0; i < nr; ++i)
        if (r[i] <= 0.0)
            throw Error("correspondence_analysis: all-zero row '" + table.row_labels[i] + "'");
    for (size_t j = 0; j < nc; ++j)
        if (c[j] <= 0.0)
            throw Error("correspondence_analysis: all-zero column '" + table.col_labels[j] + "'");

    Matrix s(nr, nc);
    for (size_t i = 0; i < nr; ++i)
        for (size_t j = 0; j < nc; ++j)
            s(i, j) = (table.counts(i, j) / table.n - r[i] * c[j]) / std::sqrt(r[i] * c[j]);

    auto svd = svd_small(s);
    const int max_dims = static_cast<int>(std::min(nr, nc)) - 1;
    const int ndim = std::min(svd.rank, max_dims);

    CAResult res;
    res.row_labels = table.row_labels;
    res.col_labels = table.col_labels;
    res.row_coords = Matrix(nr, ndim);
    res.col_coords = Matrix(nc, ndim);
    for (int k = 0; k < ndim; ++k) {
        const double sigma = svd.singular_values[k];
        res.singular_values.push_back(sigma);
        res.inertia.push_back(sigma * sigma);
        res.total_inertia += sigma * sigma;
        for (size_t i = 0; i < nr; ++i) res.row_coords(i, k) = svd.u(i, k) * sigma / std::sqrt(r[i]);
        for (size_t j = 0; j < nc; ++j) res.col_coords(j, k) = svd.v(j, k) * sigma / std::sqrt(c[j]);
    }
    for (double in : res.inertia)
        res.share.push_back(res.total_inertia > 0.0 ? in / res.total_inertia : 0.0);
    return res;
}

/// Coordinates CSV: `kind,label,dim1,...`, rows before columns.
inline std::string coords_to_csv(const CAResult& res) {
    const size_t ndim = res.singular_values.size();
    std::vector<std::string> header = {"kind", "label"};
    for (size_t k = 0; k < ndim; ++k) header.push_back("dim" + std::to_string(k + 1));
    std::string out = csv_row(header);
    for (size_t i = 0; i < res.row_labels.size(); ++i) {
        std::vector<std::string> fields = {"row", res.row_labels[i]};
        for (size_t k = 0; k < ndim; ++k) fields.push_back(fmt_double(res.row_coords(i, k)));
        out += csv_row(fields);
    }
    for (size_t j = 0; j < res.col_labels.size(); ++j) {
        std::vector<std::string> fields = {"col", res.col_labels[j]};
        for (size_t k = 0; k < ndim; ++k) fields.push_back(fmt_double(res.col_coords(j, k)));
        out += csv_row(fields);
    }
    return out;
}

inline std::string summary_to_csv(const CAResult& res) {
    std::string out = csv_row({"dim", "singular_value", "inertia", "share"});
    for (size_t k = 0; k < res.singular_values.size(); ++k)
        out += csv_row({std::to_string(k + 1), fmt_double(res.singular_values[k]),
                        fmt_double(res.inertia[k]), fmt_double(res.share[k])});
    return out;
}

}
