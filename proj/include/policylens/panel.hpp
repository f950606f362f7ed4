#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/ingest.hpp"
#include "policylens/linalg.hpp"
#include "policylens/numfmt.hpp"
#include "policylens/themes.hpp"

namespace policylens::panel {

struct RegressionSpec {
    std::string outcome;
    std::vector<std::string> regressors = {kThemeNames[0], kThemeNames[1], kThemeNames[2],
                                           kThemeNames[3]};
    double confidence = 0.95;
    bool standardize_regressors = false;

    void validate() const {
        if (outcome.empty()) throw Error("regression spec: empty outcome");
        if (regressors.empty()) throw Error("regression spec: empty regressor list");
        std::set<std::string> seen;
        for (const auto& r : regressors) {
            if (!seen.insert(r).second)
                throw Error("regression spec: duplicate regressor '" + r + "'");
            if (r == outcome)
                throw Error("regression spec: outcome '" + outcome + "' is also a regressor");
        }
        if (!(confidence > 0.0 && confidence < 1.0))
            throw Error("regression spec: confidence must lie in (0,1)");
    }
};

/// Looks a column up on a merged row: theme names resolve to counts (missing
/// outside corpus coverage), anything else to the indicator map.
inline std::optional<double> field_value(const ingest::AnalysisRow& row, const std::string& name) {
    for (int k = 0; k < kThemeCount; ++k) {
        if (name == kThemeNames[k]) {
            if (!row.theme_counts) return std::nullopt;
            return static_cast<double>((*row.theme_counts)[k]);
        }
    }
    auto it = row.indicators.find(name);
    if (it == row.indicators.end()) return std::nullopt;
    return it->second;
}

struct DesignSample {
    std::vector<std::string> country;  // per observation, (country, year) sorted
    std::vector<int> year;
    std::vector<double> y;
    Matrix x;  // n x k
    std::vector<std::string> regressor_names;
    long n_countries = 0;
    long n_years = 0;
};

/// Listwise deletion: an observation enters only with the outcome and every
/// regressor present. Nothing is imputed.
inline DesignSample assemble_regression_sample(const ingest::AnalysisPanel& panel,
                                               const RegressionSpec& spec) {
    spec.validate();
    struct Usable {
        const ingest::AnalysisRow* row;
        double y;
        std::vector<double> x;
    };
    std::vector<Usable> usable;
    for (const auto& row : panel.rows) {
        auto y = field_value(row, spec.outcome);
        if (!y) continue;
        std::vector<double> xs;
        xs.reserve(spec.regressors.size());
        bool complete = true;
        for (const auto& name : spec.regressors) {
            auto v = field_value(row, name);
            if (!v) {
                complete = false;
                break;
            }
            xs.push_back(*v);
        }
        if (!complete) continue;
        usable.push_back({&row, *y, std::move(xs)});
    }
    std::sort(usable.begin(), usable.end(), [](const Usable& a, const Usable& b) {
        if (a.row->country_iso3 != b.row->country_iso3)
            return a.row->country_iso3 < b.row->country_iso3;
        return a.row->year < b.row->year;
    });

    std::set<std::string> countries;
    std::set<int> years;
    for (const auto& u : usable) {
        countries.insert(u.row->country_iso3);
        years.insert(u.row->year);
    }
    const size_t k = spec.regressors.size();
    const size_t need = k + countries.size() + years.size();
    if (usable.size() < need)
        throw Error("outcome '" + spec.outcome + "': under-identified (" +
                    std::to_string(usable.size()) + " usable rows, need at least " +
                    std::to_string(need) + " for " + std::to_string(k) + " regressors, " +
                    std::to_string(countries.size()) + " countries, " +
                    std::to_string(years.size()) + " years)");

    DesignSample sample;
    sample.regressor_names = spec.regressors;
    sample.n_countries = static_cast<long>(countries.size());
    sample.n_years = static_cast<long>(years.size());
    sample.x = Matrix(usable.size(), k);
    for (size_t i = 0; i < usable.size(); ++i) {
        sample.country.push_back(usable[i].row->country_iso3);
        sample.year.push_back(usable[i].row->year);
        sample.y.push_back(usable[i].y);
        for (size_t j = 0; j < k; ++j) sample.x(i, j) = usable[i].x[j];
    }

    if (spec.standardize_regressors) {
        for (size_t j = 0; j < k; ++j) {
            const double n = static_cast<double>(usable.size());
            double mean = 0.0;
            for (size_t i = 0; i < usable.size(); ++i) mean += sample.x(i, j);
            mean /= n;
            double ss = 0.0;
            for (size_t i = 0; i < usable.size(); ++i)
                ss += (sample.x(i, j) - mean) * (sample.x(i, j) - mean);
            const double sd = usable.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            for (size_t i = 0; i < usable.size(); ++i)
                sample.x(i, j) = sd > 0.0 ? (sample.x(i, j) - mean) / sd : 0.0;
        }
    }
    return sample;
}

struct WithinResult {
    DesignSample sample;  // demeaned in place
    int iterations = 0;   // passes run, including the one that measured convergence
};

/// Alternating projections: each pass subtracts country-group means then
/// year-group means from the outcome and every regressor, until no cell moves
/// by tol or more within a pass. Balanced panels finish on pass 2 (pass 1
/// does the work, pass 2 observes zero change).
inline WithinResult within_transform(DesignSample sample, double tol = 1e-10,
                                     int max_iter = 1000) {
    const size_t n = sample.y.size();
    const size_t k = sample.regressor_names.size();

    std::map<std::string, std::vector<size_t>> by_country;
    std::map<int, std::vector<size_t>> by_year;
    for (size_t i = 0; i < n; ++i) {
        by_country[sample.country[i]].push_back(i);
        by_year[sample.year[i]].push_back(i);
    }

    // column 0 is the outcome, 1..k the regressors
    auto cell = [&](size_t i, size_t col) -> double& {
        return col == 0 ? sample.y[i] : sample.x(i, col - 1);
    };

    WithinResult out;
    std::vector<double> before(n);
    for (int pass = 1; pass <= max_iter; ++pass) {
        double max_change = 0.0;
        for (size_t col = 0; col <= k; ++col) {
            for (size_t i = 0; i < n; ++i) before[i] = cell(i, col);
            for (const auto& [key, members] : by_country) {
                double mean = 0.0;
                for (size_t i : members) mean += cell(i, col);
                mean /= static_cast<double>(members.size());
                for (size_t i : members) cell(i, col) -= mean;
            }
            for (const auto& [key, members] : by_year) {
                double mean = 0.0;
                for (size_t i : members) mean += cell(i, col);
                mean /= static_cast<double>(members.size());
                for (size_t i : members) cell(i, col) -= mean;
            }
            for (size_t i = 0; i < n; ++i)
                max_change = std::max(max_change, std::abs(cell(i, col) - before[i]));
        }
        out.iterations = pass;
        if (max_change < tol) {
            out.sample = std::move(sample);
            return out;
        }
        if (pass == max_iter)
            throw Error("within_transform: no convergence after " + std::to_string(max_iter) +
                        " passes (last change " + fmt_double(max_change) + ")");
    }
    out.sample = std::move(sample);  // max_iter == 0: nothing to do
    return out;
}

struct OlsFit {
    std::vector<double> beta;
    std::vector<double> residuals;
};

inline OlsFit ols(const Matrix& x, std::span<const double> y,
                  std::span<const std::string> names = {}) {
    auto fit = householder_least_squares(x, std::vector<double>(y.begin(), y.end()), names);
    OlsFit out;
    out.beta = std::move(fit.beta);
    out.residuals.resize(x.rows());
    for (size_t i = 0; i < x.rows(); ++i) {
        double pred = 0.0;
        for (size_t j = 0; j < x.cols(); ++j) pred += x(i, j) * out.beta[j];
        out.residuals[i] = y[i] - pred;
    }
    return out;
}

/// Cluster-robust sandwich with the standard small-sample factor
/// c = (G/(G-1)) * ((N-1)/(N-K)).
inline Matrix cluster_robust_vcov(const Matrix& x, std::span<const double> residuals,
                                  std::span<const std::string> cluster_ids) {
    const size_t n = x.rows();
    const size_t k = x.cols();
    if (residuals.size() != n || cluster_ids.size() != n)
        throw Error("cluster_robust_vcov: input length mismatch");

    std::map<std::string, std::vector<size_t>> clusters;
    for (size_t i = 0; i < n; ++i) clusters[std::string(cluster_ids[i])].push_back(i);
    const double g = static_cast<double>(clusters.size());
    if (clusters.size() < 2) throw Error("cluster_robust_vcov: need at least 2 clusters");
    if (n <= k) throw Error("cluster_robust_vcov: need more observations than parameters");

    Matrix xtx(k, k);
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b) {
            double s = 0.0;
            for (size_t i = 0; i < n; ++i) s += x(i, a) * x(i, b);
            xtx(a, b) = s;
        }
    Matrix bread = invert_small(xtx);

    Matrix meat(k, k);
    std::vector<double> score(k);
    for (const auto& [id, members] : clusters) {
        std::fill(score.begin(), score.end(), 0.0);
        for (size_t i : members)
            for (size_t a = 0; a < k; ++a) score[a] += x(i, a) * residuals[i];
        for (size_t a = 0; a < k; ++a)
            for (size_t b = 0; b < k; ++b) meat(a, b) += score[a] * score[b];
    }

    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    const double c = (g / (g - 1.0)) * ((nn - 1.0) / (nn - kk));
    Matrix v = bread * meat * bread;
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b) v(a, b) *= c;
    return v;
}

struct FEResult {
    std::string outcome;
    struct Coefficient {
        std::string name;
        double beta = 0.0;
        double se = 0.0;
        double ci_low = 0.0;
        double ci_high = 0.0;
        bool significant = false;
    };
    std::vector<Coefficient> coefficients;
    long n_obs = 0;
    long n_countries = 0;
    long n_years = 0;
    int demeaning_iterations = 0;
    double within_r2 = 0.0;
};

/// assemble -> demean -> OLS -> cluster-robust CIs with t_{1-alpha/2, G-1}.
inline FEResult fit_twoway_fe(const ingest::AnalysisPanel& panel, const RegressionSpec& spec) {
    auto sample = assemble_regression_sample(panel, spec);
    auto within = within_transform(std::move(sample));
    const DesignSample& d = within.sample;

    auto fit = ols(d.x, d.y, d.regressor_names);
    auto vcov = cluster_robust_vcov(d.x, fit.residuals, d.country);

    FEResult res;
    res.outcome = spec.outcome;
    res.n_obs = static_cast<long>(d.y.size());
    res.n_countries = d.n_countries;
    res.n_years = d.n_years;
    res.demeaning_iterations = within.iterations;

    double sst = 0.0, sse = 0.0;
    for (size_t i = 0; i < d.y.size(); ++i) {
        sst += d.y[i] * d.y[i];
        sse += fit.residuals[i] * fit.residuals[i];
    }
    res.within_r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;

    boost::math::students_t tdist(static_cast<double>(d.n_countries - 1));
    const double tcrit = boost::math::quantile(tdist, 1.0 - (1.0 - spec.confidence) / 2.0);
    for (size_t j = 0; j < d.regressor_names.size(); ++j) {
        FEResult::Coefficient c;
        c.name = d.regressor_names[j];
        c.beta = fit.beta[j];
        c.se = std::sqrt(std::max(vcov(j, j), 0.0));
        c.ci_low = c.beta - tcrit * c.se;
        c.ci_high = c.beta + tcrit * c.se;
        c.significant = c.ci_low > 0.0 || c.ci_high < 0.0;
        res.coefficients.push_back(std::move(c));
    }
    return res;
}

struct BatteryResult {
    std::vector<FEResult> results;
    struct Failure {
        std::string outcome;
        std::string message;
    };
    std::vector<Failure> failures;
};

/// One fit per outcome with the same regressors; a failing outcome is
/// recorded and the battery moves on.
inline BatteryResult run_regression_battery(const ingest::AnalysisPanel& panel,
                                            std::span<const std::string> outcomes,
                                            const RegressionSpec& base = {}) {
    if (outcomes.empty()) throw Error("run_regression_battery: empty outcome list");
    BatteryResult battery;
    for (const auto& outcome : outcomes) {
        RegressionSpec spec = base;
        spec.outcome = outcome;
        try {
            battery.results.push_back(fit_twoway_fe(panel, spec));
        } catch (const Error& e) {
            battery.failures.push_back({outcome, e.what()});
        }
    }
    return battery;
}

inline const std::vector<std::string> kBatteryHeader = {
    "outcome", "regressor", "beta",        "se",      "ci_low",
    "ci_high", "n_obs",     "n_countries", "n_years", "within_r2"};

inline std::string battery_to_csv(const BatteryResult& battery) {
    std::string out = csv_row(kBatteryHeader);
    for (const auto& res : battery.results)
        for (const auto& c : res.coefficients)
            out += csv_row({res.outcome, c.name, fmt_double(c.beta), fmt_double(c.se),
                            fmt_double(c.ci_low), fmt_double(c.ci_high),
                            std::to_string(res.n_obs), std::to_string(res.n_countries),
                            std::to_string(res.n_years), fmt_double(res.within_r2)});
    return out;
}

}
