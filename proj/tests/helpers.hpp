#pragma once

// Shared test utilities: independent oracles (Gaussian elimination, LSDV,
// chi-square, threshold-enumeration AP), a keyword-planted corpus generator,
// a minimal XML well-formedness checker, and filesystem scratch helpers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "policylens/ingest.hpp"
#include "policylens/linalg.hpp"
#include "policylens/themes.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        dir_ = fs::temp_directory_path() /
               ("policylens-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ignore;
        fs::remove_all(dir_, ignore);
    }
    const fs::path& path() const { return dir_; }
    fs::path operator/(const std::string& name) const { return dir_ / name; }

  private:
    fs::path dir_;
};

// ---------------------------------------------------------------------------
// Dense linear algebra oracle, deliberately independent of the library:
// plain Gaussian elimination with partial pivoting.

inline std::vector<double> solve_gaussian(std::vector<std::vector<double>> a,
                                          std::vector<double> b) {
    const size_t n = a.size();
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (a[col][col] == 0.0) throw std::runtime_error("singular system in test oracle");
        for (size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t i = n; i-- > 0;) {
        double s = b[i];
        for (size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

inline std::vector<std::vector<double>> invert_gaussian(std::vector<std::vector<double>> a) {
    const size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = a[col][col];
        if (d == 0.0) throw std::runtime_error("singular matrix in test oracle");
        for (size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            for (size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

// ---------------------------------------------------------------------------
// Panel regression oracles.

struct PanelRow {
    std::string country;
    int year = 0;
    std::vector<double> x;
    double y = 0.0;
};

/// LSDV: regress y on [x, country dummies (first omitted), year dummies
/// (first omitted), intercept] via normal equations; returns the x slopes.
inline std::vector<double> lsdv_slopes(const std::vector<PanelRow>& rows) {
    std::vector<std::string> countries;
    std::vector<int> years;
    for (const auto& r : rows) {
        if (std::find(countries.begin(), countries.end(), r.country) == countries.end())
            countries.push_back(r.country);
        if (std::find(years.begin(), years.end(), r.year) == years.end()) years.push_back(r.year);
    }
    std::sort(countries.begin(), countries.end());
    std::sort(years.begin(), years.end());

    const size_t k = rows[0].x.size();
    const size_t p = k + (countries.size() - 1) + (years.size() - 1) + 1;
    std::vector<std::vector<double>> design(rows.size(), std::vector<double>(p, 0.0));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < k; ++j) design[i][j] = rows[i].x[j];
        const auto ci = static_cast<size_t>(
            std::find(countries.begin(), countries.end(), rows[i].country) - countries.begin());
        if (ci > 0) design[i][k + ci - 1] = 1.0;
        const auto yi = static_cast<size_t>(
            std::find(years.begin(), years.end(), rows[i].year) - years.begin());
        if (yi > 0) design[i][k + countries.size() - 1 + yi - 1] = 1.0;
        design[i][p - 1] = 1.0;
    }

    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t a = 0; a < p; ++a) {
            xty[a] += design[i][a] * rows[i].y;
            for (size_t b = 0; b < p; ++b) xtx[a][b] += design[i][a] * design[i][b];
        }
    }
    auto beta = solve_gaussian(xtx, xty);
    beta.resize(k);
    return beta;
}

/// Literal double-loop cluster sandwich with small-sample factor
/// (G/(G-1)) * ((N-1)/(N-K)), written against matrices-of-vectors so it
/// shares no code with the library implementation.
inline std::vector<std::vector<double>> naive_cluster_vcov(
    const std::vector<std::vector<double>>& x, const std::vector<double>& e,
    const std::vector<std::string>& cluster) {
    const size_t n = x.size();
    const size_t k = x[0].size();
    std::vector<std::vector<double>> xtx(k, std::vector<double>(k, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t a = 0; a < k; ++a)
            for (size_t b = 0; b < k; ++b) xtx[a][b] += x[i][a] * x[i][b];
    auto bread = invert_gaussian(xtx);

    std::set<std::string> ids(cluster.begin(), cluster.end());
    std::vector<std::vector<double>> meat(k, std::vector<double>(k, 0.0));
    for (const auto& id : ids) {
        std::vector<double> s(k, 0.0);
        for (size_t i = 0; i < n; ++i)
            if (cluster[i] == id)
                for (size_t a = 0; a < k; ++a) s[a] += x[i][a] * e[i];
        for (size_t a = 0; a < k; ++a)
            for (size_t b = 0; b < k; ++b) meat[a][b] += s[a] * s[b];
    }

    const double g = static_cast<double>(ids.size());
    const double c = (g / (g - 1.0)) *
                     ((static_cast<double>(n) - 1.0) / (static_cast<double>(n) - static_cast<double>(k)));
    std::vector<std::vector<double>> tmp(k, std::vector<double>(k, 0.0));
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b)
            for (size_t m = 0; m < k; ++m) tmp[a][b] += bread[a][m] * meat[m][b];
    std::vector<std::vector<double>> v(k, std::vector<double>(k, 0.0));
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b) {
            for (size_t m = 0; m < k; ++m) v[a][b] += tmp[a][m] * bread[m][b];
            v[a][b] *= c;
        }
    return v;
}

/// Random unbalanced country-year panel with known slopes, country and year
/// effects, and optional noise. Guaranteed to keep every sampled row usable.
struct SyntheticPanel {
    std::vector<PanelRow> rows;
    std::vector<double> beta;
};

inline SyntheticPanel make_unbalanced_panel(std::mt19937& gen, int n_x, double noise_sd) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const int n_countries = 10 + static_cast<int>(gen() % 21);
    const int n_years = 5 + static_cast<int>(gen() % 4);
    const double keep = 0.7 + 0.2 * ud(gen);

    SyntheticPanel panel;
    for (int j = 0; j < n_x; ++j) panel.beta.push_back(-2.0 + 4.0 * ud(gen));

    std::vector<double> alpha(n_countries), gamma(n_years);
    for (auto& a : alpha) a = 3.0 * nd(gen);
    for (auto& g : gamma) g = 2.0 * nd(gen);

    for (int c = 0; c < n_countries; ++c) {
        std::string iso = "A";
        iso += static_cast<char>('A' + c / 26);
        iso += static_cast<char>('A' + c % 26);
        for (int t = 0; t < n_years; ++t) {
            if (ud(gen) > keep) continue;
            PanelRow row;
            row.country = iso;
            row.year = 2015 + t;
            double y = alpha[c] + gamma[t] + noise_sd * nd(gen);
            for (int j = 0; j < n_x; ++j) {
                const double x = nd(gen) + 0.5 * alpha[c] + 0.3 * gamma[t];
                row.x.push_back(x);
                y += panel.beta[j] * x;
            }
            row.y = y;
            panel.rows.push_back(std::move(row));
        }
    }
    return panel;
}

/// Wraps oracle rows as a merged analysis panel, regressors and outcome
/// stored as indicator columns.
inline policylens::ingest::AnalysisPanel to_analysis_panel(const std::vector<PanelRow>& rows,
                                                           const std::vector<std::string>& x_names,
                                                           const std::string& outcome) {
    policylens::ingest::AnalysisPanel panel;
    for (const auto& r : rows) {
        policylens::ingest::AnalysisRow ar;
        ar.country_iso3 = r.country;
        ar.year = r.year;
        for (size_t j = 0; j < x_names.size(); ++j) ar.indicators[x_names[j]] = r.x[j];
        ar.indicators[outcome] = r.y;
        panel.rows.push_back(std::move(ar));
    }
    return panel;
}

// ---------------------------------------------------------------------------
// Chi-square oracle for CA.

inline double chi_square(const policylens::Matrix& counts) {
    const size_t nr = counts.rows(), nc = counts.cols();
    double n = 0.0;
    std::vector<double> row(nr, 0.0), col(nc, 0.0);
    for (size_t i = 0; i < nr; ++i)
        for (size_t j = 0; j < nc; ++j) {
            n += counts(i, j);
            row[i] += counts(i, j);
            col[j] += counts(i, j);
        }
    double chi2 = 0.0;
    for (size_t i = 0; i < nr; ++i)
        for (size_t j = 0; j < nc; ++j) {
            const double expected = row[i] * col[j] / n;
            const double d = counts(i, j) - expected;
            chi2 += d * d / expected;
        }
    return chi2;
}

// ---------------------------------------------------------------------------
// Average-precision oracle: enumerate every distinct score as a threshold
// and accumulate the step-wise sum directly from set counts.

inline double ap_by_threshold_enumeration(const std::vector<double>& scores,
                                          const std::vector<uint8_t>& golds) {
    std::vector<double> thresholds(scores);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    long total_pos = 0;
    for (uint8_t g : golds) total_pos += g ? 1 : 0;

    double ap = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        long tp = 0, pred = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                ++pred;
                tp += golds[i] ? 1 : 0;
            }
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(pred);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

// ---------------------------------------------------------------------------
// Keyword-planted corpus: each theme owns a disjoint keyword pool, every
// document mentions keywords of exactly its labels plus neutral filler, so
// the labeling is separable by construction.

inline const std::array<std::vector<std::string>, 4> kThemeKeywords = {{
    {"emission", "carbon", "renewable", "decarbonization", "solar", "netzero"},
    {"adaptation", "resilience", "drought", "irrigation", "coastal", "heatwave"},
    {"disaster", "preparedness", "earlywarning", "cyclone", "evacuation", "floodcontrol"},
    {"compensation", "displacement", "reparation", "uninsurable"},
}};

inline const std::vector<std::string> kFillerWords = {
    "national", "framework", "act",      "law",     "strategy", "ministry", "programme",
    "council",  "budget",    "annual",   "report",  "public",   "sector",   "measures",
    "article",  "chapter",   "approved", "adopted", "plan",     "policy"};

struct GeneratedCorpus {
    std::vector<policylens::ingest::PolicyDocument> docs;
};

inline GeneratedCorpus make_keyword_corpus(int n_docs, uint32_t seed) {
    using policylens::Theme;
    using policylens::ThemeSet;
    std::mt19937 gen(seed);
    auto pick = [&](size_t n) { return static_cast<size_t>(gen() % n); };

    const std::vector<std::string> countries = {"USA", "DEU", "FRA", "JPN", "BRA",
                                                "IND", "KEN", "FJI", "GBR", "CAN"};
    GeneratedCorpus corpus;
    for (int i = 0; i < n_docs; ++i) {
        ThemeSet labels;
        if (i < policylens::kThemeCount) {
            // the first four docs cover one theme each so every head is trainable
            labels.add(static_cast<Theme>(i));
        } else {
            const unsigned roll = gen() % 100;
            if (roll < 45)
                labels.add(Theme::Mitigation);
            else if (roll < 70)
                labels.add(Theme::Adaptation);
            else if (roll < 85)
                labels.add(Theme::DisasterRiskManagement);
            else if (roll < 91)
                labels.add(Theme::LossAndDamage);
            else if (roll < 96) {
                labels.add(Theme::Mitigation);
                labels.add(Theme::Adaptation);
            } else {
                labels.add(Theme::Adaptation);
                labels.add(Theme::DisasterRiskManagement);
            }
        }

        std::string text;
        auto push_word = [&](const std::string& w) {
            if (!text.empty()) text += ' ';
            text += w;
        };
        for (int k = 0; k < policylens::kThemeCount; ++k) {
            if (!labels.contains(static_cast<Theme>(k))) continue;
            const auto& pool = kThemeKeywords[k];
            // three distinct keywords per theme, then a couple of repeats
            std::vector<size_t> order(pool.size());
            for (size_t j = 0; j < order.size(); ++j) order[j] = j;
            for (size_t j = 0; j < 3; ++j) {
                std::swap(order[j], order[j + gen() % (order.size() - j)]);
                push_word(pool[order[j]]);
            }
            const int extra = 1 + static_cast<int>(gen() % 2);
            for (int m = 0; m < extra; ++m) push_word(pool[pick(pool.size())]);
        }
        const int fillers = 5 + static_cast<int>(gen() % 4);
        for (int m = 0; m < fillers; ++m) push_word(kFillerWords[pick(kFillerWords.size())]);

        policylens::ingest::PolicyDocument d;
        d.doc_id = "GEN-" + std::to_string(i);
        d.country_iso3 = countries[pick(countries.size())];
        d.year = 2015 + static_cast<int>(gen() % 8);
        d.summary_text = std::move(text);
        d.gold_labels = labels;
        corpus.docs.push_back(std::move(d));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Minimal XML well-formedness check: tags balance, single root, quoted
// attributes. Enough to catch malformed SVG emission.

inline bool xml_well_formed(const std::string& doc, std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    std::vector<std::string> stack;
    size_t i = 0;
    int roots = 0;
    while (i < doc.size()) {
        if (doc[i] != '<') {
            if (doc[i] == '>') return fail("stray '>' outside tag");
            ++i;
            continue;
        }
        size_t close = doc.find('>', i);
        if (close == std::string::npos) return fail("unterminated tag");
        std::string tag = doc.substr(i + 1, close - i - 1);
        if (tag.empty()) return fail("empty tag");
        if (tag[0] == '?' || tag[0] == '!') {
            i = close + 1;
            continue;
        }
        // no '<' inside a tag, attribute quotes must balance
        long quotes = std::count(tag.begin(), tag.end(), '"');
        if (quotes % 2 != 0) return fail("unbalanced attribute quotes in <" + tag + ">");
        if (tag.find('<') != std::string::npos) return fail("nested '<'");
        if (tag[0] == '/') {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name)
                return fail("mismatched closing tag </" + name + ">");
            stack.pop_back();
            if (stack.empty()) ++roots;
        } else {
            const bool self_closing = tag.back() == '/';
            std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
            if (name.empty()) return fail("unnamed tag");
            if (self_closing) {
                if (stack.empty()) ++roots;
            } else {
                stack.push_back(name);
            }
        }
        i = close + 1;
    }
    if (!stack.empty()) return fail("unclosed tag <" + stack.back() + ">");
    if (roots != 1) return fail("expected exactly one root element, saw " + std::to_string(roots));
    return true;
}

/// Pulls the value of attr from the first element in doc that contains
/// marker; empty string when absent.
inline std::string attr_of(const std::string& doc, const std::string& marker,
                           const std::string& attr) {
    size_t at = doc.find(marker);
    if (at == std::string::npos) return "";
    size_t open = doc.rfind('<', at);
    size_t close = doc.find('>', at);
    if (open == std::string::npos || close == std::string::npos) return "";
    const std::string element = doc.substr(open, close - open + 1);
    const std::string needle = " " + attr + "=\"";
    size_t p = element.find(needle);
    if (p == std::string::npos) return "";
    p += needle.size();
    size_t q = element.find('"', p);
    if (q == std::string::npos) return "";
    return element.substr(p, q - p);
}

}  // namespace testutil
