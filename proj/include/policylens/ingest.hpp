#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/numfmt.hpp"
#include "policylens/themes.hpp"

namespace policylens::ingest {

/// One policy summary from the corpus CSV. gold_labels may be empty for
/// unlabeled documents.
struct PolicyDocument {
    std::string doc_id;
    std::string country_iso3;
    int year = 0;
    std::string summary_text;
    ThemeSet gold_labels;
};

struct IndicatorObservation {
    std::string country_iso3;
    int year = 0;
    std::string indicator_code;
    double value = 0.0;
};

enum class Transform { Log, Level };

/// Per-indicator transform assignment plus the panel start year.
struct HarmonizeConfig {
    std::map<std::string, Transform> transforms;
    int min_year = 2015;

    /// Shipped defaults for the eight development indicators. Monetary
    /// aggregates are logged; FDI stays in levels because inflows can be
    /// negative; rates and shares stay in levels.
    static HarmonizeConfig defaults() {
        HarmonizeConfig c;
        c.transforms = {
            {"GDP", Transform::Log},       {"GNI_ATLAS", Transform::Log},
            {"GNI_PPP", Transform::Log},   {"EXT_DEBT", Transform::Log},
            {"FDI", Transform::Level},     {"ELEC_CONS", Transform::Level},
            {"ADOL_FERT", Transform::Level}, {"SEC_ENROLL", Transform::Level},
        };
        return c;
    }

    /// Line-oriented config: `CODE = LOG|LEVEL` entries plus `min_year = N`.
    /// `#` starts a comment.
    static HarmonizeConfig load(const std::filesystem::path& path) {
        HarmonizeConfig c;
        c.transforms.clear();
        std::string text = read_text_file(path);
        int line_no = 0;
        size_t pos = 0;
        while (pos <= text.size()) {
            size_t nl = text.find('\n', pos);
            if (nl == std::string::npos) nl = text.size();
            std::string_view line = trim(std::string_view(text).substr(pos, nl - pos));
            ++line_no;
            pos = nl + 1;
            if (line.empty() || line.front() == '#') {
                if (nl == text.size()) break;
                continue;
            }
            size_t eq = line.find('=');
            if (eq == std::string_view::npos)
                throw Error(path.filename().string() + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
            std::string key(trim(line.substr(0, eq)));
            std::string val(trim(line.substr(eq + 1)));
            if (key == "min_year") {
                auto y = try_parse_int(val);
                if (!y) throw Error(path.filename().string() + ":" + std::to_string(line_no) +
                                    ": min_year must be an integer");
                c.min_year = static_cast<int>(*y);
            } else if (val == "LOG") {
                c.transforms[key] = Transform::Log;
            } else if (val == "LEVEL") {
                c.transforms[key] = Transform::Level;
            } else {
                throw Error(path.filename().string() + ":" + std::to_string(line_no) +
                            ": transform must be LOG or LEVEL, got '" + val + "'");
            }
            if (nl == text.size()) break;
        }
        return c;
    }
};

struct HarmonizedRow {
    std::string country_iso3;
    int year = 0;
    std::string indicator_code;
    double transformed_value = 0.0;
};

/// Rows dropped during harmonization, attributed to exactly one rule each.
struct DropReport {
    struct Counts {
        long year_filtered = 0;
        long nonpositive_log = 0;
    };
    std::map<std::string, Counts> by_indicator;

    long total() const {
        long t = 0;
        for (const auto& [code, c] : by_indicator) t += c.year_filtered + c.nonpositive_log;
        return t;
    }
};

struct HarmonizedPanel {
    std::vector<HarmonizedRow> rows;
    std::map<std::string, Transform> applied;
    int min_year = 2015;
    DropReport drops;
};

/// One merged country-year row. theme_counts is missing for country-years
/// outside the corpus coverage of that country; indicator cells are missing
/// wherever the source data is.
struct AnalysisRow {
    std::string country_iso3;
    int year = 0;
    std::optional<std::array<int, kThemeCount>> theme_counts;
    std::map<std::string, double> indicators;
};

struct AnalysisPanel {
    std::vector<AnalysisRow> rows;  // unique (country, year), sorted
};

namespace detail {

inline bool valid_iso3(std::string_view s) {
    if (s.size() != 3) return false;
    for (char c : s)
        if (c < 'A' || c > 'Z') return false;
    return true;
}

inline void check_header(const CsvRecord& header, const std::vector<std::string>& expected,
                         const std::string& origin) {
    for (const auto& col : expected) {
        if (std::find(header.fields.begin(), header.fields.end(), col) == header.fields.end())
            throw Error(origin + ": header is missing column '" + col + "'");
    }
}

inline int column_index(const CsvRecord& header, const std::string& name) {
    auto it = std::find(header.fields.begin(), header.fields.end(), name);
    return static_cast<int>(it - header.fields.begin());
}

}  // namespace detail

inline const std::vector<std::string> kPolicyCorpusHeader = {
    "doc_id", "country_iso3", "year", "summary_text", "labels"};

/// Loads the policy corpus CSV. If a predicted_labels column is present
/// (output of the classify command) it is parsed into *predicted when given;
/// the optional stays empty when the column is absent.
inline std::vector<PolicyDocument> load_policy_corpus(
    const std::filesystem::path& path,
    std::optional<std::vector<ThemeSet>>* predicted = nullptr) {
    auto records = read_csv_file(path);
    const std::string origin = path.filename().string();
    if (records.empty()) throw Error(origin + ": empty file (missing header)");
    detail::check_header(records[0], kPolicyCorpusHeader, origin);

    const int i_id = detail::column_index(records[0], "doc_id");
    const int i_iso = detail::column_index(records[0], "country_iso3");
    const int i_year = detail::column_index(records[0], "year");
    const int i_text = detail::column_index(records[0], "summary_text");
    const int i_labels = detail::column_index(records[0], "labels");
    const bool has_pred = std::find(records[0].fields.begin(), records[0].fields.end(),
                                    "predicted_labels") != records[0].fields.end();
    const int i_pred = has_pred ? detail::column_index(records[0], "predicted_labels") : -1;
    const size_t ncols = records[0].fields.size();

    std::vector<PolicyDocument> docs;
    if (predicted) {
        predicted->reset();
        if (has_pred) predicted->emplace();
    }
    std::set<std::string> seen_ids;
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = origin + ":" + std::to_string(rec.line);
        if (rec.fields.size() != ncols)
            throw Error(where + ": expected " + std::to_string(ncols) + " fields, got " +
                        std::to_string(rec.fields.size()));

        PolicyDocument d;
        d.doc_id = rec.fields[i_id];
        if (d.doc_id.empty()) throw Error(where + ": empty doc_id");
        if (!seen_ids.insert(d.doc_id).second)
            throw Error(where + ": duplicate doc_id '" + d.doc_id + "'");

        d.country_iso3 = rec.fields[i_iso];
        if (!detail::valid_iso3(d.country_iso3))
            throw Error(where + ": invalid country code '" + d.country_iso3 +
                        "' (expected three uppercase letters)");

        auto y = try_parse_int(rec.fields[i_year]);
        if (!y) throw Error(where + ": year '" + rec.fields[i_year] + "' is not an integer");
        if (*y < 1900) throw Error(where + ": year " + std::to_string(*y) + " is before 1900");
        d.year = static_cast<int>(*y);

        d.summary_text = rec.fields[i_text];
        if (trim(d.summary_text).empty()) throw Error(where + ": empty summary_text");

        try {
            d.gold_labels = ThemeSet::parse(rec.fields[i_labels]);
            if (predicted && has_pred)
                (*predicted)->push_back(ThemeSet::parse(rec.fields[i_pred]));
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

inline std::string policy_corpus_to_csv(std::span<const PolicyDocument> docs) {
    std::string out = csv_row(kPolicyCorpusHeader);
    for (const auto& d : docs)
        out += csv_row({d.doc_id, d.country_iso3, std::to_string(d.year), d.summary_text,
                        d.gold_labels.to_cell()});
    return out;
}

inline void write_policy_corpus(const std::filesystem::path& path,
                                std::span<const PolicyDocument> docs) {
    write_text_file(path, policy_corpus_to_csv(docs));
}

/// Corpus rows plus the model's thresholded label sets.
inline std::string classified_corpus_to_csv(std::span<const PolicyDocument> docs,
                                            std::span<const ThemeSet> predicted) {
    if (docs.size() != predicted.size())
        throw Error("classified corpus: docs/predictions length mismatch");
    auto header = kPolicyCorpusHeader;
    header.push_back("predicted_labels");
    std::string out = csv_row(header);
    for (size_t i = 0; i < docs.size(); ++i)
        out += csv_row({docs[i].doc_id, docs[i].country_iso3, std::to_string(docs[i].year),
                        docs[i].summary_text, docs[i].gold_labels.to_cell(),
                        predicted[i].to_cell()});
    return out;
}

inline void write_classified_corpus(const std::filesystem::path& path,
                                    std::span<const PolicyDocument> docs,
                                    std::span<const ThemeSet> predicted) {
    write_text_file(path, classified_corpus_to_csv(docs, predicted));
}

inline const std::vector<std::string> kWdiHeader = {"country_iso3", "year", "indicator_code",
                                                    "value"};

/// Loads the long-format indicator table. Blank value cells are missing
/// data and produce no observation.
inline std::vector<IndicatorObservation> load_wdi_table(const std::filesystem::path& path) {
    auto records = read_csv_file(path);
    const std::string origin = path.filename().string();
    if (records.empty()) throw Error(origin + ": empty file (missing header)");
    detail::check_header(records[0], kWdiHeader, origin);
    const int i_iso = detail::column_index(records[0], "country_iso3");
    const int i_year = detail::column_index(records[0], "year");
    const int i_code = detail::column_index(records[0], "indicator_code");
    const int i_value = detail::column_index(records[0], "value");
    const size_t ncols = records[0].fields.size();

    std::vector<IndicatorObservation> obs;
    std::set<std::tuple<std::string, int, std::string>> seen;
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = origin + ":" + std::to_string(rec.line);
        if (rec.fields.size() != ncols)
            throw Error(where + ": expected " + std::to_string(ncols) + " fields, got " +
                        std::to_string(rec.fields.size()));

        IndicatorObservation o;
        o.country_iso3 = rec.fields[i_iso];
        if (!detail::valid_iso3(o.country_iso3))
            throw Error(where + ": invalid country code '" + o.country_iso3 + "'");
        auto y = try_parse_int(rec.fields[i_year]);
        if (!y) throw Error(where + ": year '" + rec.fields[i_year] + "' is not an integer");
        o.year = static_cast<int>(*y);
        o.indicator_code = rec.fields[i_code];
        if (o.indicator_code.empty()) throw Error(where + ": empty indicator_code");

        if (!seen.insert({o.country_iso3, o.year, o.indicator_code}).second)
            throw Error(where + ": duplicate observation key (" + o.country_iso3 + ", " +
                        std::to_string(o.year) + ", " + o.indicator_code + ")");

        if (trim(rec.fields[i_value]).empty()) continue;  // missing, not zero
        auto v = try_parse_double(rec.fields[i_value]);
        if (!v || !std::isfinite(*v))
            throw Error(where + ": value '" + rec.fields[i_value] + "' is not a finite number");
        o.value = *v;
        obs.push_back(std::move(o));
    }
    return obs;
}

inline void write_wdi_table(const std::filesystem::path& path,
                            std::span<const IndicatorObservation> obs) {
    std::string out = csv_row(kWdiHeader);
    for (const auto& o : obs)
        out += csv_row({o.country_iso3, std::to_string(o.year), o.indicator_code,
                        fmt_double(o.value)});
    write_text_file(path, out);
}

/// Applies the year filter and per-indicator transforms. Rows an indicator's
/// LOG transform cannot accept (value <= 0) are dropped and counted; nothing
/// is ever imputed. Input row count always equals output + drops.
inline HarmonizedPanel harmonize(std::span<const IndicatorObservation> obs,
                                 const HarmonizeConfig& config) {
    HarmonizedPanel panel;
    panel.min_year = config.min_year;
    for (const auto& o : obs) {
        auto it = config.transforms.find(o.indicator_code);
        if (it == config.transforms.end())
            throw Error("harmonize: no transform configured for indicator '" + o.indicator_code +
                        "'");
        panel.applied[o.indicator_code] = it->second;
        if (o.year < config.min_year) {
            panel.drops.by_indicator[o.indicator_code].year_filtered += 1;
            continue;
        }
        HarmonizedRow row{o.country_iso3, o.year, o.indicator_code, o.value};
        if (it->second == Transform::Log) {
            if (o.value <= 0.0) {
                panel.drops.by_indicator[o.indicator_code].nonpositive_log += 1;
                continue;
            }
            row.transformed_value = std::log(o.value);
        }
        panel.rows.push_back(std::move(row));
    }
    return panel;
}

/// Full outer join of policy counts and harmonized indicators on
/// (country, year). Theme counts are zero-filled only inside a country's
/// observed corpus span; everywhere else an absent count stays missing.
inline AnalysisPanel merge_policy_and_wdi(const ThemePanel& theme_panel,
                                          const HarmonizedPanel& hp) {
    struct Span {
        int lo, hi;
    };
    std::map<std::string, Span> corpus_span;
    for (const auto& cell : theme_panel.cells) {
        auto [it, fresh] = corpus_span.try_emplace(cell.country_iso3, Span{cell.year, cell.year});
        if (!fresh) {
            it->second.lo = std::min(it->second.lo, cell.year);
            it->second.hi = std::max(it->second.hi, cell.year);
        }
    }

    std::map<std::pair<std::string, int>, AnalysisRow> rows;
    for (const auto& cell : theme_panel.cells) {
        AnalysisRow& row = rows[{cell.country_iso3, cell.year}];
        row.country_iso3 = cell.country_iso3;
        row.year = cell.year;
        row.theme_counts = cell.counts;
    }
    for (const auto& hrow : hp.rows) {
        auto key = std::make_pair(hrow.country_iso3, hrow.year);
        auto [it, fresh] = rows.try_emplace(key);
        AnalysisRow& row = it->second;
        if (fresh) {
            row.country_iso3 = hrow.country_iso3;
            row.year = hrow.year;
            auto sp = corpus_span.find(hrow.country_iso3);
            if (sp != corpus_span.end() && hrow.year >= sp->second.lo && hrow.year <= sp->second.hi)
                row.theme_counts = std::array<int, kThemeCount>{};
        }
        row.indicators[hrow.indicator_code] = hrow.transformed_value;
    }

    AnalysisPanel out;
    out.rows.reserve(rows.size());
    for (auto& [key, row] : rows) out.rows.push_back(std::move(row));
    return out;
}

}
