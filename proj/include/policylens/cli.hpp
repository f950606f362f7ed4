#pragma once

#include <sys/types.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "policylens/ca.hpp"
#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/indicators.hpp"
#include "policylens/ingest.hpp"
#include "policylens/manifest.hpp"
#include "policylens/metrics.hpp"
#include "policylens/panel.hpp"
#include "policylens/report.hpp"
#include "policylens/sha256.hpp"
#include "policylens/textclf.hpp"
#include "policylens/themes.hpp"
#include "policylens/version.hpp"

namespace policylens::cli {

namespace fs = std::filesystem;

/// Collects outputs in a temp directory and renames them into --out-dir only
/// after the whole command has succeeded, manifest last. A failed run leaves
/// the output directory untouched.
class OutputStager {
  public:
    OutputStager(fs::path out_dir, std::string subcommand) : out_dir_(std::move(out_dir)) {
        manifest_.subcommand = std::move(subcommand);
        static std::atomic<int> counter{0};
        fs::path parent = out_dir_.parent_path();
        if (parent.empty()) parent = ".";
        tmp_ = parent / (out_dir_.filename().string() + ".tmp-" + std::to_string(::getpid()) +
                         "-" + std::to_string(counter.fetch_add(1)));
        fs::create_directories(tmp_);
    }

    OutputStager(const OutputStager&) = delete;
    OutputStager& operator=(const OutputStager&) = delete;

    ~OutputStager() {
        if (!committed_) {
            std::error_code ignore;
            fs::remove_all(tmp_, ignore);
        }
    }

    void add_input(const fs::path& path) {
        manifest_.inputs[path.string()] = sha256_file(path);
    }

    void set_config_digest(const fs::path& path) { manifest_.config_digest = sha256_file(path); }

    /// An artifact destined for <out-dir>/<name>.
    void write(const std::string& name, const std::string& content) {
        stage(name, out_dir_ / name, content);
        manifest_.outputs[name] = sha256_hex(content);
    }

    /// An artifact destined for an explicit path outside the usual layout.
    void write_path(const fs::path& dest, const std::string& content) {
        stage("ext-" + std::to_string(staged_.size()) + "-" + dest.filename().string(), dest,
              content);
        manifest_.outputs[dest.string()] = sha256_hex(content);
    }

    const manifest::RunManifest& current() const { return manifest_; }

    void commit() {
        manifest_.timestamp = manifest::utc_now();
        const std::string mf = manifest::to_json(manifest_);
        stage("manifest.json", out_dir_ / "manifest.json", mf);
        fs::create_directories(out_dir_);
        for (const auto& [staged, dest] : staged_) {
            if (!dest.parent_path().empty()) fs::create_directories(dest.parent_path());
            fs::rename(staged, dest);
        }
        std::error_code ignore;
        fs::remove_all(tmp_, ignore);
        committed_ = true;
    }

  private:
    void stage(const std::string& tmp_name, const fs::path& dest, const std::string& content) {
        const fs::path staged = tmp_ / tmp_name;
        write_text_file(staged, content);
        staged_.emplace_back(staged, dest);
    }

    fs::path out_dir_;
    fs::path tmp_;
    std::vector<std::pair<fs::path, fs::path>> staged_;
    manifest::RunManifest manifest_;
    bool committed_ = false;
};

struct GlobalOptions {
    std::string config;
    std::string out_dir = "out";
    bool quiet = false;
};

struct LoadedCorpus {
    std::vector<ingest::PolicyDocument> docs;
    std::optional<std::vector<ThemeSet>> predicted;
};

inline LoadedCorpus load_corpus(const fs::path& path) {
    LoadedCorpus c;
    c.docs = ingest::load_policy_corpus(path, &c.predicted);
    return c;
}

/// Predicted labels when the file carries them, gold labels otherwise.
inline std::vector<ThemeSet> analysis_labels(const LoadedCorpus& corpus) {
    if (corpus.predicted) return *corpus.predicted;
    std::vector<ThemeSet> labels;
    labels.reserve(corpus.docs.size());
    for (const auto& d : corpus.docs) labels.push_back(d.gold_labels);
    return labels;
}

inline ingest::HarmonizeConfig load_harmonize_config(const GlobalOptions& g,
                                                     OutputStager* stager = nullptr) {
    if (g.config.empty()) return ingest::HarmonizeConfig::defaults();
    if (stager) stager->set_config_digest(g.config);
    return ingest::HarmonizeConfig::load(g.config);
}

struct Predictions {
    std::vector<textclf::ThemeScores> scores;
    std::vector<ThemeSet> labels;
};

inline Predictions predict_corpus(const textclf::MultiLabelModel& model,
                                  std::span<const ingest::PolicyDocument> docs,
                                  double threshold = 0.5) {
    Predictions p;
    p.scores.reserve(docs.size());
    p.labels.reserve(docs.size());
    for (const auto& d : docs) {
        auto vec = textclf::vectorize(textclf::tokenize(d.summary_text), model.vocab);
        auto s = textclf::predict_scores(model, vec);
        p.labels.push_back(textclf::predict_labels(s, threshold));
        p.scores.push_back(s);
    }
    return p;
}

struct TrainSettings {
    long min_df = 2;
    long max_terms = 20000;
    textclf::TrainConfig config;
};

inline textclf::MultiLabelModel train_on_documents(
    std::span<const ingest::PolicyDocument> docs, const TrainSettings& settings) {
    std::vector<std::vector<std::string>> tokens;
    tokens.reserve(docs.size());
    for (const auto& d : docs) tokens.push_back(textclf::tokenize(d.summary_text));
    auto vocab = textclf::fit_vocabulary(tokens, settings.min_df, settings.max_terms);
    std::vector<textclf::SparseVector> vecs;
    vecs.reserve(docs.size());
    for (const auto& t : tokens) vecs.push_back(textclf::vectorize(t, vocab));
    std::vector<ThemeSet> golds;
    golds.reserve(docs.size());
    for (const auto& d : docs) golds.push_back(d.gold_labels);
    return textclf::train(std::move(vocab), vecs, golds, settings.config);
}

/// Evaluation artifacts for a prediction set: the report pair always, the PR
/// pair only when scores are available (themes without gold positives have no
/// defined curve and are skipped).
struct EvalArtifacts {
    metrics::ReportTable table;
    std::string report_csv;
    std::string report_txt;
    std::optional<std::string> pr_svg;
    std::optional<std::string> pr_csv;
};

inline EvalArtifacts evaluate_predictions(std::span<const ThemeSet> preds,
                                          std::span<const ThemeSet> golds,
                                          std::span<const textclf::ThemeScores> scores = {}) {
    EvalArtifacts art;
    auto counts = metrics::confusion_counts(preds, golds);
    art.table = metrics::classification_report(counts, preds, golds);
    art.report_csv = metrics::report_to_csv(art.table);
    art.report_txt = metrics::report_to_text(art.table);

    if (!scores.empty()) {
        std::vector<report::NamedCurve> curves;
        for (int k = 0; k < kThemeCount; ++k) {
            std::vector<double> s(golds.size());
            std::vector<uint8_t> y(golds.size());
            long positives = 0;
            for (size_t i = 0; i < golds.size(); ++i) {
                s[i] = scores[i].score[k];
                y[i] = golds[i].contains(static_cast<Theme>(k)) ? 1 : 0;
                positives += y[i];
            }
            if (positives == 0) continue;
            curves.push_back({kThemeNames[k], metrics::pr_curve(s, y)});
        }
        if (!curves.empty()) {
            art.pr_svg = report::render_pr_curves(curves);
            art.pr_csv = report::pr_points_to_csv(curves);
        }
    }
    return art;
}

struct IndicatorArtifacts {
    ThemePanel panel;
    indicators::StandardizedPanel standardized;
    std::array<std::vector<indicators::RankedCountry>, kThemeCount> rankings;
    std::string counts_csv;
    std::string rankings_csv;
    std::string box_svg;
};

inline IndicatorArtifacts build_indicator_artifacts(std::span<const ingest::PolicyDocument> docs,
                                                    std::span<const ThemeSet> labels, int top_k) {
    IndicatorArtifacts art;
    art.panel = indicators::theme_counts(docs, labels);
    art.standardized = indicators::standardize(art.panel);
    art.counts_csv = indicators::theme_counts_to_csv(art.standardized);

    std::vector<report::BoxFacet> facets;
    for (int k = 0; k < kThemeCount; ++k) {
        const Theme theme = static_cast<Theme>(k);
        art.rankings[k] = indicators::top_countries(art.standardized, theme, top_k);
        report::BoxFacet facet;
        facet.theme = kThemeNames[k];
        for (const auto& rc : art.rankings[k]) {
            std::vector<double> zs;
            zs.reserve(rc.years.size());
            for (const auto& [year, z] : rc.years) zs.push_back(z);
            facet.rows.push_back({rc.country_iso3, indicators::box_stats(zs)});
        }
        facets.push_back(std::move(facet));
    }
    art.rankings_csv = indicators::rankings_to_csv(art.rankings);
    art.box_svg = report::render_boxplots(facets);
    return art;
}

struct CaArtifacts {
    ca::CAResult result;
    std::vector<std::string> warnings;
    std::string coords_csv;
    std::string summary_csv;
    std::string biplot_svg;
};

inline CaArtifacts build_ca_artifacts(const ThemePanel& panel, int top_n) {
    CaArtifacts art;
    auto table = ca::contingency_from_panel(panel, top_n);
    art.warnings = table.warnings;
    art.result = ca::correspondence_analysis(table);
    art.coords_csv = ca::coords_to_csv(art.result);
    art.summary_csv = ca::summary_to_csv(art.result);
    art.biplot_svg = report::render_biplot(art.result);
    return art;
}

struct PanelArtifacts {
    panel::BatteryResult battery;
    std::string regressions_csv;
    std::string coef_svg;
};

inline PanelArtifacts build_panel_artifacts(const ingest::AnalysisPanel& merged,
                                            std::span<const std::string> outcomes,
                                            bool standardize_regressors) {
    PanelArtifacts art;
    panel::RegressionSpec base;
    base.standardize_regressors = standardize_regressors;
    art.battery = panel::run_regression_battery(merged, outcomes, base);
    art.regressions_csv = panel::battery_to_csv(art.battery);
    art.coef_svg = report::render_coef_plot(art.battery);
    return art;
}

inline std::vector<std::string> config_outcomes(const ingest::HarmonizeConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& [code, transform] : cfg.transforms) out.push_back(code);
    return out;
}

namespace detail {

template <typename F>
auto pipeline_stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(std::string("pipeline stage '") + name + "': " + e.what());
    }
}

inline std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        std::string item(trim(std::string_view(s).substr(pos, comma - pos)));
        if (!item.empty()) out.push_back(std::move(item));
        pos = comma + 1;
        if (comma == s.size()) break;
    }
    return out;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"policylens: theme indicators and panel statistics from policy text"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config, "harmonization config file")
        ->envname("POLICYLENS_CONFIG");
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    struct TrainOpts {
        std::string corpus;
        std::string model_out;
        TrainSettings settings;
        double split = 0.2;
        unsigned seed = 42;
    } topt;
    auto* cmd_train = app.add_subcommand("train", "fit the theme classifier");
    cmd_train->add_option("--corpus", topt.corpus, "labeled policies.csv")->required();
    cmd_train->add_option("--model-out", topt.model_out, "model file path");
    cmd_train->add_option("--min-df", topt.settings.min_df)->capture_default_str();
    cmd_train->add_option("--max-terms", topt.settings.max_terms)->capture_default_str();
    cmd_train->add_option("--epochs", topt.settings.config.epochs)->capture_default_str();
    cmd_train->add_option("--lr", topt.settings.config.lr)->capture_default_str();
    cmd_train->add_option("--l2", topt.settings.config.l2)->capture_default_str();
    cmd_train->add_option("--split", topt.split, "held-out fraction")->capture_default_str();
    cmd_train->add_option("--seed", topt.seed, "split shuffle seed")->capture_default_str();

    struct ClassifyOpts {
        std::string corpus;
        std::string model;
        std::string out_file;
    } copt;
    auto* cmd_classify = app.add_subcommand("classify", "label a corpus with a trained model");
    cmd_classify->add_option("--corpus", copt.corpus)->required();
    cmd_classify->add_option("--model", copt.model)->required();
    cmd_classify->add_option("--out", copt.out_file, "output CSV path");

    struct EvaluateOpts {
        std::string corpus;
        std::string model;
    } eopt;
    auto* cmd_evaluate =
        app.add_subcommand("evaluate", "score predictions against gold labels");
    cmd_evaluate->add_option("--corpus", eopt.corpus, "classified corpus with gold labels")
        ->required();
    cmd_evaluate->add_option("--model", eopt.model,
                             "model to produce predictions when the file has none");

    struct IndicatorOpts {
        std::string corpus;
        int top = 10;
    } iopt;
    auto* cmd_indicators =
        app.add_subcommand("indicators", "country-year theme counts, rankings, boxplots");
    cmd_indicators->add_option("--corpus", iopt.corpus)->required();
    cmd_indicators->add_option("--top", iopt.top, "countries per ranking")->capture_default_str();

    struct CaOpts {
        std::string corpus;
        int top_n = 50;
    } caopt;
    auto* cmd_ca = app.add_subcommand("ca", "correspondence analysis of countries and themes");
    cmd_ca->add_option("--corpus", caopt.corpus)->required();
    cmd_ca->add_option("--top-n", caopt.top_n, "countries by total count")->capture_default_str();

    struct PanelOpts {
        std::string corpus;
        std::string wdi;
        std::string outcomes;
        bool standardize = false;
    } popt;
    auto* cmd_panel = app.add_subcommand("panel", "two-way fixed-effects regression battery");
    cmd_panel->add_option("--corpus", popt.corpus)->required();
    cmd_panel->add_option("--wdi", popt.wdi)->required();
    cmd_panel->add_option("--outcomes", popt.outcomes,
                          "comma-separated indicator codes (default: all configured)");
    cmd_panel->add_flag("--standardize-regressors", popt.standardize,
                        "z-score the theme counts before fitting");

    struct PipelineOpts {
        std::string policies;
        std::string wdi;
        int top = 10;
        int top_n = 50;
    } plopt;
    auto* cmd_pipeline = app.add_subcommand("pipeline", "run every stage end to end");
    cmd_pipeline->add_option("--policies", plopt.policies)->required();
    cmd_pipeline->add_option("--wdi", plopt.wdi)->required();
    cmd_pipeline->add_option("--top", plopt.top, "countries per ranking")->capture_default_str();
    cmd_pipeline->add_option("--top-n", plopt.top_n, "countries in the CA table")
        ->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    auto info = [&](const std::string& line) {
        if (!g.quiet) out << line << "\n";
    };

    try {
        if (app.got_subcommand(cmd_train)) {
            auto corpus = load_corpus(topt.corpus);
            std::vector<ingest::PolicyDocument> labeled;
            for (auto& d : corpus.docs)
                if (!d.gold_labels.empty()) labeled.push_back(d);
            if (labeled.empty()) throw Error("train: corpus has no labeled documents");

            std::vector<ThemeSet> golds;
            golds.reserve(labeled.size());
            for (const auto& d : labeled) golds.push_back(d.gold_labels);
            auto split = textclf::stratified_split(golds, topt.split, topt.seed);

            std::vector<ingest::PolicyDocument> train_docs, eval_docs;
            for (size_t i : split.train) train_docs.push_back(labeled[i]);
            for (size_t i : split.test) eval_docs.push_back(labeled[i]);
            const bool eval_on_train = eval_docs.empty();
            if (eval_on_train) eval_docs = train_docs;

            auto model = train_on_documents(train_docs, topt.settings);
            auto preds = predict_corpus(model, eval_docs);
            std::vector<ThemeSet> eval_golds;
            eval_golds.reserve(eval_docs.size());
            for (const auto& d : eval_docs) eval_golds.push_back(d.gold_labels);
            auto eval = evaluate_predictions(preds.labels, eval_golds, preds.scores);

            OutputStager stager(g.out_dir, "train");
            stager.add_input(topt.corpus);
            if (topt.model_out.empty())
                stager.write("model.policylens", textclf::serialize_model(model));
            else
                stager.write_path(topt.model_out, textclf::serialize_model(model));
            stager.write("report.csv", eval.report_csv);
            stager.write("report.txt", eval.report_txt);
            if (eval.pr_svg) stager.write("pr_curves.svg", *eval.pr_svg);
            if (eval.pr_csv) stager.write("pr_points.csv", *eval.pr_csv);
            stager.commit();

            info("trained on " + std::to_string(train_docs.size()) + " documents, evaluated on " +
                 std::to_string(eval_docs.size()) +
                 (eval_on_train ? " (no held-out split; evaluated on the training part)" : ""));
            if (!g.quiet) out << eval.report_txt;
            return 0;
        }

        if (app.got_subcommand(cmd_classify)) {
            auto corpus = load_corpus(copt.corpus);
            auto model = textclf::load_model(copt.model);
            auto preds = predict_corpus(model, corpus.docs);
            const std::string csv = ingest::classified_corpus_to_csv(corpus.docs, preds.labels);

            OutputStager stager(g.out_dir, "classify");
            stager.add_input(copt.corpus);
            stager.add_input(copt.model);
            if (copt.out_file.empty())
                stager.write("classified.csv", csv);
            else
                stager.write_path(copt.out_file, csv);
            stager.commit();
            info("classified " + std::to_string(corpus.docs.size()) + " documents");
            return 0;
        }

        if (app.got_subcommand(cmd_evaluate)) {
            auto corpus = load_corpus(eopt.corpus);
            std::vector<ThemeSet> golds;
            golds.reserve(corpus.docs.size());
            for (const auto& d : corpus.docs) golds.push_back(d.gold_labels);

            EvalArtifacts eval;
            OutputStager stager(g.out_dir, "evaluate");
            stager.add_input(eopt.corpus);
            if (!eopt.model.empty()) {
                auto model = textclf::load_model(eopt.model);
                stager.add_input(eopt.model);
                auto preds = predict_corpus(model, corpus.docs);
                eval = evaluate_predictions(preds.labels, golds, preds.scores);
            } else if (corpus.predicted) {
                eval = evaluate_predictions(*corpus.predicted, golds);
            } else {
                throw Error(
                    "evaluate: corpus has no predicted_labels column and no --model was given");
            }
            stager.write("report.csv", eval.report_csv);
            stager.write("report.txt", eval.report_txt);
            if (eval.pr_svg) stager.write("pr_curves.svg", *eval.pr_svg);
            if (eval.pr_csv) stager.write("pr_points.csv", *eval.pr_csv);
            stager.commit();
            if (!g.quiet) out << eval.report_txt;
            return 0;
        }

        if (app.got_subcommand(cmd_indicators)) {
            auto corpus = load_corpus(iopt.corpus);
            auto labels = analysis_labels(corpus);
            auto art = build_indicator_artifacts(corpus.docs, labels, iopt.top);

            OutputStager stager(g.out_dir, "indicators");
            stager.add_input(iopt.corpus);
            stager.write("theme_counts.csv", art.counts_csv);
            stager.write("rankings.csv", art.rankings_csv);
            stager.write("boxplots.svg", art.box_svg);
            stager.commit();
            info("theme counts for " + std::to_string(art.panel.cells.size()) +
                 " country-years");
            return 0;
        }

        if (app.got_subcommand(cmd_ca)) {
            auto corpus = load_corpus(caopt.corpus);
            auto labels = analysis_labels(corpus);
            auto panel_counts = indicators::theme_counts(corpus.docs, labels);
            auto art = build_ca_artifacts(panel_counts, caopt.top_n);

            OutputStager stager(g.out_dir, "ca");
            stager.add_input(caopt.corpus);
            stager.write("ca_coords.csv", art.coords_csv);
            stager.write("ca_summary.csv", art.summary_csv);
            stager.write("biplot.svg", art.biplot_svg);
            stager.commit();
            for (const auto& w : art.warnings) err << "warning: " << w << "\n";
            info("correspondence analysis over " + std::to_string(art.result.row_labels.size()) +
                 " countries, " + std::to_string(art.result.singular_values.size()) +
                 " dimensions");
            return 0;
        }

        if (app.got_subcommand(cmd_panel)) {
            OutputStager stager(g.out_dir, "panel");
            auto cfg = load_harmonize_config(g, &stager);
            auto corpus = load_corpus(popt.corpus);
            auto labels = analysis_labels(corpus);
            auto theme_panel = indicators::theme_counts(corpus.docs, labels);
            auto wdi = ingest::load_wdi_table(popt.wdi);
            auto harmonized = ingest::harmonize(wdi, cfg);
            auto merged = ingest::merge_policy_and_wdi(theme_panel, harmonized);

            auto outcomes =
                popt.outcomes.empty() ? config_outcomes(cfg) : detail::split_commas(popt.outcomes);
            auto art = build_panel_artifacts(merged, outcomes, popt.standardize);

            stager.add_input(popt.corpus);
            stager.add_input(popt.wdi);
            stager.write("regressions.csv", art.regressions_csv);
            stager.write("coef_plot.svg", art.coef_svg);
            stager.commit();
            for (const auto& f : art.battery.failures)
                err << "warning: outcome '" << f.outcome << "' failed: " << f.message << "\n";
            info(std::to_string(art.battery.results.size()) + " regressions fitted, " +
                 std::to_string(art.battery.failures.size()) + " failed");
            return 0;
        }

        if (app.got_subcommand(cmd_pipeline)) {
            OutputStager stager(g.out_dir, "pipeline");
            stager.add_input(plopt.policies);
            stager.add_input(plopt.wdi);
            auto cfg = load_harmonize_config(g, &stager);

            auto [docs, preds] = detail::pipeline_stage("classify", [&] {
                auto corpus = load_corpus(plopt.policies);
                std::vector<ingest::PolicyDocument> labeled;
                for (auto& d : corpus.docs)
                    if (!d.gold_labels.empty()) labeled.push_back(d);
                if (labeled.empty()) throw Error("corpus has no labeled documents");
                auto model = train_on_documents(labeled, TrainSettings{});
                auto p = predict_corpus(model, corpus.docs);
                return std::make_pair(std::move(corpus.docs), std::move(p.labels));
            });
            stager.write("classified.csv", ingest::classified_corpus_to_csv(docs, preds));
            info("stage classify: " + std::to_string(docs.size()) + " documents");

            auto ind = detail::pipeline_stage(
                "theme_counts", [&] { return build_indicator_artifacts(docs, preds, plopt.top); });
            stager.write("theme_counts.csv", ind.counts_csv);

            auto harmonized = detail::pipeline_stage("harmonize", [&] {
                auto wdi = ingest::load_wdi_table(plopt.wdi);
                return ingest::harmonize(wdi, cfg);
            });
            long dropped = harmonized.drops.total();
            info("stage harmonize: " + std::to_string(harmonized.rows.size()) +
                 " observations kept, " + std::to_string(dropped) + " dropped");

            auto merged = detail::pipeline_stage(
                "merge", [&] { return ingest::merge_policy_and_wdi(ind.panel, harmonized); });

            detail::pipeline_stage("indicators", [&] {
                stager.write("rankings.csv", ind.rankings_csv);
                stager.write("boxplots.svg", ind.box_svg);
                return 0;
            });

            auto ca_art =
                detail::pipeline_stage("ca", [&] { return build_ca_artifacts(ind.panel, plopt.top_n); });
            stager.write("ca_coords.csv", ca_art.coords_csv);
            stager.write("ca_summary.csv", ca_art.summary_csv);
            stager.write("biplot.svg", ca_art.biplot_svg);
            for (const auto& w : ca_art.warnings) err << "warning: " << w << "\n";
            info("stage ca: " + std::to_string(ca_art.result.singular_values.size()) +
                 " dimensions");

            auto panel_art = detail::pipeline_stage("panel", [&] {
                auto outcomes = config_outcomes(cfg);
                return build_panel_artifacts(merged, outcomes, false);
            });
            stager.write("regressions.csv", panel_art.regressions_csv);
            stager.write("coef_plot.svg", panel_art.coef_svg);
            for (const auto& f : panel_art.battery.failures)
                err << "warning: outcome '" << f.outcome << "' failed: " << f.message << "\n";
            info("stage panel: " + std::to_string(panel_art.battery.results.size()) +
                 " regressions fitted");

            stager.commit();
            info("pipeline complete: " + std::to_string(stager.current().outputs.size()) +
                 " artifacts in " + g.out_dir);
            return 0;
        }
    } catch (const Error& e) {
        err << "policylens: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "policylens: error: " << e.what() << "\n";
        return 1;
    }
    err << "policylens: no subcommand\n";
    return 1;
}

}
