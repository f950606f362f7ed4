#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/numfmt.hpp"
#include "policylens/themes.hpp"
#include "policylens/unicode.hpp"

namespace policylens::textclf {

/// Lowercased maximal runs of letters/digits, in order. Single-codepoint
/// tokens are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    size_t current_len = 0;  // codepoints, not bytes
    size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = uni::decode(text, i);
        if (uni::is_word(cp)) {
            uni::append_utf8(current, uni::to_lower(cp));
            ++current_len;
        } else if (!current.empty()) {
            if (current_len > 1) tokens.push_back(std::move(current));
            current.clear();
            current_len = 0;
        }
    }
    if (current_len > 1) tokens.push_back(std::move(current));
    return tokens;
}

struct Vocabulary {
    std::map<std::string, int> index;  // term -> dense index
    std::vector<std::string> terms;    // dense index -> term
    std::vector<long> df;
    std::vector<double> idf;
    long corpus_size = 0;

    size_t size() const { return terms.size(); }
};

/// Builds the vocabulary from tokenized documents: terms below min_df are
/// excluded, then at most max_terms survive (highest df first, ties by term).
/// Indices are assigned in term order so the mapping is reproducible.
inline Vocabulary fit_vocabulary(std::span<const std::vector<std::string>> docs, long min_df = 2,
                                 long max_terms = 20000) {
    if (docs.empty()) throw Error("fit_vocabulary: empty corpus");
    if (min_df < 1) throw Error("fit_vocabulary: min_df must be at least 1");
    if (max_terms < 1) throw Error("fit_vocabulary: max_terms must be at least 1");

    std::map<std::string, long> doc_freq;
    std::vector<std::string_view> seen;
    for (const auto& doc : docs) {
        seen.clear();
        for (const auto& t : doc) seen.push_back(t);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto t : seen) doc_freq[std::string(t)] += 1;
    }

    std::vector<std::pair<std::string, long>> kept;
    for (const auto& [term, df] : doc_freq)
        if (df >= min_df) kept.emplace_back(term, df);
    if (kept.empty()) throw Error("fit_vocabulary: no term meets min_df=" + std::to_string(min_df));

    if (static_cast<long>(kept.size()) > max_terms) {
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        kept.resize(max_terms);
        std::sort(kept.begin(), kept.end());
    }

    Vocabulary v;
    v.corpus_size = static_cast<long>(docs.size());
    v.terms.reserve(kept.size());
    for (const auto& [term, df] : kept) {
        int idx = static_cast<int>(v.terms.size());
        v.index.emplace(term, idx);
        v.terms.push_back(term);
        v.df.push_back(df);
        v.idf.push_back(std::log((1.0 + v.corpus_size) / (1.0 + df)) + 1.0);
    }
    return v;
}

/// L2-normalized tf-idf vector; dim carries the vocabulary size so heads can
/// validate inputs. All-OOV documents yield the (valid) zero vector.
struct SparseVector {
    int dim = 0;
    std::vector<std::pair<int, double>> entries;  // strictly increasing indices
};

inline SparseVector vectorize(std::span<const std::string> tokens, const Vocabulary& vocab) {
    std::map<int, double> tf;
    for (const auto& t : tokens) {
        auto it = vocab.index.find(t);
        if (it != vocab.index.end()) tf[it->second] += 1.0;
    }
    SparseVector v;
    v.dim = static_cast<int>(vocab.size());
    v.entries.reserve(tf.size());
    double norm_sq = 0.0;
    for (const auto& [idx, count] : tf) {
        double w = count * vocab.idf[idx];
        v.entries.emplace_back(idx, w);
        norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [idx, w] : v.entries) w *= inv;
    }
    return v;
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

struct TrainConfig {
    int epochs = 500;
    double lr = 0.5;
    double l2 = 1e-4;
    double tol = 1e-8;
};

struct Head {
    std::vector<double> w;
    double bias = 0.0;
    int epochs_run = 0;
    double final_loss = 0.0;
};

struct MultiLabelModel {
    Vocabulary vocab;
    std::array<Head, kThemeCount> heads;
    TrainConfig config;
};

struct HeadGradient {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

/// Mean binary cross-entropy plus (l2/2)·‖w‖², with its exact gradient.
/// The loss is evaluated in logit space so ln never sees 0.
inline HeadGradient loss_and_gradient(std::span<const double> w, double bias,
                                      std::span<const SparseVector> xs,
                                      std::span<const uint8_t> ys, double l2) {
    if (xs.size() != ys.size()) throw Error("loss_and_gradient: data/target length mismatch");
    HeadGradient out;
    out.grad_w.assign(w.size(), 0.0);
    const double n = static_cast<double>(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        double z = bias;
        for (const auto& [idx, val] : xs[i].entries) {
            if (idx < 0 || static_cast<size_t>(idx) >= w.size())
                throw Error("loss_and_gradient: vector index out of range");
            z += w[idx] * val;
        }
        const double y = ys[i] ? 1.0 : 0.0;
        out.loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
        const double delta = sigmoid(z) - y;
        for (const auto& [idx, val] : xs[i].entries) out.grad_w[idx] += delta * val;
        out.grad_b += delta;
    }
    out.loss /= n;
    out.grad_b /= n;
    double w_sq = 0.0;
    for (size_t k = 0; k < w.size(); ++k) {
        out.grad_w[k] = out.grad_w[k] / n + l2 * w[k];
        w_sq += w[k] * w[k];
    }
    out.loss += 0.5 * l2 * w_sq;
    return out;
}

struct TrainDiagnostics {
    std::array<std::vector<double>, kThemeCount> loss_trace;
    std::array<bool, kThemeCount> converged{};
};

/// One-vs-rest logistic heads trained by full-batch gradient descent from
/// zero initialization; deterministic by construction.
inline MultiLabelModel train(Vocabulary vocab, std::span<const SparseVector> xs,
                             std::span<const ThemeSet> golds, const TrainConfig& config = {},
                             TrainDiagnostics* diag = nullptr) {
    if (xs.size() != golds.size()) throw Error("train: vectors/labels length mismatch");
    if (config.epochs < 0) throw Error("train: epochs must be non-negative");

    MultiLabelModel model;
    model.config = config;
    const size_t dim = vocab.size();
    model.vocab = std::move(vocab);

    for (int k = 0; k < kThemeCount; ++k) {
        const Theme theme = static_cast<Theme>(k);
        std::vector<uint8_t> ys(xs.size());
        long positives = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            ys[i] = golds[i].contains(theme) ? 1 : 0;
            positives += ys[i];
        }
        if (config.epochs > 0) {
            if (positives == 0)
                throw Error(std::string("train: theme '") + kThemeNames[k] +
                            "' has no positive examples");
            if (positives == static_cast<long>(xs.size()))
                throw Error(std::string("train: theme '") + kThemeNames[k] +
                            "' has no negative examples");
        }

        Head head;
        head.w.assign(dim, 0.0);
        double prev_loss = std::numeric_limits<double>::infinity();
        for (int e = 0; e < config.epochs; ++e) {
            auto g = loss_and_gradient(head.w, head.bias, xs, ys, config.l2);
            if (!std::isfinite(g.loss))
                throw Error(std::string("train: non-finite loss on theme '") + kThemeNames[k] +
                            "' (learning rate too large)");
            if (diag) diag->loss_trace[k].push_back(g.loss);
            if (std::abs(prev_loss - g.loss) < config.tol) {
                if (diag) diag->converged[k] = true;
                break;
            }
            prev_loss = g.loss;
            for (size_t j = 0; j < dim; ++j) head.w[j] -= config.lr * g.grad_w[j];
            head.bias -= config.lr * g.grad_b;
            head.epochs_run = e + 1;
        }
        head.final_loss =
            xs.empty() ? 0.0 : loss_and_gradient(head.w, head.bias, xs, ys, config.l2).loss;
        model.heads[k] = std::move(head);
    }
    return model;
}

struct ThemeScores {
    std::array<double, kThemeCount> score{};
};

inline ThemeScores predict_scores(const MultiLabelModel& model, const SparseVector& v) {
    const int dim = static_cast<int>(model.vocab.size());
    if (v.dim != 0 && v.dim != dim)
        throw Error("predict_scores: vector dimension " + std::to_string(v.dim) +
                    " does not match model dimension " + std::to_string(dim));
    ThemeScores s;
    for (int k = 0; k < kThemeCount; ++k) {
        double z = model.heads[k].bias;
        for (const auto& [idx, val] : v.entries) {
            if (idx < 0 || idx >= dim)
                throw Error("predict_scores: vector index out of range for model");
            z += model.heads[k].w[idx] * val;
        }
        s.score[k] = sigmoid(z);
    }
    return s;
}

/// Inclusive cut: a theme is assigned when its score reaches the threshold.
inline ThemeSet predict_labels(const ThemeScores& scores, double threshold = 0.5) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw Error("predict_labels: threshold must lie in (0,1)");
    ThemeSet labels;
    for (int k = 0; k < kThemeCount; ++k)
        if (scores.score[k] >= threshold) labels.add(static_cast<Theme>(k));
    return labels;
}

inline constexpr std::string_view kModelHeader = "policylens-model v1";

inline std::string serialize_model(const MultiLabelModel& model) {
    std::string out;
    out += kModelHeader;
    out += '\n';
    out += "config " + std::to_string(model.config.epochs) + ' ' + fmt_double(model.config.lr) +
           ' ' + fmt_double(model.config.l2) + ' ' + fmt_double(model.config.tol) + '\n';
    out += "vocab " + std::to_string(model.vocab.size()) + ' ' +
           std::to_string(model.vocab.corpus_size) + '\n';
    for (size_t i = 0; i < model.vocab.size(); ++i)
        out += "term " + model.vocab.terms[i] + ' ' + std::to_string(i) + ' ' +
               fmt_double(model.vocab.idf[i]) + '\n';
    for (int k = 0; k < kThemeCount; ++k) {
        const Head& h = model.heads[k];
        out += "head " + std::to_string(k) + ' ' + fmt_double(h.bias) + ' ' +
               std::to_string(h.epochs_run) + ' ' + fmt_double(h.final_loss) + '\n';
        out += "weights";
        for (double w : h.w) {
            out += ' ';
            out += fmt_double(w);
        }
        out += '\n';
    }
    return out;
}

inline void save_model(const std::filesystem::path& path, const MultiLabelModel& model) {
    write_text_file(path, serialize_model(model));
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> parts;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) parts.push_back(line.substr(start, i - start));
    }
    return parts;
}

inline double parse_model_double(std::string_view s, const std::string& what) {
    auto v = try_parse_double(s);
    if (!v) throw Error("model file: bad " + what + " '" + std::string(s) + "'");
    return *v;
}

inline long parse_model_int(std::string_view s, const std::string& what) {
    auto v = try_parse_int(s);
    if (!v) throw Error("model file: bad " + what + " '" + std::string(s) + "'");
    return *v;
}

}  // namespace detail

inline MultiLabelModel parse_model(const std::string& text, const std::string& origin) {
    std::vector<std::string_view> lines;
    size_t pos = 0;
    while (pos <= text.size() && pos != std::string::npos && pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            lines.push_back(std::string_view(text).substr(pos));
            break;
        }
        lines.push_back(std::string_view(text).substr(pos, nl - pos));
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty() || lines[0].substr(0, 17) != "policylens-model ")
        throw Error(origin + ": not a policylens model file");
    if (lines[0] != kModelHeader)
        throw Error(origin + ": unsupported model version '" + std::string(lines[0]) +
                    "' (expected '" + std::string(kModelHeader) + "')");

    MultiLabelModel model;
    size_t li = 1;
    auto next = [&]() -> std::vector<std::string_view> {
        if (li >= lines.size()) throw Error("model file: truncated");
        return detail::split_ws(lines[li++]);
    };

    auto cfg = next();
    if (cfg.size() != 5 || cfg[0] != "config") throw Error("model file: expected config line");
    model.config.epochs = static_cast<int>(detail::parse_model_int(cfg[1], "epochs"));
    model.config.lr = detail::parse_model_double(cfg[2], "lr");
    model.config.l2 = detail::parse_model_double(cfg[3], "l2");
    model.config.tol = detail::parse_model_double(cfg[4], "tol");

    auto voc = next();
    if (voc.size() != 3 || voc[0] != "vocab") throw Error("model file: expected vocab line");
    const long vsize = detail::parse_model_int(voc[1], "vocabulary size");
    model.vocab.corpus_size = detail::parse_model_int(voc[2], "corpus size");
    for (long i = 0; i < vsize; ++i) {
        auto t = next();
        if (t.size() != 4 || t[0] != "term") throw Error("model file: expected term line");
        if (detail::parse_model_int(t[2], "term index") != i)
            throw Error("model file: term indices must be dense and ordered");
        std::string term(t[1]);
        model.vocab.index.emplace(term, static_cast<int>(i));
        model.vocab.terms.push_back(std::move(term));
        model.vocab.df.push_back(0);  // df is a fit-time statistic; not persisted
        model.vocab.idf.push_back(detail::parse_model_double(t[3], "idf"));
    }
    for (int k = 0; k < kThemeCount; ++k) {
        auto h = next();
        if (h.size() != 5 || h[0] != "head" || detail::parse_model_int(h[1], "head index") != k)
            throw Error("model file: expected head " + std::to_string(k));
        Head& head = model.heads[k];
        head.bias = detail::parse_model_double(h[2], "bias");
        head.epochs_run = static_cast<int>(detail::parse_model_int(h[3], "epochs"));
        head.final_loss = detail::parse_model_double(h[4], "loss");
        auto w = next();
        if (w.empty() || w[0] != "weights") throw Error("model file: expected weights line");
        if (static_cast<long>(w.size()) != vsize + 1)
            throw Error("model file: head " + std::to_string(k) + " has " +
                        std::to_string(w.size() - 1) + " weights, expected " +
                        std::to_string(vsize));
        head.w.reserve(vsize);
        for (long j = 1; j <= vsize; ++j)
            head.w.push_back(detail::parse_model_double(w[j], "weight"));
    }
    return model;
}

inline MultiLabelModel load_model(const std::filesystem::path& path) {
    return parse_model(read_text_file(path), path.filename().string());
}

struct SplitIndices {
    std::vector<size_t> train;
    std::vector<size_t> test;
};

/// Deterministic stratified split: documents grouped by exact label set,
/// each group shuffled by a seeded Fisher-Yates, the rounded test share
/// peeled off. std::shuffle is avoided because its output is
/// implementation-defined even for a fixed engine.
inline SplitIndices stratified_split(std::span<const ThemeSet> golds, double test_fraction,
                                     uint32_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw Error("stratified_split: test fraction must lie in [0,1)");
    std::map<uint8_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < golds.size(); ++i) groups[golds[i].bits()].push_back(i);

    std::mt19937 gen(seed);
    SplitIndices out;
    for (auto& [bits, members] : groups) {
        for (size_t i = members.size(); i > 1; --i) {
            size_t j = gen() % i;
            std::swap(members[i - 1], members[j]);
        }
        auto n_test = static_cast<size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        for (size_t i = 0; i < members.size(); ++i)
            (i < n_test ? out.test : out.train).push_back(members[i]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}
