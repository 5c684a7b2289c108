#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "eerpd/corpus.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/labels.hpp"
#include "eerpd/library.hpp"
#include "eerpd/predict.hpp"
#include "eerpd/util.hpp"

namespace eerpd {

struct DimensionMetrics {
    std::string code;
    double accuracy = 0.0;
    double macro_f1 = 0.0;   // unweighted mean of the two class F1 values
    double f1_positive = 0.0;
    double f1_negative = 0.0;
    // Confusion counts with the scheme's positive letter as the positive class.
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Binary accuracy and two-class macro-F1 for one personality dimension.
/// A class that never occurs in gold or prediction contributes F1 = 0.
inline DimensionMetrics dimension_metrics(const std::vector<bool>& gold,
                                          const std::vector<bool>& pred,
                                          std::string code = "") {
    if (gold.size() != pred.size()) throw Error("dimension_metrics: length mismatch");
    if (gold.empty()) throw Error("dimension_metrics: empty input");
    DimensionMetrics m;
    m.code = std::move(code);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] && pred[i]) ++m.tp;
        else if (!gold[i] && pred[i]) ++m.fp;
        else if (gold[i] && !pred[i]) ++m.fn;
        else ++m.tn;
    }
    auto f1 = [](long long tp, long long fp, long long fn) {
        long long denom = 2 * tp + fp + fn;
        return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    };
    m.f1_positive = f1(m.tp, m.fp, m.fn);
    m.f1_negative = f1(m.tn, m.fn, m.fp);  // swap roles: negatives are that class's hits
    m.macro_f1 = (m.f1_positive + m.f1_negative) / 2.0;
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(gold.size());
    return m;
}

struct HitLog {
    std::string entry_id;
    double distance = 0.0;
    std::string label;  // exemplar's canonical label string
};

struct DocLog {
    std::string doc_id;
    std::string gold;
    std::string predicted;
    bool failed = false;
    std::string failure_reason;
    std::vector<HitLog> hits;
};

struct EvalReport {
    std::string scheme;
    std::size_t n_documents = 0;
    std::size_t failures = 0;
    std::vector<DimensionMetrics> dimensions;
    double avg_accuracy = 0.0;
    double avg_macro_f1 = 0.0;
    std::vector<DocLog> documents;
};

namespace detail {

inline EvalReport score_predictions(Scheme scheme, const std::vector<Document>& docs,
                                    const std::vector<Prediction>& preds,
                                    const ReferenceLibrary& lib) {
    EvalReport report;
    report.scheme = scheme_name(scheme);
    report.n_documents = docs.size();

    const auto& dims = scheme_dimensions(scheme);
    std::vector<std::vector<bool>> gold(dims.size()), pred(dims.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const DimensionLabels& g = *docs[i].label;
        // A failed prediction is scored as wrong on every dimension.
        DimensionLabels p = preds[i].failed ? g.complement() : preds[i].label;
        for (std::size_t d = 0; d < dims.size(); ++d) {
            gold[d].push_back(g.bits[d]);
            pred[d].push_back(p.bits[d]);
        }

        DocLog log;
        log.doc_id = docs[i].id;
        log.gold = g.to_string();
        log.predicted = preds[i].failed ? "" : p.to_string();
        log.failed = preds[i].failed;
        log.failure_reason = preds[i].failure_reason;
        for (const RetrievalHit& h : preds[i].hits) {
            const ReferenceEntry* entry = lib.find(h.entry_id);
            log.hits.push_back(HitLog{h.entry_id, h.distance,
                                      entry ? entry->label.to_string() : ""});
        }
        report.documents.push_back(std::move(log));
        if (preds[i].failed) ++report.failures;
    }

    for (std::size_t d = 0; d < dims.size(); ++d)
        report.dimensions.push_back(dimension_metrics(gold[d], pred[d], dims[d].code));
    for (const auto& m : report.dimensions) {
        report.avg_accuracy += m.accuracy;
        report.avg_macro_f1 += m.macro_f1;
    }
    report.avg_accuracy /= static_cast<double>(report.dimensions.size());
    report.avg_macro_f1 /= static_cast<double>(report.dimensions.size());
    return report;
}

}  // namespace detail

/// Predicts every document and aggregates per-dimension metrics. Individual
/// failures are counted and scored against the run; more than half failing
/// marks the run itself broken.
inline EvalReport evaluate(const std::vector<Document>& docs, const ReferenceLibrary& lib,
                           CachedChat& chat, CachedEmbed& embed, const PredictOptions& opt,
                           std::size_t concurrency = 1) {
    if (docs.empty()) throw Error("evaluate: no documents");
    for (const auto& d : docs)
        if (!d.label) throw Error("evaluate: document " + d.id + " has no gold label");

    std::vector<Prediction> preds(docs.size());
    parallel_for(docs.size(), concurrency,
                 [&](std::size_t i) { preds[i] = predict_document(docs[i], lib, chat, embed, opt); });

    EvalReport report = detail::score_predictions(lib.scheme, docs, preds, lib);
    if (report.failures * 2 > report.n_documents)
        throw Error("evaluation failed: " + std::to_string(report.failures) + " of " +
                    std::to_string(report.n_documents) + " predictions failed");
    return report;
}

/// One evaluation per alpha. The response and embedding caches make the
/// per-document categorization and channel vectors free after the first
/// pass, so each alpha only redoes mixing, retrieval, and prediction.
inline std::vector<std::pair<double, EvalReport>> ablation_alpha_sweep(
    const std::vector<Document>& docs, const ReferenceLibrary& lib, CachedChat& chat,
    CachedEmbed& embed, PredictOptions opt, const std::vector<double>& alphas,
    std::size_t concurrency = 1) {
    std::vector<std::pair<double, EvalReport>> out;
    for (double alpha : alphas) {
        if (alpha < 0.0 || alpha > 1.0) throw Error("sweep alpha must be in [0, 1]");
        opt.alpha = alpha;
        out.emplace_back(alpha, evaluate(docs, lib, chat, embed, opt, concurrency));
    }
    return out;
}

/// Same run with exemplar reasoning chains stripped from the prompt.
inline EvalReport ablation_no_cot(const std::vector<Document>& docs, const ReferenceLibrary& lib,
                                  CachedChat& chat, CachedEmbed& embed, PredictOptions opt,
                                  std::size_t concurrency = 1) {
    opt.include_cot = false;
    return evaluate(docs, lib, chat, embed, opt, concurrency);
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

/// Welch's unequal-variance t-test, two-sided. Identical constant samples
/// give (t=0, p=1); zero variance with different means gives (inf, p=0).
inline TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw Error("welch_t_test needs at least 2 observations per sample");
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto sample_var = [](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = mean(a), mb = mean(b);
    double va = sample_var(a, ma), vb = sample_var(b, mb);
    double se2 = va / na + vb / nb;
    double df_fallback = na + nb - 2.0;
    if (se2 == 0.0) {
        if (ma == mb) return {0.0, 1.0, df_fallback};
        double inf = std::numeric_limits<double>::infinity();
        return {ma > mb ? inf : -inf, 0.0, df_fallback};
    }
    double t = (ma - mb) / std::sqrt(se2);
    double df = se2 * se2 /
                ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    boost::math::students_t_distribution<double> dist(df);
    double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return {t, p, df};
}

/// Paired-sample variant over per-trial differences.
inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("paired_t_test needs equal-length samples");
    if (a.size() < 2) throw Error("paired_t_test needs at least 2 pairs");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    double n = static_cast<double>(diff.size());
    double m = 0.0;
    for (double d : diff) m += d;
    m /= n;
    double var = 0.0;
    for (double d : diff) var += (d - m) * (d - m);
    var /= n - 1.0;
    double df = n - 1.0;
    if (var == 0.0) {
        if (m == 0.0) return {0.0, 1.0, df};
        double inf = std::numeric_limits<double>::infinity();
        return {m > 0 ? inf : -inf, 0.0, df};
    }
    double t = m / std::sqrt(var / n);
    boost::math::students_t_distribution<double> dist(df);
    double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return {t, p, df};
}

/// Pearson correlation; absent when either series has zero variance.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("pearson needs two equal series, n >= 2");
    double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

struct AgreementRow {
    std::string dimension;
    std::optional<double> nearest;  // gold bit vs nearest exemplar's bit
    std::optional<double> both;     // gold bit vs each retrieved exemplar's bit
};

/// Per-dimension correlation between gold test labels and the labels of the
/// retrieved exemplars, from an evaluation's per-document log.
inline std::vector<AgreementRow> example_label_agreement(const EvalReport& report) {
    Scheme scheme = scheme_from_name(report.scheme);
    const auto& dims = scheme_dimensions(scheme);
    std::vector<AgreementRow> rows;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        std::vector<double> gold_nearest, bit_nearest, gold_both, bit_both;
        for (const DocLog& log : report.documents) {
            if (log.hits.empty()) continue;
            DimensionLabels gold = parse_label(scheme, log.gold);
            DimensionLabels nearest = parse_label(scheme, log.hits.front().label);
            gold_nearest.push_back(gold.bits[d] ? 1.0 : 0.0);
            bit_nearest.push_back(nearest.bits[d] ? 1.0 : 0.0);
            for (const HitLog& h : log.hits) {
                DimensionLabels ex = parse_label(scheme, h.label);
                gold_both.push_back(gold.bits[d] ? 1.0 : 0.0);
                bit_both.push_back(ex.bits[d] ? 1.0 : 0.0);
            }
        }
        AgreementRow row;
        row.dimension = dims[d].code;
        if (gold_nearest.size() >= 2) row.nearest = pearson(gold_nearest, bit_nearest);
        if (gold_both.size() >= 2) row.both = pearson(gold_both, bit_both);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct ShuffleOutcome {
    std::vector<std::uint64_t> seeds;
    std::vector<EvalReport> ordered;   // one per seed; identical when caches are warm
    std::vector<EvalReport> shuffled;
    std::vector<std::string> dimensions;
    std::vector<TTestResult> f1_tests;  // ordered vs shuffled macro-F1, per dimension
};

/// Post-order sensitivity experiment: evaluate each seed's shuffled variant
/// against the ordered baseline and t-test per-dimension F1 across seeds.
inline ShuffleOutcome order_shuffle_experiment(const std::vector<Document>& docs,
                                               const ReferenceLibrary& lib, CachedChat& chat,
                                               CachedEmbed& embed, const PredictOptions& opt,
                                               const std::vector<std::uint64_t>& seeds,
                                               std::size_t concurrency = 1) {
    if (seeds.size() < 2) throw Error("order_shuffle_experiment needs at least 2 seeds");
    ShuffleOutcome out;
    out.seeds = seeds;
    for (std::uint64_t seed : seeds) {
        out.ordered.push_back(evaluate(docs, lib, chat, embed, opt, concurrency));
        std::vector<Document> shuffled;
        shuffled.reserve(docs.size());
        for (const Document& d : docs) shuffled.push_back(shuffle_posts(d, seed));
        out.shuffled.push_back(evaluate(shuffled, lib, chat, embed, opt, concurrency));
    }
    for (std::size_t d = 0; d < out.ordered.front().dimensions.size(); ++d) {
        std::vector<double> f1_ordered, f1_shuffled;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            f1_ordered.push_back(out.ordered[s].dimensions[d].macro_f1);
            f1_shuffled.push_back(out.shuffled[s].dimensions[d].macro_f1);
        }
        out.dimensions.push_back(out.ordered.front().dimensions[d].code);
        out.f1_tests.push_back(welch_t_test(f1_ordered, f1_shuffled));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization. Key order is alphabetical (nlohmann objects sort),
// doubles are shortest-round-trip, and nothing time- or host-dependent is
// written, so identical runs produce identical bytes.
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const EvalReport& report,
                                     const std::map<std::string, std::string>& config_snapshot) {
    nlohmann::json dims = nlohmann::json::array();
    for (const auto& m : report.dimensions)
        dims.push_back(nlohmann::json{{"accuracy", m.accuracy},
                                      {"code", m.code},
                                      {"f1_negative", m.f1_negative},
                                      {"f1_positive", m.f1_positive},
                                      {"fn", m.fn},
                                      {"fp", m.fp},
                                      {"macro_f1", m.macro_f1},
                                      {"tn", m.tn},
                                      {"tp", m.tp}});
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& log : report.documents) {
        nlohmann::json hits = nlohmann::json::array();
        for (const auto& h : log.hits)
            hits.push_back(nlohmann::json{
                {"distance", h.distance}, {"entry_id", h.entry_id}, {"label", h.label}});
        docs.push_back(nlohmann::json{{"doc_id", log.doc_id},
                                      {"failed", log.failed},
                                      {"failure_reason", log.failure_reason},
                                      {"gold", log.gold},
                                      {"hits", hits},
                                      {"predicted", log.predicted}});
    }
    return nlohmann::json{{"averages", {{"accuracy", report.avg_accuracy},
                                        {"macro_f1", report.avg_macro_f1}}},
                          {"config", config_snapshot},
                          {"dimensions", dims},
                          {"documents", docs},
                          {"failures", report.failures},
                          {"n_documents", report.n_documents},
                          {"scheme", report.scheme}};
}

inline std::string render_report_text(const EvalReport& report) {
    char line[128];
    std::string out = report.scheme + ": " + std::to_string(report.n_documents) + " documents, " +
                      std::to_string(report.failures) + " failed predictions\n\n";
    out += "dimension   accuracy   macro_f1\n";
    for (const auto& m : report.dimensions) {
        std::snprintf(line, sizeof line, "%-10s  %8.4f   %8.4f\n", m.code.c_str(), m.accuracy,
                      m.macro_f1);
        out += line;
    }
    std::snprintf(line, sizeof line, "%-10s  %8.4f   %8.4f\n", "average", report.avg_accuracy,
                  report.avg_macro_f1);
    out += line;
    return out;
}

inline void write_report(const EvalReport& report,
                         const std::map<std::string, std::string>& config_snapshot,
                         const std::filesystem::path& dir, const std::string& stem = "report") {
    atomic_write_file(dir / (stem + ".json"), report_to_json(report, config_snapshot).dump(2) + "\n");
    atomic_write_file(dir / (stem + ".txt"), render_report_text(report));
}

/// Plot-ready sweep table: alpha, average accuracy, average macro-F1.
inline std::string render_sweep_tsv(const std::vector<std::pair<double, EvalReport>>& sweep) {
    std::string out = "alpha\taccuracy\tmacro_f1\n";
    for (const auto& [alpha, report] : sweep) {
        out += format_double(alpha);
        out += '\t';
        out += format_double(report.avg_accuracy);
        out += '\t';
        out += format_double(report.avg_macro_f1);
        out += '\n';
    }
    return out;
}

}  // namespace eerpd
