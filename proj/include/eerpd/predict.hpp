#pragma once

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eerpd/categorize.hpp"
#include "eerpd/corpus.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/labels.hpp"
#include "eerpd/library.hpp"
#include "eerpd/prompts.hpp"
#include "eerpd/providers.hpp"
#include "eerpd/retrieve.hpp"

namespace eerpd {

struct Prediction {
    std::string doc_id;
    DimensionLabels label;       // meaningless when failed
    std::string process;
    std::string raw_response;
    std::vector<RetrievalHit> hits;
    bool failed = false;
    std::string failure_reason;
};

/// Options that shape a single prediction; a subset of the run config.
struct PredictOptions {
    double alpha = 0.7;
    AlphaOrientation orientation = AlphaOrientation::WeightsRegulation;
    std::size_t k = 2;
    bool include_cot = true;   // off for the reasoning-ablation runs
    bool exclude_self = true;  // drop the doc's own library entry from candidates
    int chat_max_tokens = 2048;
};

inline std::string build_prediction_prompt(const Document& target,
                                           const std::vector<const ReferenceEntry*>& exemplars,
                                           Scheme scheme, std::size_t expected_k,
                                           bool include_cot = true) {
    std::vector<prompts::ExemplarSlot> slots;
    slots.reserve(exemplars.size());
    for (const ReferenceEntry* e : exemplars)
        slots.push_back(prompts::ExemplarSlot{document_text(e->cdoc.doc),
                                              e->label.to_string(), e->cot});
    return prompts::prediction_prompt(scheme, slots, document_text(target), expected_k,
                                      include_cot);
}

/// Pulls `Result: <letters>` and the trailing `Process:` text out of a
/// prediction response. Marker search is case-insensitive; the label is
/// validated against the scheme.
inline std::pair<DimensionLabels, std::string> parse_prediction(std::string_view response,
                                                                Scheme scheme) {
    std::string lower = to_lower(response);
    std::size_t at = lower.find("result:");
    if (at == std::string_view::npos)
        throw ParseError("response has no Result: marker");
    std::size_t i = at + 7;
    while (i < response.size() && (response[i] == ' ' || response[i] == '\t')) ++i;
    std::string token;
    while (i < response.size() && std::isalpha(static_cast<unsigned char>(response[i])))
        token += response[i++];
    if (token.empty()) throw InvalidLabel("no label letters after Result: marker");
    DimensionLabels label = parse_label(scheme, token);

    std::string process;
    std::size_t p = lower.find("process:", i);
    if (p != std::string_view::npos) process = trim(response.substr(p + 8));
    return {label, process};
}

/// Full single-document pipeline: categorize, embed, mix, retrieve k
/// exemplars, prompt, parse. Parse failures get one repair round; any second
/// failure (or an unusable query embedding) is recorded on the Prediction
/// rather than thrown, so evaluation can score and count it.
inline Prediction predict_document(const Document& doc, const ReferenceLibrary& lib,
                                   CachedChat& chat, CachedEmbed& embed,
                                   const PredictOptions& opt) {
    Prediction out;
    out.doc_id = doc.id;
    out.label = DimensionLabels{lib.scheme, std::vector<bool>(dimension_count(lib.scheme), false)};
    try {
        CategorizedDocument cdoc = categorize_document(doc, chat, 0.0, opt.chat_max_tokens);
        auto [v_e, v_er] = embed_channels(cdoc, embed);
        std::vector<double> query = combine(v_e, v_er, opt.alpha, opt.orientation);

        std::optional<std::string> exclude;
        if (opt.exclude_self && lib.find(doc.id) != nullptr) exclude = doc.id;
        out.hits = top_k(retrieval_candidates(lib), query, opt.k, exclude, opt.alpha,
                         opt.orientation);

        std::vector<const ReferenceEntry*> exemplars;
        exemplars.reserve(out.hits.size());
        for (const auto& hit : out.hits) exemplars.push_back(lib.find(hit.entry_id));
        std::string prompt =
            build_prediction_prompt(doc, exemplars, lib.scheme, opt.k, opt.include_cot);

        out.raw_response = chat.chat(prompt, 0.0, opt.chat_max_tokens);
        try {
            std::tie(out.label, out.process) = parse_prediction(out.raw_response, lib.scheme);
            return out;
        } catch (const Error&) {
            out.raw_response = chat.chat(prompt + prompts::prediction_retry_suffix(lib.scheme),
                                         0.0, opt.chat_max_tokens);
            std::tie(out.label, out.process) = parse_prediction(out.raw_response, lib.scheme);
            return out;
        }
    } catch (const ProviderError&) {
        throw;  // infrastructure problems abort the run rather than skew scores
    } catch (const Error& e) {
        out.failed = true;
        out.failure_reason = e.what();
        return out;
    }
}

}  // namespace eerpd
