#pragma once

#include <cctype>
#include <cstddef>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eerpd/corpus.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/prompts.hpp"
#include "eerpd/providers.hpp"
#include "eerpd/util.hpp"

namespace eerpd {

/// A document whose sentences all carry a channel tag. `es` and `ers` index
/// into doc.sentences and always partition it.
struct CategorizedDocument {
    Document doc;
    std::vector<std::size_t> es;
    std::vector<std::size_t> ers;

    std::string channel_text(ChannelTag tag) const {
        const auto& idx = tag == ChannelTag::Emotion ? es : ers;
        std::string out;
        for (std::size_t i : idx) {
            if (!out.empty()) out += ' ';
            out += doc.sentences[i].text;
        }
        return out;
    }
};

inline std::string build_categorization_prompt(const Document& doc) {
    if (doc.sentences.empty()) throw Error("cannot categorize a document with no sentences");
    return prompts::categorization_prompt(document_text(doc));
}

namespace detail {

/// Lenient line scan: returns every well-formed `<index>. [<label>]` entry
/// with index < n_units. Lines that don't look like entries are skipped;
/// malformed aspects of entry-like lines are reported through `flaw` (the
/// strict parser turns those into typed errors).
struct ExtractedTags {
    std::map<std::size_t, ChannelTag> tags;
    std::optional<std::size_t> duplicate;   // first duplicated in-range index
    std::optional<std::string> bad_label;   // first unknown label token
};

inline std::optional<ChannelTag> channel_from_token(std::string_view token) {
    // Collapse case and internal whitespace: "emotion   regulation" == "Emotion Regulation".
    std::string norm;
    for (char c : token) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!norm.empty() && norm.back() != ' ') norm += ' ';
        } else {
            norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    norm = trim(norm);
    if (norm == "emotion") return ChannelTag::Emotion;
    if (norm == "emotion regulation") return ChannelTag::EmotionRegulation;
    return std::nullopt;
}

inline ExtractedTags extract_categorization(std::string_view response, std::size_t n_units) {
    ExtractedTags out;
    for (const std::string& raw_line : split_on(response, "\n")) {
        std::string_view line = raw_line;
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t digits_start = i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == digits_start) continue;  // no leading index: not an entry line
        std::size_t index = 0;
        for (std::size_t d = digits_start; d < i; ++d)
            index = index * 10 + static_cast<std::size_t>(line[d] - '0');
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i < line.size() && (line[i] == '.' || line[i] == ')')) ++i;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;

        std::string token;
        bool bracketed = false;
        if (i < line.size() && line[i] == '[') {
            std::size_t close = line.find(']', i + 1);
            if (close == std::string_view::npos) continue;
            token = std::string(line.substr(i + 1, close - i - 1));
            bracketed = true;
        } else if (i < line.size()) {
            token = std::string(line.substr(i));
        } else {
            continue;  // bare number
        }
        if (index >= n_units) continue;

        auto tag = channel_from_token(token);
        if (!tag) {
            // Only a bracketed token is unambiguously a label attempt; an
            // unbracketed mismatch is treated as chatter and skipped.
            if (bracketed && !out.bad_label) out.bad_label = trim(token);
            continue;
        }
        if (out.tags.count(index)) {
            if (!out.duplicate) out.duplicate = index;
            continue;
        }
        out.tags.emplace(index, *tag);
    }
    return out;
}

}  // namespace detail

/// Strict parse of a categorization response: exactly one tag per unit,
/// indices 0..n_units-1. Throws the specific flaw it hit first: a duplicated
/// index, an unknown label token, or simply too few entries.
inline std::vector<ChannelTag> parse_categorization(std::string_view response,
                                                    std::size_t n_units) {
    if (n_units == 0) throw Error("parse_categorization: n_units must be positive");
    auto extracted = detail::extract_categorization(response, n_units);
    if (extracted.duplicate) throw DuplicateIndex(*extracted.duplicate);
    if (extracted.tags.size() < n_units) {
        if (extracted.bad_label) throw UnknownLabel(*extracted.bad_label);
        throw IncompleteParse(extracted.tags.size(), n_units);
    }
    std::vector<ChannelTag> tags;
    tags.reserve(n_units);
    for (std::size_t i = 0; i < n_units; ++i) tags.push_back(extracted.tags.at(i));
    return tags;
}

/// Runs the categorization round-trip for one document: ask, parse strictly,
/// re-ask once on a malformed response, then patch the remaining holes
/// (merged lenient extractions, unanswered units default to Emotion
/// Regulation). URL-only sentences are forced to Emotion Regulation no
/// matter what the model said.
inline CategorizedDocument categorize_document(const Document& doc, CachedChat& chat,
                                               double temperature = 0.0, int max_tokens = 2048) {
    std::string prompt = build_categorization_prompt(doc);
    const std::size_t n = doc.sentences.size();

    std::string first = chat.chat(prompt, temperature, max_tokens);
    std::vector<ChannelTag> tags;
    bool parsed = false;
    try {
        tags = parse_categorization(first, n);
        parsed = true;
    } catch (const CategorizationParseError&) {
    }
    if (!parsed) {
        std::string second =
            chat.chat(prompt + prompts::categorization_retry_suffix(), temperature, max_tokens);
        try {
            tags = parse_categorization(second, n);
            parsed = true;
        } catch (const CategorizationParseError&) {
            // Merge what both rounds did yield; the retry wins conflicts.
            auto merged = detail::extract_categorization(first, n).tags;
            for (auto [i, t] : detail::extract_categorization(second, n).tags) merged[i] = t;
            tags.assign(n, ChannelTag::EmotionRegulation);
            std::size_t defaulted = 0;
            for (std::size_t i = 0; i < n; ++i) {
                auto it = merged.find(i);
                if (it != merged.end()) {
                    tags[i] = it->second;
                } else {
                    ++defaulted;
                }
            }
            if (defaulted > 0)
                std::cerr << "warning: document " << doc.id << ": " << defaulted << " of " << n
                          << " sentences defaulted to Emotion Regulation after two malformed "
                             "categorization responses\n";
        }
    }

    CategorizedDocument out;
    out.doc = doc;
    for (std::size_t i = 0; i < n; ++i) {
        ChannelTag tag = tags[i];
        if (is_url_only(out.doc.sentences[i].text)) tag = ChannelTag::EmotionRegulation;
        out.doc.sentences[i].tag = tag;
        (tag == ChannelTag::Emotion ? out.es : out.ers).push_back(i);
    }
    return out;
}

/// Rebuilds the index views for a document whose sentences are already
/// tagged (e.g. loaded from a persisted library).
inline CategorizedDocument categorized_from_tagged(Document doc) {
    CategorizedDocument out;
    out.doc = std::move(doc);
    for (std::size_t i = 0; i < out.doc.sentences.size(); ++i) {
        if (!out.doc.sentences[i].tag)
            throw Error("document " + out.doc.id + ": sentence " + std::to_string(i) +
                        " has no channel tag");
        (*out.doc.sentences[i].tag == ChannelTag::Emotion ? out.es : out.ers).push_back(i);
    }
    return out;
}

}  // namespace eerpd
