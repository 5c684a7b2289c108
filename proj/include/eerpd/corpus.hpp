#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "eerpd/csv.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/labels.hpp"
#include "eerpd/util.hpp"

namespace eerpd {

inline constexpr std::string_view kPostDelimiter = "|||";

enum class ChannelTag { Emotion, EmotionRegulation };

inline std::string channel_tag_name(ChannelTag tag) {
    return tag == ChannelTag::Emotion ? "E" : "ER";
}

inline ChannelTag channel_tag_from_name(std::string_view name) {
    if (name == "E") return ChannelTag::Emotion;
    if (name == "ER") return ChannelTag::EmotionRegulation;
    throw Error("unknown channel tag '" + std::string(name) + "'");
}

struct Sentence {
    std::size_t index;       // contiguous from 0 within the document
    std::string text;        // trimmed, non-empty, never contains "|||"
    std::size_t post_index;  // source post ordinal; 0 for single-text corpora
    std::optional<ChannelTag> tag;

    bool operator==(const Sentence&) const = default;
};

struct Document {
    std::string id;
    std::string raw_text;
    std::vector<Sentence> sentences;
    std::optional<DimensionLabels> label;
};

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// Length of a URL token starting at `pos`, or 0 if none. A URL token is a
/// scheme name followed by "://", atomic until the next whitespace.
inline std::size_t url_token_length(std::string_view text, std::size_t pos) {
    std::size_t i = pos;
    if (i >= text.size() || !std::isalpha(static_cast<unsigned char>(text[i]))) return 0;
    ++i;
    while (i < text.size()) {
        char c = text[i];
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '.' || c == '-') {
            ++i;
        } else {
            break;
        }
    }
    if (text.compare(i, 3, "://") != 0) return 0;
    i += 3;
    while (i < text.size() && !is_space(text[i])) ++i;
    return i - pos;
}

/// Splits one post into sentences on ./!/? followed by whitespace or end of
/// text. URL tokens are skipped whole so their internal dots never break.
inline void split_post(std::string_view post, std::size_t post_index,
                       std::vector<Sentence>& out) {
    std::size_t start = 0;
    std::size_t i = 0;
    auto flush = [&](std::size_t end) {
        std::string unit = trim(post.substr(start, end - start));
        if (!unit.empty())
            out.push_back(Sentence{out.size(), std::move(unit), post_index, std::nullopt});
        start = end;
    };
    while (i < post.size()) {
        bool at_token_start = i == 0 || is_space(post[i - 1]);
        if (at_token_start) {
            if (std::size_t len = url_token_length(post, i); len > 0) {
                i += len;
                continue;
            }
        }
        char c = post[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == post.size() || is_space(post[i + 1]))) {
            flush(i + 1);
        }
        ++i;
    }
    flush(post.size());
}

}  // namespace detail

inline bool is_url_only(std::string_view text) {
    std::string t = trim(text);
    return !t.empty() && detail::url_token_length(t, 0) == t.size();
}

/// Decomposes raw text into ordered sentence units. MBTI (Kaggle) text is cut
/// on the "|||" post delimiter first; empty posts are dropped and post_index
/// renumbered contiguously over the remaining ones. BigFive (Essays) text is
/// a single post and must not contain the delimiter.
inline std::vector<Sentence> split_units(std::string_view raw_text, Scheme scheme) {
    std::vector<Sentence> out;
    if (scheme == Scheme::MBTI) {
        std::size_t post_index = 0;
        for (const std::string& post : split_on(raw_text, kPostDelimiter)) {
            std::size_t before = out.size();
            detail::split_post(post, post_index, out);
            if (out.size() > before) ++post_index;
        }
    } else {
        if (raw_text.find(kPostDelimiter) != std::string_view::npos)
            throw Error("single-text corpus contains the post delimiter \"|||\"");
        detail::split_post(raw_text, 0, out);
    }
    if (out.empty()) throw Error("no sentence units found in text");
    return out;
}

/// Canonical display form of a document: sentences joined by single spaces
/// within a post, posts joined by "|||". This is the text spliced into
/// prompts; re-splitting it reproduces the same sentence units.
inline std::string document_text(const Document& doc) {
    std::string out;
    std::size_t current_post = 0;
    bool first = true;
    for (const Sentence& s : doc.sentences) {
        if (first) {
            current_post = s.post_index;
        } else if (s.post_index != current_post) {
            out += kPostDelimiter;
            current_post = s.post_index;
        } else {
            out += ' ';
        }
        out += s.text;
        first = false;
    }
    return out;
}

/// Uniform, seed-reproducible subsample. The retained count is
/// round-half-even(n * frac); document order follows the source file.
template <typename T>
std::vector<T> sample_rows(std::vector<T> rows, double sample_frac, std::uint64_t seed) {
    if (sample_frac <= 0.0 || sample_frac > 1.0)
        throw Error("sample_frac must be in (0, 1]");
    if (sample_frac == 1.0) return rows;
    auto m = static_cast<std::size_t>(
        round_ties_to_even(static_cast<double>(rows.size()) * sample_frac));
    std::vector<T> picked;
    picked.reserve(m);
    for (std::size_t idx : sample_indices(rows.size(), m, seed))
        picked.push_back(std::move(rows[idx]));
    return picked;
}

namespace detail {

inline std::size_t require_column(const std::vector<std::string>& header,
                                  const std::string& name,
                                  const std::filesystem::path& path) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw LoadError(path.string() + ": missing column '" + name + "'");
}

inline std::string padded_id(std::string_view prefix, std::size_t ordinal) {
    std::string n = std::to_string(ordinal);
    std::string out(prefix);
    out += '-';
    out.append(n.size() < 5 ? 5 - n.size() : 0, '0');
    out += n;
    return out;
}

}  // namespace detail

/// Loads the MBTI forum-post corpus: CSV with `type` (four-letter label) and
/// `posts` ("|||"-delimited). Document ids are stable over source row order,
/// so the same (path, frac, seed) always yields the same id set.
inline std::vector<Document> load_kaggle(const std::filesystem::path& path, double sample_frac,
                                         std::uint64_t seed) {
    auto rows = csv::parse(read_file(path));
    if (rows.empty()) throw LoadError(path.string() + ": empty file");
    std::size_t type_col = detail::require_column(rows[0], "type", path);
    std::size_t posts_col = detail::require_column(rows[0], "posts", path);

    std::vector<Document> docs;
    docs.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() <= std::max(type_col, posts_col))
            throw RecordError(r + 1, "too few fields");
        Document doc;
        doc.id = detail::padded_id("kaggle", r - 1);
        doc.raw_text = row[posts_col];
        try {
            doc.label = parse_label(Scheme::MBTI, trim(row[type_col]));
            doc.sentences = split_units(doc.raw_text, Scheme::MBTI);
        } catch (const Error& e) {
            throw RecordError(r + 1, e.what());
        }
        docs.push_back(std::move(doc));
    }
    return sample_rows(std::move(docs), sample_frac, seed);
}

struct EssaysColumns {
    std::string text = "TEXT";
    // Trait columns in scheme dimension order: AGR, CON, EXT, NEU, OPN.
    std::vector<std::string> traits = {"cAGR", "cCON", "cEXT", "cNEU", "cOPN"};
};

/// Loads the stream-of-consciousness essay corpus: one text column plus five
/// y/n trait columns (names configurable, defaults per the public release).
inline std::vector<Document> load_essays(const std::filesystem::path& path, double sample_frac,
                                         std::uint64_t seed,
                                         const EssaysColumns& columns = {}) {
    auto rows = csv::parse(read_file(path));
    if (rows.empty()) throw LoadError(path.string() + ": empty file");
    std::size_t text_col = detail::require_column(rows[0], columns.text, path);
    std::vector<std::size_t> trait_cols;
    for (const auto& name : columns.traits)
        trait_cols.push_back(detail::require_column(rows[0], name, path));

    std::vector<Document> docs;
    docs.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        Document doc;
        doc.id = detail::padded_id("essays", r - 1);
        std::string bits;
        for (std::size_t c : trait_cols) {
            if (c >= row.size()) throw RecordError(r + 1, "too few fields");
            std::string v = to_lower(trim(row[c]));
            if (v != "y" && v != "n")
                throw RecordError(r + 1, "trait value '" + row[c] + "' is not y or n");
            bits += v;
        }
        if (text_col >= row.size()) throw RecordError(r + 1, "too few fields");
        doc.raw_text = row[text_col];
        if (trim(doc.raw_text).empty()) throw RecordError(r + 1, "empty text field");
        try {
            doc.label = parse_label(Scheme::BigFive, bits);
            doc.sentences = split_units(doc.raw_text, Scheme::BigFive);
        } catch (const Error& e) {
            throw RecordError(r + 1, e.what());
        }
        docs.push_back(std::move(doc));
    }
    return sample_rows(std::move(docs), sample_frac, seed);
}

/// Returns a copy of the document with its posts in a seed-determined random
/// order. Sentence order inside each post is untouched; sentence and post
/// indices are renumbered and raw_text rebuilt to match.
inline Document shuffle_posts(const Document& doc, std::uint64_t seed) {
    std::size_t post_count = 0;
    for (const Sentence& s : doc.sentences)
        post_count = std::max(post_count, s.post_index + 1);

    std::vector<std::size_t> order(post_count);
    for (std::size_t i = 0; i < post_count; ++i) order[i] = i;
    std::mt19937_64 gen(seed);
    deterministic_shuffle(order, gen);

    Document out;
    out.id = doc.id;
    out.label = doc.label;
    for (std::size_t new_post = 0; new_post < order.size(); ++new_post) {
        for (const Sentence& s : doc.sentences) {
            if (s.post_index != order[new_post]) continue;
            out.sentences.push_back(
                Sentence{out.sentences.size(), s.text, new_post, s.tag});
        }
    }
    out.raw_text = document_text(out);
    return out;
}

}  // namespace eerpd
