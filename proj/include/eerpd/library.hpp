#pragma once

#include <cstddef>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "eerpd/categorize.hpp"
#include "eerpd/corpus.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/labels.hpp"
#include "eerpd/prompts.hpp"
#include "eerpd/providers.hpp"
#include "eerpd/retrieve.hpp"
#include "eerpd/util.hpp"

namespace eerpd {

struct ReferenceEntry {
    std::string id;
    CategorizedDocument cdoc;
    DimensionLabels label;
    std::string cot;          // text after the Process: marker; empty iff cot_failed
    bool cot_failed = false;  // excluded from retrieval candidacy
    std::vector<double> v_e;
    std::vector<double> v_er;
};

/// Identity of the pipeline that produced a library. A persisted library is
/// only usable when this matches the active configuration.
struct Fingerprint {
    std::string scheme;
    std::string chat_provider;
    std::string chat_model;
    std::string embed_provider;
    std::string embed_model;
    std::size_t embed_dim = 0;

    bool operator==(const Fingerprint&) const = default;

    std::string describe() const {
        return scheme + " | chat " + chat_provider + "/" + chat_model + " | embed " +
               embed_provider + "/" + embed_model + " dim " + std::to_string(embed_dim);
    }
};

inline Fingerprint make_fingerprint(Scheme scheme, const CachedChat& chat,
                                    const CachedEmbed& embed) {
    return Fingerprint{scheme_name(scheme),          chat.provider().id(),
                       chat.provider().model(),      embed.provider().id(),
                       embed.provider().model(),     embed.dim()};
}

struct ReferenceLibrary {
    Fingerprint fingerprint;
    Scheme scheme = Scheme::MBTI;
    std::vector<ReferenceEntry> entries;

    const ReferenceEntry* find(std::string_view id) const {
        for (const auto& e : entries)
            if (e.id == id) return &e;
        return nullptr;
    }
};

/// Searchable view over the library; entries without a usable reasoning
/// chain never become exemplars, so they are not candidates at all.
inline std::vector<RetrievalCandidate> retrieval_candidates(const ReferenceLibrary& lib) {
    std::vector<RetrievalCandidate> out;
    out.reserve(lib.entries.size());
    for (const auto& e : lib.entries) {
        if (e.cot_failed) continue;
        out.push_back(RetrievalCandidate{e.id, &e.v_e, &e.v_er});
    }
    return out;
}

inline std::string build_cot_prompt(const Document& doc, const DimensionLabels& label) {
    if (doc.sentences.empty()) throw Error("cannot build a reasoning prompt for an empty document");
    return prompts::cot_prompt(label.scheme, label.to_string(), document_text(doc));
}

namespace detail {

inline std::optional<std::string> extract_process(std::string_view response) {
    static constexpr std::string_view marker = "Process:";
    std::size_t at = response.find(marker);
    if (at == std::string_view::npos) return std::nullopt;
    std::string text = trim(response.substr(at + marker.size()));
    if (text.empty()) return std::nullopt;
    return text;
}

}  // namespace detail

/// Asks the model for an exemplar's reasoning chain and returns the text
/// after the `Process:` marker. One repair round; a second malformed
/// response throws MarkerMissing (the builder then flags the entry instead
/// of aborting the whole build). Raw responses stay in the response cache
/// for audit.
inline std::string generate_cot(const Document& doc, const DimensionLabels& label,
                                CachedChat& chat, double temperature = 0.0,
                                int max_tokens = 2048) {
    std::string prompt = build_cot_prompt(doc, label);
    if (auto process = detail::extract_process(chat.chat(prompt, temperature, max_tokens)))
        return *process;
    std::string retry = chat.chat(prompt + prompts::cot_retry_suffix(), temperature, max_tokens);
    if (auto process = detail::extract_process(retry)) return *process;
    throw MarkerMissing("no Process: marker in either reasoning response for " + doc.id);
}

// ---------------------------------------------------------------------------
// Persistence: one JSON object per line. The first record is the fingerprint
// header; every following record is an entry. Vectors round-trip losslessly
// (shortest-form doubles that parse back to the same bits).
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json entry_to_json(const ReferenceEntry& e) {
    nlohmann::json sentences = nlohmann::json::array();
    for (const Sentence& s : e.cdoc.doc.sentences) {
        if (!s.tag) throw Error("entry " + e.id + ": untagged sentence cannot be persisted");
        sentences.push_back(nlohmann::json{{"post_index", s.post_index},
                                           {"tag", channel_tag_name(*s.tag)},
                                           {"text", s.text}});
    }
    return nlohmann::json{{"cot", e.cot},
                          {"cot_failed", e.cot_failed},
                          {"id", e.id},
                          {"label", e.label.to_string()},
                          {"sentences", sentences},
                          {"type", "entry"},
                          {"v_e", e.v_e},
                          {"v_er", e.v_er}};
}

inline ReferenceEntry entry_from_json(const nlohmann::json& j, Scheme scheme) {
    ReferenceEntry e;
    e.id = j.at("id").get<std::string>();
    e.label = parse_label(scheme, j.at("label").get<std::string>());
    e.cot = j.at("cot").get<std::string>();
    e.cot_failed = j.at("cot_failed").get<bool>();
    e.v_e = j.at("v_e").get<std::vector<double>>();
    e.v_er = j.at("v_er").get<std::vector<double>>();

    Document doc;
    doc.id = e.id;
    doc.label = e.label;
    std::size_t index = 0;
    for (const auto& js : j.at("sentences")) {
        Sentence s;
        s.index = index++;
        s.text = js.at("text").get<std::string>();
        s.post_index = js.at("post_index").get<std::size_t>();
        s.tag = channel_tag_from_name(js.at("tag").get<std::string>());
        doc.sentences.push_back(std::move(s));
    }
    doc.raw_text = document_text(doc);
    e.cdoc = categorized_from_tagged(std::move(doc));
    if (!e.cot_failed && e.cot.empty())
        throw Error("entry " + e.id + " has an empty reasoning chain but is not flagged");
    return e;
}

inline nlohmann::json header_to_json(const ReferenceLibrary& lib) {
    return nlohmann::json{{"chat_model", lib.fingerprint.chat_model},
                          {"chat_provider", lib.fingerprint.chat_provider},
                          {"embed_dim", lib.fingerprint.embed_dim},
                          {"embed_model", lib.fingerprint.embed_model},
                          {"embed_provider", lib.fingerprint.embed_provider},
                          {"scheme", lib.fingerprint.scheme},
                          {"type", "header"}};
}

}  // namespace detail

inline void save_library(const ReferenceLibrary& lib, const std::filesystem::path& path) {
    std::string out = detail::header_to_json(lib).dump();
    out += '\n';
    for (const auto& e : lib.entries) {
        out += detail::entry_to_json(e).dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

inline ReferenceLibrary load_library(const std::filesystem::path& path) {
    std::string content = read_file(path);
    ReferenceLibrary lib;
    bool have_header = false;
    std::set<std::string> seen_ids;
    std::size_t line_no = 0;
    for (const std::string& line : split_on(content, "\n")) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(path.string() + " record " + std::to_string(line_no) + ": " +
                            e.what());
        }
        try {
            std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header)
                    throw Error("duplicate header record");
                lib.fingerprint =
                    Fingerprint{j.at("scheme").get<std::string>(),
                                j.at("chat_provider").get<std::string>(),
                                j.at("chat_model").get<std::string>(),
                                j.at("embed_provider").get<std::string>(),
                                j.at("embed_model").get<std::string>(),
                                j.at("embed_dim").get<std::size_t>()};
                lib.scheme = scheme_from_name(lib.fingerprint.scheme);
                have_header = true;
            } else if (type == "entry") {
                if (!have_header) throw Error("entry record before header");
                ReferenceEntry e = detail::entry_from_json(j, lib.scheme);
                if (e.v_e.size() != lib.fingerprint.embed_dim ||
                    e.v_er.size() != lib.fingerprint.embed_dim)
                    throw Error("entry " + e.id + " vector dimension does not match header");
                if (!seen_ids.insert(e.id).second) throw Error("duplicate entry id " + e.id);
                lib.entries.push_back(std::move(e));
            } else {
                throw Error("unknown record type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(path.string() + " record " + std::to_string(line_no) + ": " +
                            e.what());
        } catch (const Error& e) {
            throw LoadError(path.string() + " record " + std::to_string(line_no) + ": " +
                            e.what());
        }
    }
    if (!have_header) throw LoadError(path.string() + ": no header record");
    return lib;
}

inline void check_compatible(const ReferenceLibrary& lib, const Fingerprint& expected) {
    if (lib.fingerprint == expected) return;
    throw CompatibilityError("library fingerprint [" + lib.fingerprint.describe() +
                             "] does not match configuration [" + expected.describe() + "]");
}

/// Builds (or extends) the reference library from labeled training docs:
/// categorize, embed both channels, generate the reasoning chain. Per-entry
/// failures are tolerated up to 10% of the batch; the library file is
/// rewritten once at the end, so existing entries survive and docs already
/// present are skipped.
inline ReferenceLibrary build_reference_library(const std::vector<Document>& train_docs,
                                                CachedChat& chat, CachedEmbed& embed,
                                                const std::filesystem::path& library_path,
                                                std::size_t concurrency = 1,
                                                int chat_max_tokens = 2048) {
    if (train_docs.empty()) throw BuildError("no training documents to build from");
    Scheme scheme = train_docs.front().label
                        ? train_docs.front().label->scheme
                        : throw BuildError("training documents must be labeled");

    ReferenceLibrary lib;
    lib.scheme = scheme;
    lib.fingerprint = make_fingerprint(scheme, chat, embed);
    if (std::filesystem::exists(library_path)) {
        lib = load_library(library_path);
        check_compatible(lib, make_fingerprint(scheme, chat, embed));
    }

    std::set<std::string> existing;
    for (const auto& e : lib.entries) existing.insert(e.id);
    std::vector<const Document*> todo;
    for (const auto& d : train_docs) {
        if (!d.label) throw BuildError("training document " + d.id + " has no label");
        if (d.label->scheme != scheme)
            throw BuildError("training document " + d.id + " uses a different label scheme");
        if (!existing.count(d.id)) todo.push_back(&d);
    }

    std::vector<std::optional<ReferenceEntry>> built(todo.size());
    std::vector<std::string> failures(todo.size());
    parallel_for(todo.size(), concurrency, [&](std::size_t i) {
        const Document& doc = *todo[i];
        try {
            ReferenceEntry e;
            e.id = doc.id;
            e.label = *doc.label;
            e.cdoc = categorize_document(doc, chat, 0.0, chat_max_tokens);
            auto [v_e, v_er] = embed_channels(e.cdoc, embed);
            e.v_e = std::move(v_e);
            e.v_er = std::move(v_er);
            try {
                e.cot = generate_cot(doc, *doc.label, chat, 0.0, chat_max_tokens);
            } catch (const MarkerMissing& m) {
                e.cot_failed = true;
                std::cerr << "warning: " << m.what() << "; entry kept but not retrievable\n";
            }
            built[i] = std::move(e);
        } catch (const std::exception& e) {
            failures[i] = doc.id + ": " + e.what();
        }
    });

    std::vector<std::string> failed;
    for (std::size_t i = 0; i < todo.size(); ++i) {
        if (built[i]) {
            lib.entries.push_back(std::move(*built[i]));
        } else {
            failed.push_back(failures[i]);
        }
    }
    if (!failed.empty()) {
        for (const auto& f : failed) std::cerr << "library build failure: " << f << "\n";
        if (failed.size() * 10 > todo.size())
            throw BuildError(std::to_string(failed.size()) + " of " + std::to_string(todo.size()) +
                             " entries failed (more than 10%)");
    }
    save_library(lib, library_path);
    return lib;
}

}  // namespace eerpd
