#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eerpd/categorize.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/providers.hpp"

namespace eerpd {

/// Which channel the mixing weight alpha applies to. The default weights the
/// emotion-regulation channel (alpha=1 retrieves on regulation only); the
/// alternative orientation is kept for sensitivity studies.
enum class AlphaOrientation { WeightsRegulation, WeightsEmotion };

inline std::string alpha_orientation_name(AlphaOrientation o) {
    return o == AlphaOrientation::WeightsRegulation ? "regulation" : "emotion";
}

inline AlphaOrientation alpha_orientation_from_name(std::string_view name) {
    if (name == "regulation") return AlphaOrientation::WeightsRegulation;
    if (name == "emotion") return AlphaOrientation::WeightsEmotion;
    throw ConfigError("alpha_orientation must be 'regulation' or 'emotion', got '" +
                      std::string(name) + "'");
}

struct RetrievalHit {
    std::string entry_id;
    double distance;  // 1 - cosine similarity, in [0, 2]; smaller = more similar

    bool operator==(const RetrievalHit&) const = default;
};

inline bool is_zero_vector(const std::vector<double>& v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

inline std::vector<double> l2_normalize(std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) return v;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

/// Embeds both channel texts of a categorized document. An empty channel
/// maps to the zero vector; a non-empty one is L2-normalized.
inline std::pair<std::vector<double>, std::vector<double>> embed_channels(
    const CategorizedDocument& cdoc, CachedEmbed& embed) {
    auto one = [&](ChannelTag tag) -> std::vector<double> {
        std::string text = cdoc.channel_text(tag);
        if (trim(text).empty()) return std::vector<double>(embed.dim(), 0.0);
        return l2_normalize(embed.embed(text));
    };
    return {one(ChannelTag::Emotion), one(ChannelTag::EmotionRegulation)};
}

/// Mixes the two channel vectors: alpha weights the regulation channel and
/// (1 - alpha) the emotion channel under the default orientation. The result
/// is intentionally not re-normalized; cosine ranking is scale-invariant.
inline std::vector<double> combine(const std::vector<double>& v_e,
                                   const std::vector<double>& v_er, double alpha,
                                   AlphaOrientation orientation =
                                       AlphaOrientation::WeightsRegulation) {
    if (v_e.size() != v_er.size())
        throw Error("combine: channel dimensions differ (" + std::to_string(v_e.size()) +
                    " vs " + std::to_string(v_er.size()) + ")");
    if (alpha < 0.0 || alpha > 1.0) throw Error("combine: alpha must be in [0, 1]");
    double w_er = orientation == AlphaOrientation::WeightsRegulation ? alpha : 1.0 - alpha;
    double w_e = 1.0 - w_er;
    std::vector<double> out(v_e.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w_er * v_er[i] + w_e * v_e[i];
    if (is_zero_vector(out))
        throw DegenerateEmbedding("combined embedding is the zero vector");
    return out;
}

/// Retrieval distance: 1 - cos(a, b), clamped to [0, 2] against rounding.
inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("distance: dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw DegenerateEmbedding("distance needs two nonzero vectors");
    double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(d, 0.0, 2.0);
}

/// One searchable library row: borrowed channel vectors, combined lazily at
/// query time with whatever alpha the query uses.
struct RetrievalCandidate {
    std::string id;
    const std::vector<double>* v_e = nullptr;
    const std::vector<double>* v_er = nullptr;
};

/// Exhaustive scan for the k nearest candidates. Ascending by distance, ties
/// broken by id; `exclude_id` (the query's own entry) never appears.
/// Candidates whose mix degenerates to zero at this alpha are unusable and
/// skipped. Throws when fewer than k usable candidates remain.
inline std::vector<RetrievalHit> top_k(const std::vector<RetrievalCandidate>& candidates,
                                       const std::vector<double>& query, std::size_t k,
                                       const std::optional<std::string>& exclude_id,
                                       double alpha,
                                       AlphaOrientation orientation =
                                           AlphaOrientation::WeightsRegulation) {
    if (k == 0) throw Error("top_k: k must be positive");
    std::vector<RetrievalHit> hits;
    hits.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (exclude_id && c.id == *exclude_id) continue;
        std::vector<double> mixed;
        try {
            mixed = combine(*c.v_e, *c.v_er, alpha, orientation);
        } catch (const DegenerateEmbedding&) {
            continue;
        }
        hits.push_back(RetrievalHit{c.id, distance(query, mixed)});
    }
    if (hits.size() < k)
        throw Error("top_k: need " + std::to_string(k) + " candidates, only " +
                    std::to_string(hits.size()) + " usable");
    auto cmp = [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.entry_id < b.entry_id;
    };
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(),
                      cmp);
    hits.resize(k);
    return hits;
}

}  // namespace eerpd
