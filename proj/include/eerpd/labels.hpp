#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "eerpd/errors.hpp"
#include "eerpd/util.hpp"

namespace eerpd {

enum class Scheme { MBTI, BigFive };

struct DimensionDescriptor {
    std::string code;  // "I/E", "N/S", ... or "AGR", "CON", ...
    char positive;     // letter encoded as bit = true
    char negative;
};

inline const std::vector<DimensionDescriptor>& scheme_dimensions(Scheme scheme) {
    static const std::vector<DimensionDescriptor> mbti = {
        {"I/E", 'I', 'E'},
        {"N/S", 'N', 'S'},
        {"T/F", 'T', 'F'},
        {"J/P", 'J', 'P'},
    };
    static const std::vector<DimensionDescriptor> bigfive = {
        {"AGR", 'y', 'n'},
        {"CON", 'y', 'n'},
        {"EXT", 'y', 'n'},
        {"NEU", 'y', 'n'},
        {"OPN", 'y', 'n'},
    };
    return scheme == Scheme::MBTI ? mbti : bigfive;
}

inline std::size_t dimension_count(Scheme scheme) {
    return scheme_dimensions(scheme).size();
}

inline std::string scheme_name(Scheme scheme) {
    return scheme == Scheme::MBTI ? "MBTI" : "BigFive";
}

inline Scheme scheme_from_name(std::string_view name) {
    if (name == "MBTI") return Scheme::MBTI;
    if (name == "BigFive") return Scheme::BigFive;
    throw Error("unknown label scheme '" + std::string(name) + "'");
}

/// One bit per personality dimension; true means the scheme's positive letter
/// (I, N, T, J for MBTI; y for Big Five traits).
struct DimensionLabels {
    Scheme scheme;
    std::vector<bool> bits;

    bool operator==(const DimensionLabels&) const = default;

    /// Canonical form: "INFJ" style for MBTI, "ynyyn" style for Big Five.
    std::string to_string() const {
        const auto& dims = scheme_dimensions(scheme);
        std::string out;
        out.reserve(dims.size());
        for (std::size_t d = 0; d < dims.size(); ++d)
            out.push_back(bits[d] ? dims[d].positive : dims[d].negative);
        return out;
    }

    DimensionLabels complement() const {
        DimensionLabels out = *this;
        out.bits.flip();
        return out;
    }
};

/// Parses a label string, case-insensitively, against the scheme's letter
/// pairs. MBTI letters must appear in type-string position order.
inline DimensionLabels parse_label(Scheme scheme, std::string_view s) {
    const auto& dims = scheme_dimensions(scheme);
    if (s.size() != dims.size())
        throw InvalidLabel("label '" + std::string(s) + "' must have " +
                           std::to_string(dims.size()) + " letters for " + scheme_name(scheme));
    DimensionLabels out{scheme, std::vector<bool>(dims.size(), false)};
    for (std::size_t d = 0; d < dims.size(); ++d) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[d])));
        char pos = static_cast<char>(std::tolower(static_cast<unsigned char>(dims[d].positive)));
        char neg = static_cast<char>(std::tolower(static_cast<unsigned char>(dims[d].negative)));
        if (c == pos) {
            out.bits[d] = true;
        } else if (c == neg) {
            out.bits[d] = false;
        } else {
            throw InvalidLabel("label '" + std::string(s) + "': position " + std::to_string(d) +
                               " must be " + std::string(1, dims[d].positive) + " or " +
                               std::string(1, dims[d].negative));
        }
    }
    return out;
}

}  // namespace eerpd
