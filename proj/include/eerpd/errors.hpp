#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace eerpd {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// File- or format-level problem: missing column, unreadable file, corrupt record.
class LoadError : public Error {
public:
    using Error::Error;
};

/// Problem attributable to a single input record. `row` is 1-based and counts
/// the header line, so the first data record of a CSV is row 2.
class RecordError : public Error {
public:
    RecordError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row(row) {}
    std::size_t row;
};

/// Invalid run configuration (bad value, missing key, unusable provider block).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Transport or HTTP failure from a chat/embedding backend.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what,
                           std::optional<int> status = std::nullopt)
        : Error(what), status(status) {}
    std::optional<int> status;
};

/// A label string that does not fit the scheme ("ABCD", wrong length, ...).
class InvalidLabel : public Error {
public:
    using Error::Error;
};

// Sentence-categorization response errors. All three share a base so the
// repair path can catch one type.
class CategorizationParseError : public Error {
public:
    using Error::Error;
};

class IncompleteParse : public CategorizationParseError {
public:
    IncompleteParse(std::size_t found, std::size_t expected)
        : CategorizationParseError("categorization response has " + std::to_string(found) +
                                   " of " + std::to_string(expected) + " expected lines"),
          found(found), expected(expected) {}
    std::size_t found;
    std::size_t expected;
};

class DuplicateIndex : public CategorizationParseError {
public:
    explicit DuplicateIndex(std::size_t index)
        : CategorizationParseError("duplicate sentence index " + std::to_string(index)),
          index(index) {}
    std::size_t index;
};

class UnknownLabel : public CategorizationParseError {
public:
    explicit UnknownLabel(const std::string& token)
        : CategorizationParseError("unknown channel label '" + token + "'"), token(token) {}
    std::string token;
};

/// CoT generation response lacks the `Process:` marker.
class MarkerMissing : public Error {
public:
    using Error::Error;
};

/// Prediction response has no parseable `Result:` marker.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Zero vector where a direction is required.
class DegenerateEmbedding : public Error {
public:
    using Error::Error;
};

/// Persisted library does not match the configured providers/scheme.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

/// Too many per-entry failures while building the reference library.
class BuildError : public Error {
public:
    using Error::Error;
};

/// A document whose prediction failed twice; recorded, scored as all-wrong.
class PredictionFailed : public Error {
public:
    PredictionFailed(const std::string& doc_id, const std::string& why)
        : Error("prediction failed for document " + doc_id + ": " + why), doc_id(doc_id) {}
    std::string doc_id;
};

}  // namespace eerpd
