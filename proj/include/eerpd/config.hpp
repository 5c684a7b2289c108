#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "eerpd/corpus.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/labels.hpp"
#include "eerpd/predict.hpp"
#include "eerpd/providers.hpp"
#include "eerpd/providers_http.hpp"
#include "eerpd/retrieve.hpp"
#include "eerpd/util.hpp"

namespace eerpd {

/// Everything a run needs, resolvable from a flat `key = value` file plus
/// command-line overrides. The serialized form is canonical: every key is
/// written, sorted, so the snapshot dropped next to each report pins the
/// exact configuration that produced it.
struct RunConfig {
    std::string dataset = "kaggle";  // kaggle | essays
    std::string train_path;
    std::string test_path;
    double sample_frac = 1.0;        // applied to the test split
    double train_sample_frac = 1.0;
    std::uint64_t seed = 42;

    double alpha = 0.7;
    std::string alpha_orientation = "regulation";  // regulation | emotion
    std::size_t k = 2;
    bool include_cot = true;
    bool exclude_self = true;

    std::string chat_provider = "mock";  // mock | http
    std::string chat_model;
    std::string chat_endpoint;
    std::string chat_credential_env = "EERPD_API_KEY";
    std::size_t chat_max_tokens = 2048;
    int chat_retries = 3;
    int chat_retry_base_ms = 500;

    std::string embed_provider = "mock";
    std::string embed_model;
    std::string embed_endpoint;
    std::string embed_credential_env = "EERPD_API_KEY";
    std::size_t embed_max_chars = 0;  // 0 = no chunking
    std::size_t embed_dim = 0;        // required for http embeddings
    int embed_retries = 3;
    int embed_retry_base_ms = 500;

    std::string cache_dir = "cache";
    std::string library_path = "library.jsonl";
    std::string report_dir = "reports";
    std::size_t concurrency = 1;

    std::string essays_text_column = "TEXT";
    std::string essays_trait_columns = "cAGR,cCON,cEXT,cNEU,cOPN";
};

namespace detail {

inline double config_double(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const Error&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

inline std::uint64_t config_uint(const std::string& key, const std::string& value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw ConfigError(key + ": integer out of range: '" + value + "'");
    }
}

inline bool config_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

}  // namespace detail

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset") cfg.dataset = value;
    else if (key == "train_path") cfg.train_path = value;
    else if (key == "test_path") cfg.test_path = value;
    else if (key == "sample_frac") cfg.sample_frac = detail::config_double(key, value);
    else if (key == "train_sample_frac") cfg.train_sample_frac = detail::config_double(key, value);
    else if (key == "seed") cfg.seed = detail::config_uint(key, value);
    else if (key == "alpha") cfg.alpha = detail::config_double(key, value);
    else if (key == "alpha_orientation") cfg.alpha_orientation = value;
    else if (key == "k") cfg.k = static_cast<std::size_t>(detail::config_uint(key, value));
    else if (key == "include_cot") cfg.include_cot = detail::config_bool(key, value);
    else if (key == "exclude_self") cfg.exclude_self = detail::config_bool(key, value);
    else if (key == "chat.provider") cfg.chat_provider = value;
    else if (key == "chat.model") cfg.chat_model = value;
    else if (key == "chat.endpoint") cfg.chat_endpoint = value;
    else if (key == "chat.credential_env") cfg.chat_credential_env = value;
    else if (key == "chat.max_tokens") cfg.chat_max_tokens = static_cast<std::size_t>(detail::config_uint(key, value));
    else if (key == "chat.retries") cfg.chat_retries = static_cast<int>(detail::config_uint(key, value));
    else if (key == "chat.retry_base_ms") cfg.chat_retry_base_ms = static_cast<int>(detail::config_uint(key, value));
    else if (key == "embed.provider") cfg.embed_provider = value;
    else if (key == "embed.model") cfg.embed_model = value;
    else if (key == "embed.endpoint") cfg.embed_endpoint = value;
    else if (key == "embed.credential_env") cfg.embed_credential_env = value;
    else if (key == "embed.max_chars") cfg.embed_max_chars = static_cast<std::size_t>(detail::config_uint(key, value));
    else if (key == "embed.dim") cfg.embed_dim = static_cast<std::size_t>(detail::config_uint(key, value));
    else if (key == "embed.retries") cfg.embed_retries = static_cast<int>(detail::config_uint(key, value));
    else if (key == "embed.retry_base_ms") cfg.embed_retry_base_ms = static_cast<int>(detail::config_uint(key, value));
    else if (key == "cache_dir") cfg.cache_dir = value;
    else if (key == "library_path") cfg.library_path = value;
    else if (key == "report_dir") cfg.report_dir = value;
    else if (key == "concurrency") cfg.concurrency = static_cast<std::size_t>(detail::config_uint(key, value));
    else if (key == "essays.text_column") cfg.essays_text_column = value;
    else if (key == "essays.trait_columns") cfg.essays_trait_columns = value;
    else throw ConfigError("unknown configuration key: '" + key + "'");
}

inline RunConfig parse_config_text(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    for (std::string_view raw : split_on(text, "\n")) {
        ++line_no;
        std::string line{raw};
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        apply_setting(cfg, key, value);
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_config_text(text);
}

inline void validate(const RunConfig& cfg) {
    if (cfg.dataset != "kaggle" && cfg.dataset != "essays")
        throw ConfigError("dataset must be kaggle or essays, got '" + cfg.dataset + "'");
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
    alpha_orientation_from_name(cfg.alpha_orientation);  // throws on anything unknown
    if (cfg.k < 1) throw ConfigError("k must be at least 1");
    if (!(cfg.sample_frac > 0.0 && cfg.sample_frac <= 1.0))
        throw ConfigError("sample_frac must be in (0, 1]");
    if (!(cfg.train_sample_frac > 0.0 && cfg.train_sample_frac <= 1.0))
        throw ConfigError("train_sample_frac must be in (0, 1]");
    if (cfg.concurrency < 1) throw ConfigError("concurrency must be at least 1");
    for (const std::string* p : {&cfg.chat_provider, &cfg.embed_provider})
        if (*p != "mock" && *p != "http")
            throw ConfigError("provider must be mock or http, got '" + *p + "'");
    if (cfg.chat_provider == "http" && (cfg.chat_endpoint.empty() || cfg.chat_model.empty()))
        throw ConfigError("chat.provider = http requires chat.endpoint and chat.model");
    if (cfg.embed_provider == "http") {
        if (cfg.embed_endpoint.empty() || cfg.embed_model.empty())
            throw ConfigError("embed.provider = http requires embed.endpoint and embed.model");
        if (cfg.embed_dim == 0) throw ConfigError("embed.provider = http requires embed.dim");
    }
    std::vector<std::string> traits;
    for (auto part : split_on(cfg.essays_trait_columns, ","))
        traits.emplace_back(trim(part));
    if (cfg.dataset == "essays" && traits.size() != 5)
        throw ConfigError("essays.trait_columns must name 5 columns");
}

inline std::map<std::string, std::string> config_snapshot(const RunConfig& cfg) {
    return {
        {"alpha", format_double(cfg.alpha)},
        {"alpha_orientation", cfg.alpha_orientation},
        {"cache_dir", cfg.cache_dir},
        {"chat.credential_env", cfg.chat_credential_env},
        {"chat.endpoint", cfg.chat_endpoint},
        {"chat.max_tokens", std::to_string(cfg.chat_max_tokens)},
        {"chat.model", cfg.chat_model},
        {"chat.provider", cfg.chat_provider},
        {"chat.retries", std::to_string(cfg.chat_retries)},
        {"chat.retry_base_ms", std::to_string(cfg.chat_retry_base_ms)},
        {"concurrency", std::to_string(cfg.concurrency)},
        {"dataset", cfg.dataset},
        {"embed.credential_env", cfg.embed_credential_env},
        {"embed.dim", std::to_string(cfg.embed_dim)},
        {"embed.endpoint", cfg.embed_endpoint},
        {"embed.max_chars", std::to_string(cfg.embed_max_chars)},
        {"embed.model", cfg.embed_model},
        {"embed.provider", cfg.embed_provider},
        {"embed.retries", std::to_string(cfg.embed_retries)},
        {"embed.retry_base_ms", std::to_string(cfg.embed_retry_base_ms)},
        {"essays.text_column", cfg.essays_text_column},
        {"essays.trait_columns", cfg.essays_trait_columns},
        {"exclude_self", cfg.exclude_self ? "true" : "false"},
        {"include_cot", cfg.include_cot ? "true" : "false"},
        {"k", std::to_string(cfg.k)},
        {"library_path", cfg.library_path},
        {"report_dir", cfg.report_dir},
        {"sample_frac", format_double(cfg.sample_frac)},
        {"seed", std::to_string(cfg.seed)},
        {"test_path", cfg.test_path},
        {"train_path", cfg.train_path},
        {"train_sample_frac", format_double(cfg.train_sample_frac)},
    };
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, value] : config_snapshot(cfg)) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

inline Scheme config_scheme(const RunConfig& cfg) {
    return cfg.dataset == "kaggle" ? Scheme::MBTI : Scheme::BigFive;
}

inline PredictOptions predict_options(const RunConfig& cfg) {
    PredictOptions opt;
    opt.alpha = cfg.alpha;
    opt.orientation = alpha_orientation_from_name(cfg.alpha_orientation);
    opt.k = cfg.k;
    opt.include_cot = cfg.include_cot;
    opt.exclude_self = cfg.exclude_self;
    opt.chat_max_tokens = cfg.chat_max_tokens;
    return opt;
}

inline CachedChat make_chat(const RunConfig& cfg) {
    std::shared_ptr<ChatProvider> provider;
    if (cfg.chat_provider == "mock") {
        provider = std::make_shared<MockChatProvider>();
    } else {
        HttpBackendConfig http;
        http.endpoint = cfg.chat_endpoint;
        http.model = cfg.chat_model;
        http.credential_env = cfg.chat_credential_env;
        http.retries = cfg.chat_retries;
        http.retry_base_ms = cfg.chat_retry_base_ms;
        provider = std::make_shared<HttpChatProvider>(http);
    }
    return CachedChat{cfg.cache_dir, provider};
}

inline CachedEmbed make_embed(const RunConfig& cfg) {
    std::shared_ptr<EmbedProvider> provider;
    if (cfg.embed_provider == "mock") {
        provider = std::make_shared<MockEmbedProvider>(cfg.embed_max_chars);
    } else {
        HttpBackendConfig http;
        http.endpoint = cfg.embed_endpoint;
        http.model = cfg.embed_model;
        http.credential_env = cfg.embed_credential_env;
        http.retries = cfg.embed_retries;
        http.retry_base_ms = cfg.embed_retry_base_ms;
        http.max_chars = cfg.embed_max_chars;
        http.embed_dim = cfg.embed_dim;
        provider = std::make_shared<HttpEmbedProvider>(http);
    }
    return CachedEmbed{cfg.cache_dir, provider};
}

inline EssaysColumns essays_columns(const RunConfig& cfg) {
    EssaysColumns cols;
    cols.text = cfg.essays_text_column;
    std::vector<std::string> traits;
    for (auto part : split_on(cfg.essays_trait_columns, ","))
        traits.emplace_back(trim(part));
    if (traits.size() != cols.traits.size())
        throw ConfigError("essays.trait_columns must name 5 columns");
    for (std::size_t i = 0; i < traits.size(); ++i) cols.traits[i] = traits[i];
    return cols;
}

/// Loads one split. `train` selects the path and sampling fraction.
inline std::vector<Document> load_split(const RunConfig& cfg, bool train) {
    const std::string& path = train ? cfg.train_path : cfg.test_path;
    double frac = train ? cfg.train_sample_frac : cfg.sample_frac;
    if (path.empty())
        throw ConfigError(std::string(train ? "train_path" : "test_path") + " is not set");
    if (cfg.dataset == "kaggle") return load_kaggle(path, frac, cfg.seed);
    return load_essays(path, frac, cfg.seed, essays_columns(cfg));
}

}  // namespace eerpd
