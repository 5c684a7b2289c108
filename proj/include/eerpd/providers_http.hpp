#pragma once

#include <cctype>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "eerpd/errors.hpp"
#include "eerpd/providers.hpp"
#include "eerpd/util.hpp"

// OpenAI-compatible chat-completions and embeddings clients. The transport
// is injectable so the wire format, retry, and error paths are testable
// without a server.

namespace eerpd {

struct HttpResponse {
    int status = 0;        // 0 = transport failure (no response at all)
    std::string body;
    std::string error;     // transport diagnostic when status == 0
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& bearer_token,
                              const std::string& json_body) = 0;
};

/// Production transport over cpp-httplib.
class HttplibTransport : public HttpTransport {
public:
    HttpResponse post(const std::string& url, const std::string& bearer_token,
                      const std::string& json_body) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
        auto result = client.Post(path, headers, json_body, "application/json");
        if (!result) return {0, "", httplib::to_string(result.error())};
        return {result->status, result->body, ""};
    }

    /// "https://host:port/v1" -> ("https://host:port", "/v1").
    static std::pair<std::string, std::string> split_url(const std::string& url) {
        std::size_t scheme = url.find("://");
        if (scheme == std::string::npos)
            throw ConfigError("endpoint '" + url + "' must include a scheme");
        std::size_t slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) return {url, ""};
        return {url.substr(0, slash), url.substr(slash)};
    }
};

struct HttpBackendConfig {
    std::string endpoint;        // base URL, e.g. https://api.openai.com/v1
    std::string model;
    std::string credential_env = "EERPD_API_KEY";
    int retries = 3;             // attempts, not re-tries after the first
    int retry_base_ms = 500;     // doubled per attempt, plus jitter
    std::size_t max_chars = 0;   // embeddings only
    std::size_t embed_dim = 0;   // embeddings only; fixed per provider/model
};

namespace detail {

inline std::string sanitize_for_path(std::string_view s) {
    std::string out;
    for (char c : s)
        out += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
    return out;
}

inline std::string read_credential(const std::string& env_name) {
    const char* v = std::getenv(env_name.c_str());
    if (v == nullptr || *v == '\0')
        throw ConfigError("credential environment variable " + env_name + " is not set");
    return v;
}

/// Shared request loop: bounded attempts, exponential backoff with jitter,
/// retry on transport failure and retryable statuses, fail fast otherwise.
inline std::string post_with_retries(HttpTransport& transport, const std::string& url,
                                     const std::string& token, const std::string& body,
                                     int retries, int retry_base_ms) {
    std::mt19937_64 jitter_gen(std::random_device{}());
    std::string last_error;
    for (int attempt = 0; attempt < retries; ++attempt) {
        if (attempt > 0) {
            auto base = static_cast<std::uint64_t>(retry_base_ms) << (attempt - 1);
            auto jitter = retry_base_ms > 0 ? bounded_rand(jitter_gen, base + 1) : 0;
            std::this_thread::sleep_for(std::chrono::milliseconds(base + jitter));
        }
        HttpResponse r = transport.post(url, token, body);
        if (r.status == 0) {
            last_error = "transport failure: " + r.error;
            continue;
        }
        if (r.status == 429 || r.status >= 500) {
            last_error = "status " + std::to_string(r.status) + ": " + r.body.substr(0, 200);
            continue;
        }
        if (r.status < 200 || r.status >= 300)
            throw ProviderError("request to " + url + " failed with status " +
                                    std::to_string(r.status) + ": " + r.body.substr(0, 200),
                                r.status);
        return r.body;
    }
    throw ProviderError("request to " + url + " failed after " + std::to_string(retries) +
                        " attempts; last error: " + last_error);
}

}  // namespace detail

class HttpChatProvider : public ChatProvider {
public:
    HttpChatProvider(HttpBackendConfig cfg, std::shared_ptr<HttpTransport> transport = nullptr)
        : cfg_(std::move(cfg)),
          transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
          token_(detail::read_credential(cfg_.credential_env)) {
        if (cfg_.endpoint.empty()) throw ConfigError("chat endpoint is not configured");
    }

    std::string id() const override { return "http-" + detail::sanitize_for_path(cfg_.model); }
    std::string model() const override { return cfg_.model; }

    std::string complete(const ChatRequest& req) override {
        nlohmann::json body{
            {"model", cfg_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
        std::string response =
            detail::post_with_retries(*transport_, cfg_.endpoint + "/chat/completions", token_,
                                      body.dump(), cfg_.retries, cfg_.retry_base_ms);
        try {
            auto j = nlohmann::json::parse(response);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError("malformed chat response: " + std::string(e.what()) +
                                "; body starts: " + response.substr(0, 200));
        }
    }

private:
    HttpBackendConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
    std::string token_;
};

class HttpEmbedProvider : public EmbedProvider {
public:
    HttpEmbedProvider(HttpBackendConfig cfg, std::shared_ptr<HttpTransport> transport = nullptr)
        : cfg_(std::move(cfg)),
          transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
          token_(detail::read_credential(cfg_.credential_env)) {
        if (cfg_.endpoint.empty()) throw ConfigError("embedding endpoint is not configured");
        if (cfg_.embed_dim == 0)
            throw ConfigError("embed_dim must be configured for an HTTP embedding backend");
    }

    std::string id() const override { return "http-" + detail::sanitize_for_path(cfg_.model); }
    std::string model() const override { return cfg_.model; }
    std::size_t dim() const override { return cfg_.embed_dim; }
    std::size_t max_chars() const override { return cfg_.max_chars; }

    std::vector<double> embed_raw(const EmbedRequest& req) override {
        nlohmann::json body{{"model", cfg_.model}, {"input", req.text}};
        std::string response =
            detail::post_with_retries(*transport_, cfg_.endpoint + "/embeddings", token_,
                                      body.dump(), cfg_.retries, cfg_.retry_base_ms);
        try {
            auto j = nlohmann::json::parse(response);
            return j.at("data").at(0).at("embedding").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError("malformed embedding response: " + std::string(e.what()) +
                                "; body starts: " + response.substr(0, 200));
        }
    }

private:
    HttpBackendConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
    std::string token_;
};

}  // namespace eerpd
