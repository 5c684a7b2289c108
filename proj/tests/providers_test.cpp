#include <gtest/gtest.h>

#include <unistd.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "eerpd/predict.hpp"
#include "eerpd/prompts.hpp"
#include "eerpd/providers.hpp"
#include "eerpd/providers_http.hpp"
#include "eerpd/util.hpp"

using namespace eerpd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("eerpd_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

class CountingChat : public ChatProvider {
public:
    explicit CountingChat(std::string response) : response_(std::move(response)) {}
    std::string id() const override { return "count-chat"; }
    std::string model() const override { return "m1"; }
    std::string complete(const ChatRequest&) override {
        ++calls;
        return response_;
    }
    int calls = 0;

private:
    std::string response_;
};

class CountingEmbed : public EmbedProvider {
public:
    CountingEmbed(std::vector<double> v, std::size_t dim, std::size_t max_chars = 0)
        : v_(std::move(v)), dim_(dim), max_chars_(max_chars) {}
    std::string id() const override { return "count-embed"; }
    std::string model() const override { return "m1"; }
    std::size_t dim() const override { return dim_; }
    std::size_t max_chars() const override { return max_chars_; }
    std::vector<double> embed_raw(const EmbedRequest&) override {
        ++calls;
        return v_;
    }
    int calls = 0;

private:
    std::vector<double> v_;
    std::size_t dim_;
    std::size_t max_chars_;
};

// Independent re-derivation of the hashing embedder: different tokenizer
// (replace-then-stream) and inline FNV so a shared bug cannot hide.
std::vector<double> hash_embed_oracle(std::string_view text) {
    std::string cleaned;
    for (char c : text)
        cleaned += std::isalnum(static_cast<unsigned char>(c))
                       ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                       : ' ';
    std::vector<double> v(64, 0.0);
    std::istringstream ss(cleaned);
    std::string tok;
    while (ss >> tok) {
        std::uint64_t h = 14695981039346656037ULL ^ 0x6d6f636bULL;
        for (unsigned char c : tok) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        v[h % 64] += ((h >> 62) & 1) ? 1.0 : -1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

struct RecordedCall {
    std::string url;
    std::string token;
    std::string body;
};

class FakeTransport : public HttpTransport {
public:
    std::vector<HttpResponse> script;  // consumed in order; last entry repeats
    std::vector<RecordedCall> calls;

    HttpResponse post(const std::string& url, const std::string& token,
                      const std::string& body) override {
        calls.push_back({url, token, body});
        if (script.empty()) return {200, "{}", ""};
        std::size_t i = std::min(calls.size() - 1, script.size() - 1);
        return script[i];
    }
};

HttpBackendConfig fake_cfg() {
    HttpBackendConfig cfg;
    cfg.endpoint = "https://api.example.test/v1";
    cfg.model = "test-model";
    cfg.credential_env = "EERPD_TEST_KEY";
    cfg.retries = 3;
    cfg.retry_base_ms = 0;  // no sleeping in tests
    return cfg;
}

}  // namespace

TEST(CacheKey, SensitiveToEveryChatField) {
    ChatRequest base{"prov", "model", "prompt", 0.0, 1024};
    std::string k = cache_key(base);
    EXPECT_EQ(k.size(), 64u);
    for (char c : k) EXPECT_TRUE(std::isxdigit(static_cast<unsigned char>(c)) && !std::isupper(c));
    EXPECT_EQ(cache_key(base), k);

    auto differs = [&](ChatRequest r) { EXPECT_NE(cache_key(r), k); };
    ChatRequest r = base;
    r.provider_id = "prov2";
    differs(r);
    r = base;
    r.model_id = "model2";
    differs(r);
    r = base;
    r.prompt = "prompt!";
    differs(r);
    r = base;
    r.temperature = 0.5;
    differs(r);
    r = base;
    r.max_tokens = 2048;
    differs(r);
}

TEST(CacheKey, ChatAndEmbedNamespacesAreDisjoint) {
    ChatRequest c{"p", "m", "same text", 0.0, 1024};
    EmbedRequest e{"p", "m", "same text"};
    EXPECT_NE(cache_key(c), cache_key(e));
    EmbedRequest e2 = e;
    e2.text += " ";
    EXPECT_NE(cache_key(e2), cache_key(e));
}

TEST(CachedChat, MissComputesHitReplaysExactBytes) {
    TempDir dir("chatcache");
    auto inner = std::make_shared<CountingChat>("response body\nwith two lines");
    CachedChat chat(dir.path, inner);

    std::string first = chat.chat("hello", 0.0, 1024);
    EXPECT_EQ(first, "response body\nwith two lines");
    EXPECT_EQ(inner->calls, 1);

    std::string second = chat.chat("hello", 0.0, 1024);
    EXPECT_EQ(second, first);
    EXPECT_EQ(inner->calls, 1) << "cache hit must not touch the backend";

    // Layout: <dir>/<provider>/<first two of digest>/<digest>.txt
    ChatRequest req{"count-chat", "m1", "hello", 0.0, 1024};
    std::string digest = cache_key(req);
    fs::path expect = dir.path / "count-chat" / digest.substr(0, 2) / (digest + ".txt");
    ASSERT_TRUE(fs::exists(expect));
    EXPECT_EQ(read_file(expect), first);

    // The store is write-once: whatever is on disk wins, byte for byte.
    write_file(expect, "doctored");
    EXPECT_EQ(chat.chat("hello", 0.0, 1024), "doctored");
    EXPECT_EQ(inner->calls, 1);
}

TEST(CachedChat, ParametersSelectDistinctSlots) {
    TempDir dir("chatparams");
    auto inner = std::make_shared<CountingChat>("r");
    CachedChat chat(dir.path, inner);
    chat.chat("p", 0.0, 1024);
    chat.chat("p", 0.7, 1024);
    chat.chat("p", 0.0, 2048);
    chat.chat("p ", 0.0, 1024);
    EXPECT_EQ(inner->calls, 4);
}

TEST(CachedEmbed, RoundTripIsExactAndCached) {
    TempDir dir("embedcache");
    auto inner = std::make_shared<MockEmbedProvider>();
    CachedEmbed embed(dir.path, inner);

    std::vector<double> a = embed.embed("the quick brown fox");
    std::vector<double> b = embed.embed("the quick brown fox");
    ASSERT_EQ(a.size(), 64u);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(a[i], b[i]) << "cached replay must be bitwise identical at " << i;

    EmbedRequest req{"mock-embed", "hash64-v1", "the quick brown fox"};
    std::string digest = cache_key(req);
    fs::path expect = dir.path / "mock-embed" / digest.substr(0, 2) / (digest + ".vec");
    EXPECT_TRUE(fs::exists(expect));
}

TEST(CachedEmbed, RejectsEmptyTextAndBadDimensions) {
    TempDir dir("embedbad");
    CachedEmbed ok(dir.path, std::make_shared<MockEmbedProvider>());
    EXPECT_THROW(ok.embed("   "), Error);

    // Backend that lies about its dimension.
    auto liar = std::make_shared<CountingEmbed>(std::vector<double>{1.0, 2.0}, 3);
    CachedEmbed bad(dir.path, liar);
    EXPECT_THROW(bad.embed("x"), ProviderError);

    // Corrupt cache entry with the wrong number of rows.
    auto honest = std::make_shared<CountingEmbed>(std::vector<double>{1.0, 2.0, 3.0}, 3);
    CachedEmbed h(dir.path, honest);
    h.embed("y");
    EmbedRequest req{"count-embed", "m1", "y"};
    std::string digest = cache_key(req);
    fs::path slot = dir.path / "count-embed" / digest.substr(0, 2) / (digest + ".vec");
    ASSERT_TRUE(fs::exists(slot));
    write_file(slot, "1\n2\n");
    EXPECT_THROW(h.embed("y"), ProviderError);
}

TEST(CachedEmbed, ChunkTextPacksGreedilyAndHardCutsOversizedUnits) {
    auto chunks = CachedEmbed::chunk_text("aaaa. bbbb. cc.", 9);
    ASSERT_EQ(chunks.size(), 2u);
    EXPECT_EQ(chunks[0], "aaaa.");
    EXPECT_EQ(chunks[1], "bbbb. cc.");

    std::string giant(25, 'x');
    auto cut = CachedEmbed::chunk_text(giant, 10);
    ASSERT_EQ(cut.size(), 3u);
    EXPECT_EQ(cut[0], std::string(10, 'x'));
    EXPECT_EQ(cut[1], std::string(10, 'x'));
    EXPECT_EQ(cut[2], std::string(5, 'x'));

    // Every chunk respects the limit and drops no non-space content.
    std::string text = "One sentence here. Another one follows! Tiny. " + std::string(40, 'y') +
                       " trailing thought?";
    for (std::size_t limit : {12u, 20u, 64u}) {
        std::string glued;
        for (const auto& c : CachedEmbed::chunk_text(text, limit)) {
            EXPECT_LE(c.size(), limit);
            glued += c;
        }
        std::string squeeze_text, squeeze_glued;
        for (char ch : text)
            if (!std::isspace(static_cast<unsigned char>(ch))) squeeze_text += ch;
        for (char ch : glued)
            if (!std::isspace(static_cast<unsigned char>(ch))) squeeze_glued += ch;
        EXPECT_EQ(squeeze_glued, squeeze_text) << "limit " << limit;
    }
}

TEST(CachedEmbed, OverflowMeansChunkAverage) {
    TempDir dir("embedchunk");
    std::string text = "alpha beta gamma. delta epsilon zeta. eta theta iota.";
    std::size_t limit = 20;

    auto limited = std::make_shared<MockEmbedProvider>(limit);
    CachedEmbed embed(dir.path, limited);
    std::vector<double> pooled = embed.embed(text);

    MockEmbedProvider raw;
    auto chunks = CachedEmbed::chunk_text(text, limit);
    ASSERT_GT(chunks.size(), 1u);
    std::vector<double> mean(64, 0.0);
    for (const auto& c : chunks) {
        auto v = raw.embed_raw({"mock-embed", "hash64-v1", c});
        for (std::size_t i = 0; i < 64; ++i) mean[i] += v[i];
    }
    for (double& x : mean) x /= static_cast<double>(chunks.size());

    ASSERT_EQ(pooled.size(), mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) EXPECT_EQ(pooled[i], mean[i]) << i;

    // Short texts bypass chunking entirely.
    std::vector<double> direct = embed.embed("alpha beta");
    auto whole = raw.embed_raw({"mock-embed", "hash64-v1", "alpha beta"});
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(direct[i], whole[i]);
}

TEST(MockEmbed, MatchesIndependentOracle) {
    MockEmbedProvider p;
    for (std::string text : {
             std::string("I felt happy today."),
             std::string("the quick brown fox jumps over the lazy dog"),
             std::string("UPPER lower MiXeD 123 tokens-with-dashes"),
             std::string("https://example.com/path?query=1"),
             std::string("one"),
         }) {
        auto got = p.embed_raw({"mock-embed", "hash64-v1", text});
        auto want = hash_embed_oracle(text);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], want[i]) << text << " @" << i;
    }
}

TEST(MockEmbed, BagOfWordsProperties) {
    MockEmbedProvider p;
    auto v1 = p.embed_raw({"", "", "alpha beta gamma"});
    auto v2 = p.embed_raw({"", "", "gamma   ALPHA, beta!"});
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(v1[i], v2[i]) << "order/case must not matter";

    double norm = 0.0;
    for (double x : v1) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-12);

    auto zero = p.embed_raw({"", "", "!!! ??? ..."});
    for (double x : zero) EXPECT_EQ(x, 0.0);

    EXPECT_EQ(p.dim(), 64u);
    EXPECT_EQ(p.max_chars(), 0u);
    EXPECT_EQ(MockEmbedProvider(512).max_chars(), 512u);
}

TEST(MockChat, CategorizationFollowsAffectLexicon) {
    MockChatProvider chat;
    std::string text =
        "I felt happy at the parade. I keep a steady ledger.|||https://example.com/a";
    std::string prompt = prompts::categorization_prompt(text);
    std::string out = chat.complete({"mock-chat", "rule-v1", prompt, 0.0, 1024});
    EXPECT_EQ(out,
              "0. [Emotion]\n"
              "1. [Emotion Regulation]\n"
              "2. [Emotion Regulation]\n");

    // Every lexicon word flips its sentence to Emotion; calm text never does.
    for (std::string_view w : mock::affect_lexicon()) {
        std::string p2 =
            prompts::categorization_prompt("I was " + std::string(w) + " yesterday evening.");
        EXPECT_EQ(chat.complete({"", "", p2, 0.0, 1024}), "0. [Emotion]\n") << w;
    }
    EXPECT_TRUE(mock::mentions_affect("HAPPY days"));
    EXPECT_FALSE(mock::mentions_affect("unhappy days")) << "substrings must not match";
    EXPECT_FALSE(mock::mentions_affect("a calm steady walk"));
}

TEST(MockChat, ProcessGenerationNamesTheGoldLabel) {
    MockChatProvider chat;
    std::string mbti = chat.complete(
        {"", "", prompts::cot_prompt(Scheme::MBTI, "INFJ", "Some posts here."), 0.0, 1024});
    EXPECT_EQ(mbti.rfind("Process: ", 0), 0u);
    EXPECT_TRUE(contains(mbti, "INFJ"));

    std::string big5 = chat.complete(
        {"", "", prompts::cot_prompt(Scheme::BigFive, "ynyyn", "Essay text."), 0.0, 1024});
    EXPECT_EQ(big5.rfind("Process: ", 0), 0u);
    EXPECT_TRUE(contains(big5, "ynyyn"));
}

TEST(MockChat, PredictionTakesPerDimensionMajorityWithTiesPositive) {
    MockChatProvider chat;
    auto run = [&](Scheme scheme, std::vector<prompts::ExemplarSlot> ex) {
        std::string p = prompts::prediction_prompt(scheme, ex, "Target text.", ex.size(), true);
        std::string out = chat.complete({"", "", p, 0.0, 1024});
        return parse_prediction(out, scheme).first.to_string();
    };

    // I/E differs (one each, tie -> I), N agrees, T/F and J/P tie -> positive.
    EXPECT_EQ(run(Scheme::MBTI,
                  {{"t1", "INTJ", " r1"}, {"t2", "ENFP", " r2"}}),
              "INTJ");
    // Unanimous negatives stay negative.
    EXPECT_EQ(run(Scheme::MBTI,
                  {{"t1", "ESFP", " r1"}, {"t2", "ESFP", " r2"}}),
              "ESFP");
    // Big Five: n+n -> n, y+n tie -> y.
    EXPECT_EQ(run(Scheme::BigFive,
                  {{"t1", "nynnn", " r1"}, {"t2", "nnyny", " r2"}}),
              "nyyny");
}

TEST(MockChat, PredictionIgnoresFormatStanzaAndRejectsUnknownShape) {
    MockChatProvider chat;
    // The "Result: {..." stanza contributes no vote: with one exemplar the
    // answer is exactly that exemplar's label.
    std::string p = prompts::prediction_prompt(Scheme::MBTI, {{"t", "ISFP", " r"}}, "T.", 1, true);
    std::string out = chat.complete({"", "", p, 0.0, 1024});
    EXPECT_TRUE(contains(out, "Result: ISFP\n"));

    EXPECT_THROW(chat.complete({"", "", "What is the weather like?", 0.0, 1024}), ProviderError);
}

TEST(HttpChat, SendsWireFormatAndParsesContent) {
    ::setenv("EERPD_TEST_KEY", "sekret-token", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->script.push_back(
        {200, R"({"choices":[{"message":{"content":"hello there"}}]})", ""});
    HttpChatProvider chat(fake_cfg(), transport);

    EXPECT_EQ(chat.id(), "http-test-model");
    EXPECT_EQ(chat.model(), "test-model");

    std::string out = chat.complete({chat.id(), chat.model(), "the prompt", 0.25, 333});
    EXPECT_EQ(out, "hello there");

    ASSERT_EQ(transport->calls.size(), 1u);
    const auto& call = transport->calls[0];
    EXPECT_EQ(call.url, "https://api.example.test/v1/chat/completions");
    EXPECT_EQ(call.token, "sekret-token");
    auto j = nlohmann::json::parse(call.body);
    EXPECT_EQ(j.at("model"), "test-model");
    EXPECT_EQ(j.at("temperature"), 0.25);
    EXPECT_EQ(j.at("max_tokens"), 333);
    ASSERT_EQ(j.at("messages").size(), 1u);
    EXPECT_EQ(j.at("messages").at(0).at("role"), "user");
    EXPECT_EQ(j.at("messages").at(0).at("content"), "the prompt");
}

TEST(HttpChat, RetriesRetryableStatusesThenSucceeds) {
    ::setenv("EERPD_TEST_KEY", "k", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->script.push_back({429, "slow down", ""});
    transport->script.push_back({503, "unavailable", ""});
    transport->script.push_back({200, R"({"choices":[{"message":{"content":"ok"}}]})", ""});
    HttpChatProvider chat(fake_cfg(), transport);
    EXPECT_EQ(chat.complete({"", "", "p", 0.0, 10}), "ok");
    EXPECT_EQ(transport->calls.size(), 3u);
}

TEST(HttpChat, TransportFailuresAreRetriedAndReported) {
    ::setenv("EERPD_TEST_KEY", "k", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->script.push_back({0, "", "connection refused"});
    HttpChatProvider chat(fake_cfg(), transport);
    try {
        chat.complete({"", "", "p", 0.0, 10});
        FAIL() << "expected ProviderError";
    } catch (const ProviderError& e) {
        EXPECT_TRUE(contains(e.what(), "after 3 attempts"));
        EXPECT_TRUE(contains(e.what(), "connection refused"));
    }
    EXPECT_EQ(transport->calls.size(), 3u) << "all attempts must be used";
}

TEST(HttpChat, ClientErrorsFailFastWithStatus) {
    ::setenv("EERPD_TEST_KEY", "k", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->script.push_back({404, "no such model", ""});
    HttpChatProvider chat(fake_cfg(), transport);
    try {
        chat.complete({"", "", "p", 0.0, 10});
        FAIL() << "expected ProviderError";
    } catch (const ProviderError& e) {
        ASSERT_TRUE(e.status.has_value());
        EXPECT_EQ(*e.status, 404);
    }
    EXPECT_EQ(transport->calls.size(), 1u) << "client errors must not be retried";
}

TEST(HttpChat, MalformedBodyAndConfigErrors) {
    ::setenv("EERPD_TEST_KEY", "k", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->script.push_back({200, "not json at all", ""});
    HttpChatProvider chat(fake_cfg(), transport);
    EXPECT_THROW(chat.complete({"", "", "p", 0.0, 10}), ProviderError);

    auto cfg = fake_cfg();
    cfg.endpoint = "";
    EXPECT_THROW(HttpChatProvider(cfg, transport), ConfigError);

    auto cfg2 = fake_cfg();
    cfg2.credential_env = "EERPD_SURELY_UNSET_VAR";
    ::unsetenv("EERPD_SURELY_UNSET_VAR");
    EXPECT_THROW(HttpChatProvider(cfg2, transport), ConfigError);
}

TEST(HttpEmbed, ParsesVectorsAndValidatesConfig) {
    ::setenv("EERPD_TEST_KEY", "k", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->script.push_back({200, R"({"data":[{"embedding":[0.125,-0.5,1.0]}]})", ""});
    auto cfg = fake_cfg();
    cfg.embed_dim = 3;
    cfg.max_chars = 77;
    HttpEmbedProvider embed(cfg, transport);

    EXPECT_EQ(embed.dim(), 3u);
    EXPECT_EQ(embed.max_chars(), 77u);
    auto v = embed.embed_raw({embed.id(), embed.model(), "text to embed"});
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0], 0.125);
    EXPECT_EQ(v[1], -0.5);
    EXPECT_EQ(v[2], 1.0);

    ASSERT_EQ(transport->calls.size(), 1u);
    EXPECT_EQ(transport->calls[0].url, "https://api.example.test/v1/embeddings");
    auto j = nlohmann::json::parse(transport->calls[0].body);
    EXPECT_EQ(j.at("model"), "test-model");
    EXPECT_EQ(j.at("input"), "text to embed");

    auto no_dim = fake_cfg();
    EXPECT_THROW(HttpEmbedProvider(no_dim, transport), ConfigError);
}

TEST(HttpTransportHelpers, SplitUrlAndPathSanitizer) {
    auto [origin, path] = HttplibTransport::split_url("https://host:8080/v1/extra");
    EXPECT_EQ(origin, "https://host:8080");
    EXPECT_EQ(path, "/v1/extra");
    auto [o2, p2] = HttplibTransport::split_url("http://bare-host");
    EXPECT_EQ(o2, "http://bare-host");
    EXPECT_EQ(p2, "");
    EXPECT_THROW(HttplibTransport::split_url("no-scheme-here"), ConfigError);

    ::setenv("EERPD_TEST_KEY", "k", 1);
    auto cfg = fake_cfg();
    cfg.model = "org/model:v2";
    HttpChatProvider chat(cfg, std::make_shared<FakeTransport>());
    EXPECT_EQ(chat.id(), "http-org-model-v2");
}
