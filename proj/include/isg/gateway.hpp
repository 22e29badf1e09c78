#pragma once

// Model gateway: the one place requests leave the process. Owns the
// response cache, the token ledger and retry policy; backends only know how
// to turn a ModelRequest into text.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isg/content.hpp"

namespace isg {

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    std::int64_t total() const { return input_tokens + output_tokens; }
    TokenUsage& operator+=(const TokenUsage& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

nlohmann::json usage_to_json(const TokenUsage& u);

struct Decoding {
    double temperature = 0.0;
    int max_output_tokens = 2048;
};

using UserPart = std::variant<std::string, ImageRef>;

struct ModelRequest {
    std::string purpose;  // ledger tag, e.g. "block_vqa"
    std::string alias;    // human-readable fixture key; not fingerprinted
    std::string role_prompt;
    std::vector<UserPart> user_parts;
    Decoding decoding;
};

struct ModelResponse {
    std::string text;
    // Usage of the call that produced this text. A cache hit reports the
    // original call's usage here but adds nothing to the ledger.
    TokenUsage usage;
    bool estimated = false;
    bool cache_hit = false;
    std::string fingerprint;
};

// SHA-256 over role prompt, parts (images by content hash) and decoding.
std::string request_fingerprint(const ModelRequest& req);

// First parsable JSON object/array in free-form model output. Markdown fences
// are tried first, then every balanced {...} / [...] span left to right.
// Throws NoJsonFound.
nlohmann::json extract_json(std::string_view text);

enum class BackendKind { HttpChat, Mock };

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint;      // HTTP only, full URL of the chat-completions route
    std::string model;         // HTTP only
    std::string api_key_env;   // name of the env var holding the secret
    std::filesystem::path cache_dir;
    bool cache_enabled = true;
    int retries = 2;
    std::chrono::milliseconds timeout{60'000};
    std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
    std::filesystem::path fixture;            // MOCK only
    Decoding decoding;

    // Keys mirror the field names, except "cache" for cache_enabled and
    // "timeout_ms"/"backoff_ms" for the durations.
    // Relative paths resolve against base_dir. Throws ConfigError.
    static BackendConfig from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
    void validate() const;
};

struct BackendReply {
    std::string text;
    std::optional<TokenUsage> usage;
};

class Backend {
public:
    virtual ~Backend() = default;
    // Throw BackendUnreachable for retryable failures; any other BackendError
    // is final.
    virtual BackendReply send(const ModelRequest& req, const std::string& fingerprint) = 0;
};

// Scripted replies. Fixture JSON is either {"responses": {...}} or the map
// itself. Keys are tried in order: exact fingerprint, exact alias, then glob
// patterns over the alias (fnmatch syntax; the longest pattern wins). A value
// is a string, {"reply": <string|json>, "usage": {...}}, or any other JSON
// value, which is replied as its compact serialization.
class MockBackend : public Backend {
public:
    explicit MockBackend(nlohmann::json fixture);
    static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& file);

    void set(const std::string& key, nlohmann::json value);
    BackendReply send(const ModelRequest& req, const std::string& fingerprint) override;

    std::size_t requests() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, nlohmann::json> exact_;
    std::vector<std::pair<std::string, nlohmann::json>> patterns_;
    std::size_t requests_ = 0;
};

// OpenAI-compatible chat completions over cpp-httplib.
class HttpChatBackend : public Backend {
public:
    explicit HttpChatBackend(BackendConfig cfg);
    BackendReply send(const ModelRequest& req, const std::string& fingerprint) override;

    // Request body sent for `req`; exposed for wire-format tests.
    nlohmann::json build_body(const ModelRequest& req) const;

private:
    BackendConfig cfg_;
};

struct LedgerEntry {
    std::string fingerprint;
    std::string purpose;
    TokenUsage usage;
    bool estimated = false;
};

struct GatewayStats {
    std::size_t calls = 0;       // complete() invocations
    std::size_t cache_hits = 0;
    std::size_t backend_attempts = 0;
};

class Gateway {
public:
    Gateway(BackendConfig cfg, std::unique_ptr<Backend> backend);
    // Backend chosen from cfg.kind.
    static std::unique_ptr<Gateway> create(const BackendConfig& cfg);

    // Thread-safe. At most one backend flight per fingerprint at a time;
    // concurrent identical requests wait and are served from the cache.
    // Throws BackendUnreachable after cfg.retries + 1 attempts, FixtureMiss.
    ModelResponse complete(const ModelRequest& req);

    const BackendConfig& config() const { return cfg_; }
    std::vector<LedgerEntry> ledger() const;
    TokenUsage ledger_total() const;
    nlohmann::json ledger_json() const;
    GatewayStats stats() const;

private:
    struct Cached {
        std::string text;
        TokenUsage usage;
        bool estimated = false;
    };

    std::optional<Cached> read_disk(const std::string& fp) const;
    void write_disk(const std::string& fp, const Cached& c) const;
    Cached fly(const ModelRequest& req, const std::string& fp);

    BackendConfig cfg_;
    std::unique_ptr<Backend> backend_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, Cached> memory_;
    std::set<std::string> in_flight_;
    std::vector<LedgerEntry> ledger_;
    GatewayStats stats_;
};

// Per-sample (or per-query) view of a gateway: prefixes aliases with a label
// and attributes usage and call counts to the owner.
class CallSession {
public:
    CallSession(Gateway& gateway, std::string label, Decoding decoding);
    CallSession(Gateway& gateway, std::string label);

    ModelResponse complete(const std::string& purpose, const std::string& alias_suffix,
                           std::string role_prompt, std::vector<UserPart> parts);

    const std::string& label() const { return label_; }
    TokenUsage usage() const;
    std::size_t calls() const;
    // Calls whose purpose starts with `prefix`.
    std::size_t calls_with_prefix(const std::string& prefix) const;

private:
    Gateway& gateway_;
    std::string label_;
    Decoding decoding_;
    mutable std::mutex mu_;
    TokenUsage usage_;
    std::map<std::string, std::size_t> calls_;
};

}  // namespace isg
