#include "isg/gateway.hpp"

#include <fnmatch.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "isg/errors.hpp"
#include "isg/util.hpp"

namespace isg {

namespace fs = std::filesystem;
using nlohmann::json;

json usage_to_json(const TokenUsage& u) {
    return {{"input_tokens", u.input_tokens},
            {"output_tokens", u.output_tokens},
            {"total_tokens", u.total()}};
}

std::string request_fingerprint(const ModelRequest& req) {
    json parts = json::array();
    for (const UserPart& part : req.user_parts) {
        if (const auto* text = std::get_if<std::string>(&part)) {
            parts.push_back({"text", *text});
        } else {
            const ImageRef& img = std::get<ImageRef>(part);
            parts.push_back({"image", util::sha256_hex(img.bytes())});
        }
    }
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.17g", req.decoding.temperature);
    json canonical = {"isg-request-v1", req.role_prompt, parts, temp,
                      req.decoding.max_output_tokens};
    return util::sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// extract_json

namespace {

std::optional<json> try_parse(std::string_view s) {
    json v = json::parse(s.begin(), s.end(), nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded()) return std::nullopt;
    return v;
}

// End (exclusive) of the balanced span opening at `start`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
            case '"': in_string = true; break;
            case '{': stack.push_back('}'); break;
            case '[': stack.push_back(']'); break;
            case '}':
            case ']':
                if (stack.empty() || stack.back() != c) return std::string_view::npos;
                stack.pop_back();
                if (stack.empty()) return i + 1;
                break;
            default: break;
        }
    }
    return std::string_view::npos;
}

}  // namespace

json extract_json(std::string_view text) {
    // Fenced blocks: ```json\n ... \n```
    std::size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string_view::npos) {
        std::size_t body = text.find('\n', pos + 3);
        if (body == std::string_view::npos) break;
        std::size_t close = text.find("```", body);
        if (close == std::string_view::npos) break;
        if (auto v = try_parse(util::trim(text.substr(body + 1, close - body - 1)));
            v && (v->is_object() || v->is_array())) {
            return *v;
        }
        pos = close + 3;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{' && text[i] != '[') continue;
        std::size_t end = balanced_end(text, i);
        if (end == std::string_view::npos) continue;
        if (auto v = try_parse(text.substr(i, end - i))) return *v;
    }
    throw NoJsonFound("no balanced JSON object or array in model output");
}

// ---------------------------------------------------------------------------
// BackendConfig

BackendConfig BackendConfig::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("backend config must be a JSON object");
    BackendConfig cfg;
    auto resolve = [&](const std::string& p) {
        fs::path path = p;
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    try {
        if (j.contains("kind")) {
            std::string kind = util::to_lower(j["kind"].get<std::string>());
            if (kind == "http" || kind == "http_chat") {
                cfg.kind = BackendKind::HttpChat;
            } else if (kind == "mock") {
                cfg.kind = BackendKind::Mock;
            } else {
                throw ConfigError("unknown backend kind '" + kind + "'");
            }
        }
        cfg.endpoint = j.value("endpoint", cfg.endpoint);
        cfg.model = j.value("model", cfg.model);
        cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
        if (j.contains("cache_dir")) cfg.cache_dir = resolve(j["cache_dir"].get<std::string>());
        cfg.cache_enabled = j.value("cache", cfg.cache_enabled);
        cfg.retries = j.value("retries", cfg.retries);
        cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", cfg.timeout.count()));
        cfg.backoff = std::chrono::milliseconds(j.value("backoff_ms", cfg.backoff.count()));
        if (j.contains("fixture")) cfg.fixture = resolve(j["fixture"].get<std::string>());
        cfg.decoding.temperature = j.value("temperature", cfg.decoding.temperature);
        cfg.decoding.max_output_tokens = j.value("max_output_tokens", cfg.decoding.max_output_tokens);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("backend config: ") + e.what());
    }
    return cfg;
}

void BackendConfig::validate() const {
    if (retries < 0) throw ConfigError("retries must be >= 0");
    if (decoding.temperature < 0) throw ConfigError("temperature must be >= 0");
    if (decoding.max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
    if (kind == BackendKind::Mock && fixture.empty()) {
        throw ConfigError("mock backend requires a fixture path");
    }
    if (kind == BackendKind::HttpChat && endpoint.empty()) {
        throw ConfigError("http backend requires an endpoint");
    }
}

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(json fixture) {
    if (fixture.is_object() && fixture.contains("responses")) fixture = fixture["responses"];
    if (!fixture.is_object()) throw ConfigError("mock fixture must be a JSON object");
    for (auto& [key, value] : fixture.items()) set(key, value);
}

std::unique_ptr<MockBackend> MockBackend::from_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open mock fixture " + file.string());
    try {
        return std::make_unique<MockBackend>(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
}

void MockBackend::set(const std::string& key, json value) {
    std::lock_guard lock(mu_);
    if (key.find_first_of("*?[") != std::string::npos) {
        for (auto& p : patterns_) {
            if (p.first == key) {
                p.second = std::move(value);
                return;
            }
        }
        patterns_.emplace_back(key, std::move(value));
    } else {
        exact_[key] = std::move(value);
    }
}

std::size_t MockBackend::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

BackendReply MockBackend::send(const ModelRequest& req, const std::string& fingerprint) {
    const json* hit = nullptr;
    {
        std::lock_guard lock(mu_);
        ++requests_;
        if (auto it = exact_.find(fingerprint); it != exact_.end()) {
            hit = &it->second;
        } else if (auto it2 = exact_.find(req.alias); !req.alias.empty() && it2 != exact_.end()) {
            hit = &it2->second;
        } else {
            std::size_t best = 0;
            for (const auto& [pattern, value] : patterns_) {
                if (::fnmatch(pattern.c_str(), req.alias.c_str(), 0) == 0 &&
                    (hit == nullptr || pattern.size() > best)) {
                    hit = &value;
                    best = pattern.size();
                }
            }
        }
        if (hit == nullptr) {
            throw FixtureMiss("no scripted reply for alias '" + req.alias + "' (fingerprint " +
                              fingerprint + ")");
        }
        BackendReply reply;
        const json& v = *hit;
        if (v.is_string()) {
            reply.text = v.get<std::string>();
        } else if (v.is_object() && v.contains("reply")) {
            const json& r = v["reply"];
            reply.text = r.is_string() ? r.get<std::string>() : r.dump();
            if (v.contains("usage")) {
                reply.usage = TokenUsage{v["usage"].value("input_tokens", std::int64_t{0}),
                                         v["usage"].value("output_tokens", std::int64_t{0})};
            }
        } else {
            reply.text = v.dump();
        }
        return reply;
    }
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(BackendConfig cfg, std::unique_ptr<Backend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)) {
    if (cfg_.retries < 0) throw ConfigError("retries must be >= 0");
    if (!cfg_.cache_dir.empty()) {
        std::error_code ec;
        fs::create_directories(cfg_.cache_dir, ec);
        if (ec) throw ConfigError("cannot create cache dir " + cfg_.cache_dir.string());
    }
}

std::unique_ptr<Gateway> Gateway::create(const BackendConfig& cfg) {
    cfg.validate();
    std::unique_ptr<Backend> backend;
    if (cfg.kind == BackendKind::Mock) {
        backend = MockBackend::from_file(cfg.fixture);
    } else {
        backend = std::make_unique<HttpChatBackend>(cfg);
    }
    return std::make_unique<Gateway>(cfg, std::move(backend));
}

std::optional<Gateway::Cached> Gateway::read_disk(const std::string& fp) const {
    if (cfg_.cache_dir.empty()) return std::nullopt;
    std::ifstream in(cfg_.cache_dir / (fp + ".json"));
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("text")) return std::nullopt;
    Cached c;
    c.text = j["text"].get<std::string>();
    c.usage = TokenUsage{j["usage"].value("input_tokens", std::int64_t{0}),
                         j["usage"].value("output_tokens", std::int64_t{0})};
    c.estimated = j.value("estimated", false);
    return c;
}

void Gateway::write_disk(const std::string& fp, const Cached& c) const {
    if (cfg_.cache_dir.empty()) return;
    fs::path final_path = cfg_.cache_dir / (fp + ".json");
    fs::path tmp = cfg_.cache_dir / (fp + ".json.tmp");
    {
        std::ofstream out(tmp);
        if (!out) return;  // an unwritable cache only costs a re-request
        out << json{{"text", c.text}, {"usage", usage_to_json(c.usage)}, {"estimated", c.estimated}}
                   .dump();
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
}

namespace {

std::int64_t estimate_tokens(std::size_t chars) {
    return static_cast<std::int64_t>((chars + 3) / 4);
}

}  // namespace

Gateway::Cached Gateway::fly(const ModelRequest& req, const std::string& fp) {
    const int attempts = cfg_.retries + 1;
    auto delay = cfg_.backoff;
    for (int attempt = 1;; ++attempt) {
        {
            std::lock_guard lock(mu_);
            ++stats_.backend_attempts;
        }
        try {
            BackendReply reply = backend_->send(req, fp);
            Cached c;
            c.text = std::move(reply.text);
            if (reply.usage) {
                c.usage = *reply.usage;
            } else {
                std::size_t chars = req.role_prompt.size();
                for (const auto& part : req.user_parts) {
                    if (const auto* s = std::get_if<std::string>(&part)) chars += s->size();
                }
                c.usage = TokenUsage{estimate_tokens(chars), estimate_tokens(c.text.size())};
                c.estimated = true;
            }
            return c;
        } catch (const BackendUnreachable& e) {
            if (attempt >= attempts) {
                throw BackendUnreachable(std::string(e.what()) + " (gave up after " +
                                         std::to_string(attempts) + " attempts)");
            }
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
}

ModelResponse Gateway::complete(const ModelRequest& req) {
    if (req.user_parts.empty()) throw ConfigError("model request needs at least one user part");
    const std::string fp = request_fingerprint(req);
    ModelResponse resp;
    resp.fingerprint = fp;
    {
        std::unique_lock lock(mu_);
        ++stats_.calls;
        for (;;) {
            if (cfg_.cache_enabled) {
                if (auto it = memory_.find(fp); it != memory_.end()) {
                    ++stats_.cache_hits;
                    resp.text = it->second.text;
                    resp.usage = it->second.usage;
                    resp.estimated = it->second.estimated;
                    resp.cache_hit = true;
                    return resp;
                }
            }
            if (!in_flight_.contains(fp)) break;
            cv_.wait(lock);
        }
        in_flight_.insert(fp);
    }

    auto release = [&] {
        std::lock_guard lock(mu_);
        in_flight_.erase(fp);
        cv_.notify_all();
    };

    if (cfg_.cache_enabled) {
        if (auto disk = read_disk(fp)) {
            std::lock_guard lock(mu_);
            memory_[fp] = *disk;
            ++stats_.cache_hits;
            in_flight_.erase(fp);
            cv_.notify_all();
            resp.text = disk->text;
            resp.usage = disk->usage;
            resp.estimated = disk->estimated;
            resp.cache_hit = true;
            return resp;
        }
    }

    Cached fresh;
    try {
        fresh = fly(req, fp);
    } catch (...) {
        release();
        throw;
    }
    if (cfg_.cache_enabled) write_disk(fp, fresh);
    {
        std::lock_guard lock(mu_);
        if (cfg_.cache_enabled) memory_[fp] = fresh;
        ledger_.push_back(LedgerEntry{fp, req.purpose, fresh.usage, fresh.estimated});
        in_flight_.erase(fp);
        cv_.notify_all();
    }
    resp.text = std::move(fresh.text);
    resp.usage = fresh.usage;
    resp.estimated = fresh.estimated;
    return resp;
}

std::vector<LedgerEntry> Gateway::ledger() const {
    std::lock_guard lock(mu_);
    return ledger_;
}

TokenUsage Gateway::ledger_total() const {
    std::lock_guard lock(mu_);
    TokenUsage total;
    for (const auto& e : ledger_) total += e.usage;
    return total;
}

json Gateway::ledger_json() const {
    json out = json::array();
    for (const auto& e : ledger()) {
        out.push_back({{"fingerprint", e.fingerprint},
                       {"purpose", e.purpose},
                       {"input_tokens", e.usage.input_tokens},
                       {"output_tokens", e.usage.output_tokens},
                       {"estimated", e.estimated}});
    }
    return out;
}

GatewayStats Gateway::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

// ---------------------------------------------------------------------------
// CallSession

CallSession::CallSession(Gateway& gateway, std::string label, Decoding decoding)
    : gateway_(gateway), label_(std::move(label)), decoding_(decoding) {}

CallSession::CallSession(Gateway& gateway, std::string label)
    : CallSession(gateway, std::move(label), gateway.config().decoding) {}

ModelResponse CallSession::complete(const std::string& purpose, const std::string& alias_suffix,
                                    std::string role_prompt, std::vector<UserPart> parts) {
    ModelRequest req;
    req.purpose = purpose;
    req.alias = label_.empty() ? alias_suffix : label_ + "/" + alias_suffix;
    req.role_prompt = std::move(role_prompt);
    req.user_parts = std::move(parts);
    req.decoding = decoding_;
    {
        std::lock_guard lock(mu_);
        ++calls_[purpose];
    }
    ModelResponse resp = gateway_.complete(req);
    std::lock_guard lock(mu_);
    usage_ += resp.usage;
    return resp;
}

TokenUsage CallSession::usage() const {
    std::lock_guard lock(mu_);
    return usage_;
}

std::size_t CallSession::calls() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [_, c] : calls_) n += c;
    return n;
}

std::size_t CallSession::calls_with_prefix(const std::string& prefix) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [purpose, c] : calls_) {
        if (purpose.starts_with(prefix)) n += c;
    }
    return n;
}

}  // namespace isg
