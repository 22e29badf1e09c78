#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <regex>

#include "isg/errors.hpp"
#include "isg/gateway.hpp"
#include "isg/util.hpp"

namespace isg {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) throw ConfigError("malformed endpoint URL: " + url);
    return {m[1], m[2].matched ? std::string(m[2]) : std::string("/")};
}

}  // namespace

HttpChatBackend::HttpChatBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    split_endpoint(cfg_.endpoint);
}

json HttpChatBackend::build_body(const ModelRequest& req) const {
    json content = json::array();
    for (const UserPart& part : req.user_parts) {
        if (const auto* text = std::get_if<std::string>(&part)) {
            content.push_back({{"type", "text"}, {"text", *text}});
        } else {
            const ImageRef& img = std::get<ImageRef>(part);
            std::string url = "data:" + img.media_type() + ";base64," +
                              util::base64_encode(img.bytes());
            content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
        }
    }
    json messages = json::array();
    if (!req.role_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", req.role_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", content}});
    json body = {{"messages", messages},
                 {"temperature", req.decoding.temperature},
                 {"max_tokens", req.decoding.max_output_tokens}};
    if (!cfg_.model.empty()) body["model"] = cfg_.model;
    return body;
}

BackendReply HttpChatBackend::send(const ModelRequest& req, const std::string& /*fingerprint*/) {
    Endpoint ep = split_endpoint(cfg_.endpoint);
    httplib::Client client(ep.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout).count();
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout).count() % 1'000'000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    auto res = client.Post(ep.path, headers, build_body(req).dump(), "application/json");
    if (!res) {
        throw BackendUnreachable(cfg_.endpoint + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw BackendUnreachable(cfg_.endpoint + ": HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw BackendError(cfg_.endpoint + ": HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));
    }
    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        throw BackendError(cfg_.endpoint + ": response is not a chat completion");
    }
    BackendReply reply;
    const json& msg = j["choices"][0]["message"];
    if (msg.contains("content") && msg["content"].is_string()) {
        reply.text = msg["content"].get<std::string>();
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        reply.usage = TokenUsage{j["usage"].value("prompt_tokens", std::int64_t{0}),
                                 j["usage"].value("completion_tokens", std::int64_t{0})};
    }
    return reply;
}

}  // namespace isg
