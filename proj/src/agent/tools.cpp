#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "isg/agent/tools.hpp"

#include <regex>
#include <sstream>

#include <toml.hpp>

#include "isg/errors.hpp"
#include "isg/png.hpp"
#include "isg/util.hpp"

namespace isg::agent {

using nlohmann::json;

void MockToolClient::fail_at(int step, int times) {
    std::lock_guard lock(mu_);
    failures_[step] += times;
}

std::size_t MockToolClient::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::vector<ImageRef> MockToolClient::run(const ToolCall& call) {
    {
        std::lock_guard lock(mu_);
        ++calls_;
        auto it = failures_.find(call.step);
        if (it != failures_.end() && it->second > 0) {
            --it->second;
            throw ToolFailure(call.step, "mock " + std::string(tool_name(call.tool)) + " failure");
        }
    }
    std::string seed = std::string(tool_name(call.tool)) + "|" + std::to_string(call.step) + "|" +
                       call.instruction;
    for (const auto& img : call.images) seed += "|" + util::sha256_hex(img.bytes());
    std::vector<ImageRef> out;
    for (int k = 0; k < call.outputs; ++k) {
        std::string h = util::sha256_hex(seed + "|" + std::to_string(k));
        png::Rgb c{static_cast<std::uint8_t>(std::stoi(h.substr(0, 2), nullptr, 16)),
                   static_cast<std::uint8_t>(std::stoi(h.substr(2, 2), nullptr, 16)),
                   static_cast<std::uint8_t>(std::stoi(h.substr(4, 2), nullptr, 16))};
        out.push_back(ImageRef::from_bytes(
            png::encode_flat(width_, height_, c,
                             {{"isg:tool", std::string(tool_name(call.tool))},
                              {"isg:step", std::to_string(call.step)},
                              {"isg:index", std::to_string(k)},
                              {"isg:instruction", call.instruction}}),
            "image/png"));
    }
    return out;
}

namespace {

ToolsConfig from_table(const toml::table& root) {
    ToolsConfig cfg;
    const toml::table* tools = root["tools"].as_table();
    if (tools == nullptr) return cfg;
    std::string backend = (*tools)["backend"].value_or(std::string("mock"));
    if (backend == "mock") {
        cfg.kind = ToolsConfig::Kind::Mock;
    } else if (backend == "http") {
        cfg.kind = ToolsConfig::Kind::Http;
    } else {
        throw ConfigError("tools.backend must be \"mock\" or \"http\", got '" + backend + "'");
    }
    cfg.width = static_cast<int>((*tools)["width"].value_or(int64_t{16}));
    cfg.height = static_cast<int>((*tools)["height"].value_or(int64_t{16}));
    if (cfg.width <= 0 || cfg.height <= 0) throw ConfigError("tools.width/height must be positive");
    cfg.timeout = std::chrono::milliseconds((*tools)["timeout_ms"].value_or(int64_t{120'000}));
    for (const auto& [key, node] : *tools) {
        const toml::table* t = node.as_table();
        if (t == nullptr) continue;
        auto name = parse_tool_name(std::string(key.str()));
        if (!name) throw ConfigError("unknown tool table [tools." + std::string(key.str()) + "]");
        if (auto ep = (*t)["endpoint"].value<std::string>()) cfg.endpoints[*name] = *ep;
    }
    if (cfg.kind == ToolsConfig::Kind::Http) {
        std::vector<ToolSpec> reachable;
        for (const auto& spec : cfg.tools) {
            if (cfg.endpoints.contains(spec.name)) reachable.push_back(spec);
        }
        if (reachable.empty()) throw ConfigError("HTTP tools configured without any endpoint");
        cfg.tools = reachable;
    }
    return cfg;
}

}  // namespace

ToolsConfig ToolsConfig::from_toml_string(const std::string& text) {
    try {
        return from_table(toml::parse(text));
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "tools config: " << e.description() << " at line " << e.source().begin.line;
        throw ConfigError(msg.str());
    }
}

ToolsConfig ToolsConfig::from_toml(const std::filesystem::path& file) {
    return from_toml_string(util::read_file(file.string()));
}

HttpToolClient::HttpToolClient(ToolsConfig cfg) : cfg_(std::move(cfg)) {}

std::vector<ImageRef> HttpToolClient::run(const ToolCall& call) {
    auto it = cfg_.endpoints.find(call.tool);
    if (it == cfg_.endpoints.end()) {
        throw ToolFailure(call.step, "no endpoint for " + std::string(tool_name(call.tool)));
    }
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(it->second, m, url)) throw ConfigError("malformed tool endpoint " + it->second);
    httplib::Client client(m[1].str());
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout).count();
    client.set_read_timeout(static_cast<time_t>(secs), 0);
    client.set_connection_timeout(10, 0);

    json images = json::array();
    for (const auto& img : call.images) {
        images.push_back({{"data", util::base64_encode(img.bytes())}, {"media_type", img.media_type()}});
    }
    json body = {{"tool", tool_name(call.tool)},
                 {"instruction", call.instruction},
                 {"count", call.outputs},
                 {"images", images}};
    auto res = client.Post(m[2].matched ? m[2].str() : "/", body.dump(), "application/json");
    if (!res) throw ToolFailure(call.step, it->second + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw ToolFailure(call.step, it->second + ": HTTP " + std::to_string(res->status));
    }
    std::vector<ImageRef> out;
    try {
        json reply = json::parse(res->body);
        for (const auto& img : reply.at("images")) {
            std::string data = img.is_string() ? img.get<std::string>() : img.at("data").get<std::string>();
            std::string media = img.is_object() ? img.value("media_type", std::string()) : std::string();
            out.push_back(ImageRef::from_bytes(util::base64_decode(data), media));
        }
    } catch (const std::exception& e) {
        throw ToolFailure(call.step, "bad tool reply: " + std::string(e.what()));
    }
    if (static_cast<int>(out.size()) != call.outputs) {
        throw ToolFailure(call.step, "tool returned " + std::to_string(out.size()) + " images, expected " +
                                         std::to_string(call.outputs));
    }
    return out;
}

std::unique_ptr<ToolClient> make_tool_client(const ToolsConfig& cfg) {
    if (cfg.kind == ToolsConfig::Kind::Http) return std::make_unique<HttpToolClient>(cfg);
    return std::make_unique<MockToolClient>(cfg.width, cfg.height);
}

}  // namespace isg::agent
