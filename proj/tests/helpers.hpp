#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "isg/content.hpp"
#include "isg/gateway.hpp"
#include "isg/png.hpp"

namespace isg::test {

inline ImageRef png_image(std::uint8_t shade, int size = 4) {
    return ImageRef::from_bytes(png::encode_flat(size, size, {shade, shade, shade}), "image/png");
}

// "TIT" -> text, image, text with distinct contents.
inline InterleavedSequence layout(const std::string& pattern, const std::string& tag = "x") {
    InterleavedSequence seq;
    int n = 0;
    for (char c : pattern) {
        ++n;
        if (c == 'T') {
            seq.blocks.push_back(Block::text(tag + " text " + std::to_string(n)));
        } else {
            seq.blocks.push_back(Block::image(png_image(static_cast<std::uint8_t>(n * 17 + tag.size()))));
        }
    }
    return seq;
}

inline BackendConfig mock_config() {
    BackendConfig cfg;
    cfg.kind = BackendKind::Mock;
    cfg.fixture = "inline";
    cfg.retries = 0;
    cfg.cache_enabled = false;
    cfg.backoff = std::chrono::milliseconds(0);
    return cfg;
}

struct MockRig {
    MockBackend* backend = nullptr;
    std::unique_ptr<Gateway> gateway;

    explicit MockRig(nlohmann::json fixture = nlohmann::json::object(), BackendConfig cfg = mock_config()) {
        auto b = std::make_unique<MockBackend>(std::move(fixture));
        backend = b.get();
        gateway = std::make_unique<Gateway>(cfg, std::move(b));
    }
};

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path = std::filesystem::temp_directory_path() / ("isg-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline std::string reply(const nlohmann::json& j) { return j.dump(); }

}  // namespace isg::test
