#pragma once

// Image tools behind CALL_TOOL steps: a mock that paints flat-colour PNGs
// and an HTTP client for remote endpoints, configured from tools.toml.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "isg/agent/plan.hpp"
#include "isg/content.hpp"

namespace isg::agent {

struct ToolCall {
    int step = 0;
    ToolName tool = ToolName::ImageGeneration;
    std::string instruction;
    std::vector<ImageRef> images;
    int outputs = 1;  // images the caller expects back
};

class ToolClient {
public:
    virtual ~ToolClient() = default;
    // Returns exactly call.outputs images or throws ToolFailure.
    virtual std::vector<ImageRef> run(const ToolCall& call) = 0;
};

// Deterministic: colour is a hash of tool, step, instruction, inputs and
// output index. Each PNG carries tEXt keys isg:tool, isg:step, isg:index and
// isg:instruction.
class MockToolClient : public ToolClient {
public:
    explicit MockToolClient(int width = 16, int height = 16) : width_(width), height_(height) {}
    // The next `times` calls for `step` throw ToolFailure.
    void fail_at(int step, int times = 1);
    std::vector<ImageRef> run(const ToolCall& call) override;
    std::size_t calls() const;

private:
    int width_, height_;
    mutable std::mutex mu_;
    std::map<int, int> failures_;
    std::size_t calls_ = 0;
};

struct ToolsConfig {
    enum class Kind { Mock, Http };
    Kind kind = Kind::Mock;
    int width = 16, height = 16;  // mock image size
    std::chrono::milliseconds timeout{120'000};
    std::map<ToolName, std::string> endpoints;  // HTTP only
    std::vector<ToolSpec> tools = default_tools();

    // [tools] backend/width/height/timeout_ms, then one [tools.<Name>]
    // table per tool with `endpoint`. A tool without a table is removed from
    // the registry under HTTP. Throws ConfigError.
    static ToolsConfig from_toml(const std::filesystem::path& file);
    static ToolsConfig from_toml_string(const std::string& text);
};

// POSTs {"tool","instruction","count","images":[{"data","media_type"}]} and
// expects {"images":[{"data","media_type"}]} back.
class HttpToolClient : public ToolClient {
public:
    explicit HttpToolClient(ToolsConfig cfg);
    std::vector<ImageRef> run(const ToolCall& call) override;

private:
    ToolsConfig cfg_;
};

std::unique_ptr<ToolClient> make_tool_client(const ToolsConfig& cfg);

}  // namespace isg::agent
