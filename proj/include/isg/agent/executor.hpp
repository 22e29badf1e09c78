#pragma once

// Two-phase plan execution: every Call_tool step first, in order, filling
// the <GEN_n> list; then Caption and AddImage steps assemble the answer.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isg/agent/plan.hpp"
#include "isg/agent/tools.hpp"
#include "isg/content.hpp"
#include "isg/gateway.hpp"

namespace isg::agent {

struct StepError {
    int step = 0;
    std::string kind;  // "ToolFailure" / "CaptionFailure"
    std::string message;
};

struct ExecutionResult {
    InterleavedSequence sequence;
    std::vector<ImageRef> generated;  // <GEN_0>, <GEN_1>, ...
    std::vector<ImageRef> added;      // AddImage images in step order
    std::optional<StepError> error;   // execution stopped here

    bool ok() const { return !error.has_value(); }
};

// Completed tool and caption steps are remembered by step number and inputs,
// so executing an edited plan again only reruns what changed or failed.
class Executor {
public:
    Executor(CallSession& session, ToolClient& tools, std::vector<ToolSpec> registry = default_tools());

    // Expects a plan validate_plan accepted. Never throws ToolFailure or
    // CaptionFailure; those stop execution and land in `error`.
    ExecutionResult execute(const Plan& plan, const InterleavedSequence& query);

    // Tool for a CALL_TOOL step: the single candidate, else one selector call.
    ToolName select_tool(const Plan& plan, const PlanStep& step);

    std::size_t tool_runs() const { return tool_runs_; }

private:
    std::string tool_key(const PlanStep& step, const std::vector<ImageRef>& inputs) const;

    CallSession& session_;
    ToolClient& tools_;
    std::vector<ToolSpec> registry_;
    std::map<std::string, std::vector<ImageRef>> tool_cache_;
    std::map<std::string, std::string> caption_cache_;
    std::size_t tool_runs_ = 0;
};

}  // namespace isg::agent
