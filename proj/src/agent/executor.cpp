#include "isg/agent/executor.hpp"

#include <algorithm>

#include "isg/errors.hpp"
#include "isg/prompts.hpp"
#include "isg/util.hpp"

namespace isg::agent {

using nlohmann::json;

Executor::Executor(CallSession& session, ToolClient& tools, std::vector<ToolSpec> registry)
    : session_(session), tools_(tools), registry_(std::move(registry)) {}

std::string Executor::tool_key(const PlanStep& step, const std::vector<ImageRef>& inputs) const {
    std::string key = std::to_string(step.step) + "|" + step.input_text;
    for (const auto& img : inputs) key += "|" + util::sha256_hex(img.bytes());
    return util::sha256_hex(key);
}

ToolName Executor::select_tool(const Plan& plan, const PlanStep& step) {
    auto cands = step_candidates(plan, step, registry_);
    if (cands.empty()) throw ToolFailure(step.step, "no tool matches the instruction");
    if (cands.size() == 1) return cands[0];

    json names = json::array();
    for (ToolName t : cands) names.push_back(tool_name(t));
    ModelResponse resp = session_.complete(
        "agent_select", "select/" + std::to_string(step.step), prompts::agent_tool_selector(),
        {"Instruction: " + step.input_text,
         "Number of input images: " + std::to_string(step.input_images.size()),
         "Candidate tools: " + names.dump()});
    try {
        json j = extract_json(resp.text);
        auto name = parse_tool_name(j.at("Tool").get<std::string>());
        if (name && std::find(cands.begin(), cands.end(), *name) != cands.end()) return *name;
    } catch (const std::exception&) {
    }
    throw ToolFailure(step.step, "tool selector did not pick one of " + names.dump());
}

ExecutionResult Executor::execute(const Plan& plan, const InterleavedSequence& query) {
    ExecutionResult r;
    std::vector<ImageRef> originals;
    for (const auto& b : query.blocks) {
        if (!b.is_text()) originals.push_back(b.image());
    }
    auto resolve = [&](const PlanStep& s) {
        std::vector<ImageRef> out;
        for (const auto& p : s.input_images) {
            if (p.kind == Placeholder::Kind::Original) {
                if (p.index < 1 || p.index > static_cast<int>(originals.size())) {
                    throw ToolFailure(s.step, p.str() + " does not exist");
                }
                out.push_back(originals[p.index - 1]);
            } else {
                if (p.index < 0 || p.index >= static_cast<int>(r.generated.size())) {
                    throw ToolFailure(s.step, p.str() + " has not been generated");
                }
                out.push_back(r.generated[p.index]);
            }
        }
        return out;
    };

    int current = 0;
    try {
        for (const auto& s : plan.steps) {
            if (s.task != TaskKind::CallTool) continue;
            current = s.step;
            std::vector<ImageRef> inputs = resolve(s);
            std::string key = tool_key(s, inputs);
            auto hit = tool_cache_.find(key);
            if (hit == tool_cache_.end()) {
                ToolCall call{s.step, select_tool(plan, s), s.input_text, inputs, 1};
                call.outputs = output_count(call.tool, s.input_text);
                ++tool_runs_;
                std::vector<ImageRef> imgs = tools_.run(call);
                if (static_cast<int>(imgs.size()) != call.outputs) {
                    throw ToolFailure(s.step, "tool returned " + std::to_string(imgs.size()) +
                                                  " images, expected " + std::to_string(call.outputs));
                }
                hit = tool_cache_.emplace(key, std::move(imgs)).first;
            }
            r.generated.insert(r.generated.end(), hit->second.begin(), hit->second.end());
        }

        for (const auto& s : plan.steps) {
            if (s.task == TaskKind::CallTool) continue;
            current = s.step;
            std::vector<ImageRef> inputs = resolve(s);
            if (s.task == TaskKind::AddImage) {
                if (inputs.size() != 1) throw ToolFailure(s.step, "AddImage needs exactly one image");
                r.added.push_back(inputs[0]);
                r.sequence.blocks.push_back(Block::image(inputs[0]));
                continue;
            }
            std::string key = tool_key(s, inputs);
            auto hit = caption_cache_.find(key);
            if (hit == caption_cache_.end()) {
                std::vector<UserPart> parts{"Instruction: " + s.input_text};
                for (const auto& img : inputs) parts.emplace_back(img);
                std::string text;
                try {
                    text = util::trim(session_
                                          .complete("agent_caption", "caption/" + std::to_string(s.step),
                                                    prompts::agent_caption(), std::move(parts))
                                          .text);
                } catch (const BackendError& e) {
                    throw CaptionFailure(s.step, e.what());
                }
                if (text.empty()) throw CaptionFailure(s.step, "caption model returned no text");
                hit = caption_cache_.emplace(key, text).first;
            }
            r.sequence.blocks.push_back(Block::text(hit->second));
        }
    } catch (const StepFailure& e) {
        r.error = StepError{e.step() != 0 ? e.step() : current, e.kind(), e.detail()};
    } catch (const BackendError& e) {
        r.error = StepError{current, "ToolFailure", e.what()};
    }
    r.sequence = normalize_sequence(r.sequence);
    return r;
}

}  // namespace isg::agent
