#include "isg/agent/refine.hpp"

#include <algorithm>
#include <map>

#include "isg/errors.hpp"
#include "isg/prompts.hpp"
#include "isg/util.hpp"

namespace isg::agent {

using nlohmann::json;

std::string render_for_smoothing(const InterleavedSequence& seq) {
    std::string out;
    for (const auto& b : seq.blocks) {
        if (!out.empty()) out += "\n";
        out += b.is_text() ? b.text() : std::string(prompts::kImageMarker);
    }
    return out;
}

namespace {

// Text between markers; gaps = images + 1.
std::vector<std::string> split_gaps(std::string_view text) {
    std::vector<std::string> gaps;
    const std::string_view marker = prompts::kImageMarker;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = text.find(marker, pos);
        gaps.push_back(util::trim(text.substr(pos, hit == std::string_view::npos ? std::string_view::npos
                                                                               : hit - pos)));
        if (hit == std::string_view::npos) break;
        pos = hit + marker.size();
    }
    return gaps;
}

}  // namespace

SmoothingOutcome apply_smoothing(const InterleavedSequence& seq, std::string_view reply) {
    SmoothingOutcome out;
    out.sequence = seq;
    const InterleavedSequence norm = normalize_sequence(seq);
    std::vector<const Block*> images;
    std::vector<bool> had_text;  // per gap
    had_text.push_back(false);
    for (const auto& b : norm.blocks) {
        if (b.is_text()) {
            had_text.back() = true;
        } else {
            images.push_back(&b);
            had_text.push_back(false);
        }
    }
    std::vector<std::string> gaps = split_gaps(reply);
    if (gaps.size() != had_text.size()) {
        out.reason = "marker count changed from " + std::to_string(images.size()) + " to " +
                     std::to_string(gaps.size() - 1);
        return out;
    }
    for (std::size_t g = 0; g < gaps.size(); ++g) {
        if (had_text[g] && gaps[g].empty()) {
            out.reason = "text segment " + std::to_string(g) + " was removed";
            return out;
        }
        if (!had_text[g] && !gaps[g].empty()) {
            out.reason = "text added where there was none (gap " + std::to_string(g) + ")";
            return out;
        }
    }
    InterleavedSequence rebuilt;
    for (std::size_t g = 0; g < gaps.size(); ++g) {
        if (!gaps[g].empty()) rebuilt.blocks.push_back(Block::text(gaps[g]));
        if (g < images.size()) rebuilt.blocks.push_back(*images[g]);
    }
    out.sequence = std::move(rebuilt);
    out.accepted = true;
    return out;
}

SmoothingOutcome smooth(CallSession& session, const InterleavedSequence& seq) {
    bool any_text = std::any_of(seq.blocks.begin(), seq.blocks.end(), [](const Block& b) { return b.is_text(); });
    if (!any_text) return {seq, true, "no text to smooth"};
    ModelResponse resp = session.complete("agent_smooth", "smooth", prompts::agent_smoothing(),
                                          {"Input:\n" + render_for_smoothing(seq) + "\nOutput:"});
    return apply_smoothing(seq, resp.text);
}

std::string regenerate_step(CallSession& session, const PlanStep& step, const std::string& error,
                            int attempt) {
    Plan one;
    one.steps = {step};
    ModelResponse resp = session.complete(
        "agent_regen", "regen/" + std::to_string(step.step) + "/" + std::to_string(attempt),
        prompts::agent_step_regeneration(),
        {"Failed step:\n" + one.to_json()[0]["Plan"][0].dump(), "Error: " + error});
    try {
        json j = extract_json(resp.text);
        std::string text = util::trim(j.at("Input_text").get<std::string>());
        if (!text.empty()) return text;
    } catch (const std::exception&) {
    }
    return step.input_text;
}

bool AgentResult::exhausted() const {
    return std::find(flags.begin(), flags.end(), "REFINEMENT_EXHAUSTED") != flags.end();
}

json AgentResult::summary() const {
    return {{"plan", plan.to_json()},
            {"warnings", warnings},
            {"failures", failures_to_json(failures)},
            {"flags", flags},
            {"replans", replans},
            {"regenerations", regenerations},
            {"smoothed", smoothed},
            {"signature", structure_signature(answer).str()}};
}

AgentResult run_agent(CallSession& session, ToolClient& tools, const std::vector<ToolSpec>& registry,
                      const InterleavedSequence& query, const AgentConfig& cfg) {
    AgentResult res;
    auto exhaust = [&](const std::string& why) {
        res.flags.push_back("REFINEMENT_EXHAUSTED");
        res.failures.push_back(Failure::from("refine", RefinementExhausted(why)));
    };

    std::string feedback;
    bool planned = false;
    for (int attempt = 0; attempt <= cfg.replan_budget; ++attempt) {
        if (attempt > 0) ++res.replans;
        try {
            ParsedPlan p = build_plan(session, query, feedback, attempt);
            res.warnings.insert(res.warnings.end(), p.warnings.begin(), p.warnings.end());
            auto violations = validate_plan(p.plan, registry, query);
            res.plan = std::move(p.plan);
            if (violations.empty()) {
                planned = true;
                break;
            }
            feedback = describe(violations);
            res.failures.push_back({"plan", "PlanViolation", feedback});
        } catch (const MalformedPlan& e) {
            feedback = std::string("- ") + e.what() + "\n";
            res.failures.push_back(Failure::from("plan", e));
        }
    }
    if (!planned) {
        exhaust("no valid plan after " + std::to_string(cfg.replan_budget) + " re-plan(s)");
        return res;
    }

    Executor exec(session, tools, registry);
    std::map<int, int> regens;
    ExecutionResult run;
    while (true) {
        run = exec.execute(res.plan, query);
        if (run.ok()) break;
        const StepError err = *run.error;
        res.failures.push_back({"execute", err.kind, "step " + std::to_string(err.step) + ": " + err.message});
        int& used = regens[err.step];
        PlanStep* step = res.plan.find(err.step);
        if (step == nullptr || used >= cfg.step_budget) {
            exhaust("step " + std::to_string(err.step) + " still failing after " + std::to_string(used) +
                    " regeneration(s)");
            res.answer = run.sequence;
            return res;
        }
        ++used;
        ++res.regenerations;
        PlanStep candidate = *step;
        candidate.input_text = regenerate_step(session, *step, err.message, used);
        // A rewrite that would break the plan is not applied; the retry then
        // reruns the original instruction.
        Plan trial = res.plan;
        *trial.find(err.step) = candidate;
        if (validate_plan(trial, registry, query).empty()) res.plan = std::move(trial);
    }

    res.answer = run.sequence;
    if (cfg.smoothing) {
        SmoothingOutcome s = smooth(session, res.answer);
        if (s.accepted) {
            res.answer = s.sequence;
            res.smoothed = true;
        } else {
            res.flags.push_back("SMOOTHING_REJECTED");
            res.warnings.push_back("smoothing rejected: " + s.reason);
        }
    }
    return res;
}

}  // namespace isg::agent
