#pragma once

// Agent driver: re-planning on planning errors, per-step
// instruction regeneration on execution errors, then text smoothing that
// must leave the image layout untouched.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "isg/agent/executor.hpp"
#include "isg/agent/plan.hpp"
#include "isg/agent/tools.hpp"
#include "isg/content.hpp"
#include "isg/failure.hpp"
#include "isg/gateway.hpp"

namespace isg::agent {

struct AgentConfig {
    int replan_budget = 1;  // full re-plans after a malformed or invalid plan
    int step_budget = 2;    // instruction regenerations per failing step
    bool smoothing = true;
};

// Sequence as smoothing input: text blocks verbatim, each image as the
// <boi><eoi> marker, one element per line.
std::string render_for_smoothing(const InterleavedSequence& seq);

struct SmoothingOutcome {
    InterleavedSequence sequence;  // the input when rejected
    bool accepted = false;
    std::string reason;
};

// Accepts `reply` only when it has as many markers as the sequence has
// images and puts non-blank text exactly in the gaps that held text before.
SmoothingOutcome apply_smoothing(const InterleavedSequence& seq, std::string_view reply);

// One gateway call, then apply_smoothing. Sequences without text are
// returned as-is without a call.
SmoothingOutcome smooth(CallSession& session, const InterleavedSequence& seq);

// New Input_text for a failing step; one gateway call. Returns the old text
// when the reply is unusable.
std::string regenerate_step(CallSession& session, const PlanStep& step, const std::string& error,
                            int attempt);

struct AgentResult {
    InterleavedSequence answer;
    Plan plan;
    std::vector<std::string> warnings;
    std::vector<Failure> failures;
    std::vector<std::string> flags;  // REFINEMENT_EXHAUSTED, SMOOTHING_REJECTED
    int replans = 0;
    int regenerations = 0;
    bool smoothed = false;

    bool exhausted() const;
    nlohmann::json summary() const;
};

// Full loop. Backend errors from planning propagate; everything else ends
// up in the result's failures and flags.
AgentResult run_agent(CallSession& session, ToolClient& tools, const std::vector<ToolSpec>& registry,
                      const InterleavedSequence& query, const AgentConfig& cfg = {});

}  // namespace isg::agent
