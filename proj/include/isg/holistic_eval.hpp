#pragma once

// Holistic level: one judge call over the whole answer, optionally with the
// golden answer as reference.

#include <array>
#include <span>
#include <string>

#include <json.hpp>

#include "isg/content.hpp"
#include "isg/failure.hpp"
#include "isg/gateway.hpp"

namespace isg {

struct HolisticJudgment {
    int coherence = 1;
    int content_accuracy = 1;
    int relevance = 1;
    int visual_textual_alignment = 1;
    int creativity = 1;
    int overall = 1;
    std::string analysis;

    bool operator==(const HolisticJudgment&) const = default;
    nlohmann::json dimensions_json() const;
    nlohmann::json to_json() const;
};

// Keys are matched loosely (case, spacing and punctuation ignored); each
// dimension may be a number or {"Score": n}. Any score outside 1..10 or
// missing throws UnparseableJudgment.
HolisticJudgment parse_holistic_judgment(const nlohmann::json& j);

struct HolisticResult {
    HolisticJudgment judgment;
    bool with_golden = false;
    std::vector<Failure> failures;  // non-empty: judgment is the all-1 fallback

    nlohmann::json artifact() const;
};

// One gateway call. Throws ConfigError when use_golden but golden is empty.
// An unusable reply records overall 1 and a failure.
HolisticResult judge_holistic(CallSession& session, const InterleavedSequence& query,
                              const InterleavedSequence& answer,
                              const InterleavedSequence& golden, bool use_golden);

// Mean of overall scores. Throws EmptyInput.
double holistic_aggregate(std::span<const HolisticJudgment> judgments);

}  // namespace isg
