#include "isg/holistic_eval.hpp"

#include <cctype>
#include <cmath>

#include "isg/errors.hpp"
#include "isg/prompts.hpp"
#include "isg/structure_eval.hpp"

namespace isg {

using nlohmann::json;

json HolisticJudgment::dimensions_json() const {
    return {{"coherence", coherence},
            {"content_accuracy", content_accuracy},
            {"relevance", relevance},
            {"visual_textual_alignment", visual_textual_alignment},
            {"creativity", creativity}};
}

json HolisticJudgment::to_json() const {
    return {{"dimensions", dimensions_json()}, {"overall", overall}, {"analysis", analysis}};
}

namespace {

std::string squash(const std::string& key) {
    std::string out;
    for (unsigned char c : key) {
        if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

int score_of(const json& v, const std::string& key) {
    const json* s = &v;
    if (v.is_object()) {
        s = nullptr;
        for (const auto& [k, inner] : v.items()) {
            if (squash(k) == "score") s = &inner;
        }
        if (s == nullptr) throw UnparseableJudgment("'" + key + "' has no Score");
    }
    double d = 0;
    if (s->is_number()) {
        d = s->get<double>();
    } else if (s->is_string()) {
        try {
            std::size_t used = 0;
            d = std::stod(s->get<std::string>(), &used);
        } catch (const std::exception&) {
            throw UnparseableJudgment("'" + key + "' score is not a number");
        }
    } else {
        throw UnparseableJudgment("'" + key + "' score is not a number");
    }
    if (d != std::floor(d) || d < 1 || d > 10) {
        throw UnparseableJudgment("'" + key + "' score " + s->dump() + " outside 1..10");
    }
    return static_cast<int>(d);
}

}  // namespace

HolisticJudgment parse_holistic_judgment(const json& j) {
    if (!j.is_object()) throw UnparseableJudgment("holistic reply is not an object");
    HolisticJudgment h;
    struct Slot {
        const char* prefix;
        int* field;
        bool seen = false;
    };
    Slot slots[] = {{"coherence", &h.coherence},
                    {"content", &h.content_accuracy},
                    {"relevance", &h.relevance},
                    {"visual", &h.visual_textual_alignment},
                    {"creativ", &h.creativity},
                    {"overall", &h.overall}};
    for (const auto& [k, v] : j.items()) {
        std::string key = squash(k);
        if (key == "analysis") {
            if (v.is_string()) h.analysis = v.get<std::string>();
            continue;
        }
        for (auto& slot : slots) {
            if (key.rfind(slot.prefix, 0) == 0 && !slot.seen) {
                *slot.field = score_of(v, k);
                slot.seen = true;
                break;
            }
        }
    }
    for (const auto& slot : slots) {
        if (!slot.seen) throw UnparseableJudgment(std::string("holistic reply lacks '") + slot.prefix + "'");
    }
    return h;
}

json HolisticResult::artifact() const {
    json out = judgment.to_json();
    out["with_golden"] = with_golden;
    out["failures"] = failures_to_json(failures);
    return out;
}

HolisticResult judge_holistic(CallSession& session, const InterleavedSequence& query,
                              const InterleavedSequence& answer, const InterleavedSequence& golden,
                              bool use_golden) {
    if (use_golden && golden.blocks.empty()) {
        throw ConfigError("golden answer required for holistic judging");
    }
    std::vector<UserPart> parts{std::string("=== Query ===")};
    for (auto& p : render_labelled(query, TokenScope::Query)) parts.push_back(std::move(p));
    parts.emplace_back("=== Answer ===");
    for (auto& p : render_labelled(answer, TokenScope::Gen)) parts.push_back(std::move(p));
    if (use_golden) {
        parts.emplace_back("=== Golden Answer ===");
        for (auto& p : render_labelled(golden, TokenScope::Gen)) parts.push_back(std::move(p));
    }
    parts.emplace_back("=== End ===");

    HolisticResult r;
    r.with_golden = use_golden;
    ModelResponse resp = session.complete("holistic", "holistic", prompts::holistic_judge(use_golden),
                                          std::move(parts));
    try {
        r.judgment = parse_holistic_judgment(extract_json(resp.text));
    } catch (const Error& e) {
        r.judgment = HolisticJudgment{};
        r.judgment.analysis = std::string("unparseable judgment: ") + e.what();
        r.failures.push_back(Failure::from("holistic", e));
    }
    return r;
}

double holistic_aggregate(std::span<const HolisticJudgment> judgments) {
    if (judgments.empty()) throw EmptyInput("no holistic judgments to aggregate");
    double sum = 0;
    for (const auto& j : judgments) sum += j.overall;
    return sum / static_cast<double>(judgments.size());
}

}  // namespace isg
