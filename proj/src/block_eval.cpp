#include "isg/block_eval.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "isg/errors.hpp"
#include "isg/prompts.hpp"
#include "isg/util.hpp"

namespace isg {

using nlohmann::json;

std::string_view judge_mode_name(JudgeMode m) {
    return m == JudgeMode::YesNo ? "yesno" : "score";
}

JudgeMode parse_judge_mode(std::string_view s) {
    std::string v = util::to_lower(s);
    if (v == "yesno" || v == "yes_no" || v == "yes-no") return JudgeMode::YesNo;
    if (v == "score") return JudgeMode::Score;
    throw ConfigError("unknown VQA mode '" + std::string(s) + "'");
}

double block_scale_minimum(JudgeMode m) { return m == JudgeMode::YesNo ? 0.0 : 1.0; }

json RelationTuple::to_json() const {
    return {{"subject", subject.str()}, {"object", object.str()}, {"relation", relation}};
}

BlockJudgment BlockJudgment::minimum(JudgeMode mode, std::string reason) {
    BlockJudgment j;
    j.mode = mode;
    j.yes = false;
    j.score = 1;
    j.reason = std::move(reason);
    return j;
}

double BlockJudgment::value() const {
    return mode == JudgeMode::YesNo ? (yes ? 1.0 : 0.0) : static_cast<double>(score);
}

json BlockJudgment::to_json() const {
    json j = {{"mode", judge_mode_name(mode)}, {"reason", reason}};
    if (mode == JudgeMode::YesNo) {
        j["judge"] = yes ? "Yes" : "No";
    } else {
        j["judge"] = score;
    }
    return j;
}

namespace {

std::optional<ContentToken> token_field(const json& v) {
    if (!v.is_string()) return std::nullopt;
    return ContentToken::try_parse(v.get<std::string>());
}

const json* first_list(const json& j, std::initializer_list<const char*> keys) {
    if (j.is_array()) return &j;
    if (!j.is_object()) return nullptr;
    for (const char* k : keys) {
        if (j.contains(k) && j[k].is_array()) return &j[k];
    }
    for (const auto& [_, v] : j.items()) {
        if (v.is_array()) return &v;
    }
    return nullptr;
}

}  // namespace

TupleExtraction extract_relation_tuples(CallSession& session, const InterleavedSequence& query,
                                        const StructurePrediction& pred) {
    std::vector<UserPart> parts{std::string("Here is the prompt:")};
    for (auto& p : render_labelled(query, TokenScope::Query)) parts.push_back(std::move(p));
    parts.emplace_back("Here is the element sequence: " + render_element_sequence(pred));

    ModelResponse resp = session.complete("block_extract", "block/extract",
                                          prompts::block_requirements_extraction(), std::move(parts));
    json j;
    try {
        j = extract_json(resp.text);
    } catch (const NoJsonFound&) {
        throw ExtractionFailed("block requirement reply contains no JSON");
    }
    const json* list = nullptr;
    if (j.is_object()) {
        for (const char* k : {"relation", "relations", "relatio"}) {
            if (j.contains(k) && j[k].is_array()) {
                list = &j[k];
                break;
            }
        }
    }
    if (list == nullptr) throw ExtractionFailed("block requirement reply lacks a \"relation\" list");

    TupleExtraction out;
    for (const json& item : *list) {
        json sub, obj, rel;
        if (item.is_array() && item.size() == 3) {
            sub = item[0];
            obj = item[1];
            rel = item[2];
        } else if (item.is_object()) {
            sub = item.value("subject", json());
            obj = item.value("object", json());
            rel = item.value("relation", json());
        } else {
            out.dropped.push_back({item, "not a (subject, object, relation) triplet"});
            continue;
        }
        auto s = token_field(sub);
        auto o = token_field(obj);
        if (!s || !o || !rel.is_string()) {
            out.dropped.push_back({item, "malformed triplet fields"});
            continue;
        }
        if (!pred.mentions(*s) || !pred.mentions(*o)) {
            out.dropped.push_back({item, "token outside the predicted structure"});
            continue;
        }
        if (*s == *o) {
            out.dropped.push_back({item, "subject equals object"});
            continue;
        }
        RelationTuple t{*s, *o, util::collapse_whitespace(rel.get<std::string>())};
        if (t.relation.empty()) {
            out.dropped.push_back({item, "empty relation"});
            continue;
        }
        if (std::find(out.tuples.begin(), out.tuples.end(), t) != out.tuples.end()) {
            out.dropped.push_back({item, "duplicate triplet"});
            continue;
        }
        out.tuples.push_back(std::move(t));
    }
    return out;
}

namespace {

bool question_well_formed(const std::string& q, std::string& why) {
    static const std::regex kImageToken(R"(<(query|gen)_img[0-9]+>)");
    static const std::regex kOrdinalImage(R"(\b(third|fourth|fifth)\s+image)", std::regex::icase);
    if (util::is_blank(q)) {
        why = "empty question";
        return false;
    }
    if (std::regex_search(q, kImageToken)) {
        why = "question cites an image token instead of 'this/first/second image'";
        return false;
    }
    if (std::regex_search(q, kOrdinalImage)) {
        why = "question references more than two images";
        return false;
    }
    return true;
}

}  // namespace

BlockQuestionSet generate_block_questions(CallSession& session,
                                          std::span<const RelationTuple> tuples) {
    if (tuples.empty()) throw EmptyInput("block question generation needs at least one tuple");
    json input = json::array();
    for (const auto& t : tuples) input.push_back({t.subject.str(), t.object.str(), t.relation});

    ModelResponse resp =
        session.complete("block_questions", "block/questions", prompts::block_question_generation(),
                         {std::string("Here is the input:\n") + input.dump()});
    json j;
    try {
        j = extract_json(resp.text);
    } catch (const NoJsonFound&) {
        throw GenerationFailed("block question reply contains no JSON");
    }
    const json* list = first_list(j, {"questions", "Questions"});
    if (list == nullptr) throw GenerationFailed("block question reply is not a list");

    BlockQuestionSet out;
    std::vector<std::optional<BlockQuestion>> slots(tuples.size());
    for (const json& item : *list) {
        if (!item.is_object()) {
            out.discarded.push_back({item, "not an object"});
            continue;
        }
        auto field = [&](const char* k) {
            return item.contains(k) && item[k].is_string()
                       ? util::collapse_whitespace(item[k].get<std::string>())
                       : std::string();
        };
        std::string sub = field("subject");
        std::string obj = field("object");
        std::string rel = field("relation");
        std::string question = item.contains("Question") ? field("Question") : field("question");
        auto it = std::find_if(tuples.begin(), tuples.end(), [&](const RelationTuple& t) {
            return t.subject.str() == sub && t.object.str() == obj && t.relation == rel;
        });
        if (it == tuples.end()) {
            out.discarded.push_back({item, "does not match any input triplet"});
            continue;
        }
        auto& slot = slots[static_cast<std::size_t>(it - tuples.begin())];
        if (slot) {
            out.discarded.push_back({item, "second question for the same triplet"});
            continue;
        }
        std::string why;
        if (!question_well_formed(question, why)) {
            out.discarded.push_back({item, why});
            continue;
        }
        slot = BlockQuestion{*it, question};
    }
    for (auto& s : slots) {
        if (s) out.questions.push_back(std::move(*s));
    }
    return out;
}

BlockJudgment parse_block_judgment(const json& j, JudgeMode mode) {
    if (!j.is_object() || !j.contains("Judge")) {
        throw UnparseableJudgment("judgment lacks a \"Judge\" field");
    }
    BlockJudgment out;
    out.mode = mode;
    if (j.contains("Reason") && j["Reason"].is_string()) out.reason = j["Reason"];
    const json& v = j["Judge"];
    if (mode == JudgeMode::YesNo) {
        if (v.is_boolean()) {
            out.yes = v.get<bool>();
            return out;
        }
        if (!v.is_string()) throw UnparseableJudgment("Yes/No judgment is not a string");
        std::string s = util::to_lower(util::trim(v.get<std::string>()));
        while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.pop_back();
        if (s == "yes") {
            out.yes = true;
        } else if (s == "no") {
            out.yes = false;
        } else {
            throw UnparseableJudgment("Yes/No judgment '" + v.get<std::string>() + "'");
        }
        return out;
    }
    double score = 0;
    if (v.is_number()) {
        score = v.get<double>();
    } else if (v.is_string()) {
        static const std::regex kInt(R"(^\s*([0-9]+)\s*(/\s*10)?\s*$)");
        std::smatch m;
        std::string s = v.get<std::string>();
        if (!std::regex_match(s, m, kInt)) throw UnparseableJudgment("score '" + s + "'");
        score = std::stod(m[1]);
    } else {
        throw UnparseableJudgment("score judgment is neither number nor string");
    }
    if (score != std::floor(score) || score < 1 || score > 10) {
        throw UnparseableJudgment("score " + v.dump() + " outside 1..10");
    }
    out.score = static_cast<int>(score);
    return out;
}

BlockJudgment judge_block_question(CallSession& session, const BlockQuestion& q,
                                   const InterleavedSequence& query,
                                   const InterleavedSequence& answer, JudgeMode mode,
                                   std::size_t index) {
    const Block* subject = nullptr;
    const Block* object = nullptr;
    try {
        subject = &resolve_token(q.tuple.subject, query, answer);
        object = &resolve_token(q.tuple.object, query, answer);
    } catch (const TokenOutOfRange&) {
        return BlockJudgment::minimum(mode, "missing block");
    }
    const auto scale =
        mode == JudgeMode::Score ? prompts::JudgeScale::Score1To10 : prompts::JudgeScale::YesNo;
    std::string role;
    std::vector<UserPart> parts{std::string("Here is the input:")};
    if (subject->is_text() && object->is_text()) {
        role = prompts::block_vqa_two_texts(scale);
        parts.emplace_back("Text 1 (" + q.tuple.subject.str() + "): " + subject->text());
        parts.emplace_back("Text 2 (" + q.tuple.object.str() + "): " + object->text());
    } else {
        role = prompts::block_vqa_multimodal(scale);
        const int images = int(subject->is_image()) + int(object->is_image());
        int seen = 0;
        for (auto [tok, block] : {std::pair{q.tuple.subject, subject}, {q.tuple.object, object}}) {
            if (block->is_text()) {
                parts.emplace_back("Text (" + tok.str() + "): " + block->text());
            } else {
                ++seen;
                parts.emplace_back(images == 1 ? "This image:"
                                               : (seen == 1 ? "First image:" : "Second image:"));
                parts.emplace_back(block->image());
            }
        }
    }
    parts.emplace_back("Question: " + q.question);
    parts.emplace_back("Now please judge the question.");

    const std::string alias =
        "block/vqa/" + std::string(judge_mode_name(mode)) + "/" + std::to_string(index);
    ModelResponse resp = session.complete("block_vqa", alias, std::move(role), std::move(parts));
    try {
        return parse_block_judgment(extract_json(resp.text), mode);
    } catch (const Error& e) {
        return BlockJudgment::minimum(mode, std::string("unparseable judgment: ") + e.what());
    }
}

double score_block_level(std::span<const BlockJudgment> judgments, JudgeMode mode) {
    if (judgments.empty()) return block_scale_minimum(mode);
    double sum = 0;
    for (const auto& j : judgments) {
        if (j.mode != mode) throw MixedModes("block judgments mix Yes/No and 1-10 modes");
        sum += j.value();
    }
    return sum / static_cast<double>(judgments.size());
}

json BlockLevelResult::artifact() const {
    json tuples = json::array();
    for (const auto& t : extraction.tuples) tuples.push_back(t.to_json());
    json qs = json::array();
    for (std::size_t i = 0; i < questions.questions.size(); ++i) {
        json q = questions.questions[i].tuple.to_json();
        q["question"] = questions.questions[i].question;
        if (i < judgments.size()) q["judgment"] = judgments[i].to_json();
        qs.push_back(std::move(q));
    }
    return {{"mode", judge_mode_name(mode)},
            {"tuples", tuples},
            {"dropped_tuples", dropped_to_json(extraction.dropped)},
            {"questions", qs},
            {"discarded_questions", dropped_to_json(questions.discarded)},
            {"score", score},
            {"failures", failures_to_json(failures)}};
}

BlockLevelResult evaluate_block_level(CallSession& session, const InterleavedSequence& query,
                                      const InterleavedSequence& answer,
                                      const StructurePrediction& pred, JudgeMode mode) {
    BlockLevelResult r;
    r.mode = mode;
    r.score = block_scale_minimum(mode);
    try {
        r.extraction = extract_relation_tuples(session, query, pred);
    } catch (const ExtractionFailed& e) {
        r.failures.push_back(Failure::from("block", e));
        return r;
    }
    if (!r.extraction.tuples.empty()) {
        try {
            r.questions = generate_block_questions(session, r.extraction.tuples);
        } catch (const GenerationFailed& e) {
            r.failures.push_back(Failure::from("block", e));
        }
    }
    for (std::size_t i = 0; i < r.questions.questions.size(); ++i) {
        r.judgments.push_back(
            judge_block_question(session, r.questions.questions[i], query, answer, mode, i));
    }
    r.score = score_block_level(r.judgments, mode);
    return r;
}

}  // namespace isg
