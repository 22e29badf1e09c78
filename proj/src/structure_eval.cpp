#include "isg/structure_eval.hpp"

#include <algorithm>
#include <numeric>

#include "isg/errors.hpp"
#include "isg/prompts.hpp"

namespace isg {

using nlohmann::json;

StructureSignature StructurePrediction::signature() const {
    StructureSignature sig;
    for (const auto& t : answer_tokens) sig.sequence.push_back(t.kind);
    return sig;
}

bool StructurePrediction::mentions(const ContentToken& token) const {
    const auto& list = token.scope == TokenScope::Query ? query_tokens : answer_tokens;
    return std::find(list.begin(), list.end(), token) != list.end();
}

json StructurePrediction::to_json() const {
    json q = json::array();
    json a = json::array();
    for (const auto& t : query_tokens) q.push_back(t.str());
    for (const auto& t : answer_tokens) a.push_back(t.str());
    json out = {{"Query", q}, {"Answer", a}};
    if (!thought.empty()) out["Thought"] = thought;
    return out;
}

namespace {

std::vector<ContentToken> parse_token_list(const json& j, const char* key, TokenScope scope) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw MalformedPrediction(std::string("structure prediction lacks a \"") + key + "\" list");
    }
    std::vector<ContentToken> out;
    int texts = 0;
    int images = 0;
    for (const auto& item : j[key]) {
        if (!item.is_string()) {
            throw MalformedPrediction(std::string("non-string entry in \"") + key + "\"");
        }
        auto tok = ContentToken::try_parse(item.get<std::string>());
        if (!tok) {
            throw MalformedPrediction("'" + item.get<std::string>() + "' is not a content token");
        }
        if (tok->scope != scope) {
            throw MalformedPrediction(tok->str() + " has the wrong scope for \"" + key + "\"");
        }
        int expected = tok->kind == Modality::Text ? ++texts : ++images;
        if (tok->index != expected) {
            throw MalformedPrediction(tok->str() + " breaks consecutive numbering in \"" + key +
                                      "\"");
        }
        out.push_back(*tok);
    }
    return out;
}

}  // namespace

StructurePrediction parse_structure_prediction(const json& j) {
    if (!j.is_object()) throw MalformedPrediction("structure prediction is not a JSON object");
    StructurePrediction pred;
    pred.query_tokens = parse_token_list(j, "Query", TokenScope::Query);
    pred.answer_tokens = parse_token_list(j, "Answer", TokenScope::Gen);
    for (std::size_t i = 1; i < pred.answer_tokens.size(); ++i) {
        if (pred.answer_tokens[i].kind == Modality::Text &&
            pred.answer_tokens[i - 1].kind == Modality::Text) {
            throw MalformedPrediction("adjacent <gen_text> tokens in \"Answer\"");
        }
    }
    if (j.contains("Thought") && j["Thought"].is_string()) pred.thought = j["Thought"];
    return pred;
}

std::vector<UserPart> render_labelled(const InterleavedSequence& seq, TokenScope scope) {
    std::vector<UserPart> parts;
    auto tokens = tokenize_sequence(seq, scope);
    for (std::size_t i = 0; i < seq.blocks.size(); ++i) {
        const Block& b = seq.blocks[i];
        if (b.is_text()) {
            parts.emplace_back(tokens[i].str() + ": " + b.text());
        } else {
            parts.emplace_back(tokens[i].str() + ":");
            parts.emplace_back(b.image());
        }
    }
    return parts;
}

std::string render_token_list(const std::vector<ContentToken>& tokens) {
    json arr = json::array();
    for (const auto& t : tokens) arr.push_back(t.str());
    return arr.dump();
}

std::string render_element_sequence(const StructurePrediction& pred) {
    return "Query: " + render_token_list(pred.query_tokens) +
           "; Answer: " + render_token_list(pred.answer_tokens);
}

StructurePrediction predict_structure(CallSession& session, const InterleavedSequence& query) {
    if (query.empty()) throw EmptyInput("structure prediction needs a non-empty query");
    std::vector<UserPart> parts{std::string("Here is the prompt:")};
    for (auto& p : render_labelled(query, TokenScope::Query)) parts.push_back(std::move(p));
    ModelResponse resp =
        session.complete("structure", "structure", prompts::structure_extraction(), std::move(parts));
    json j;
    try {
        j = extract_json(resp.text);
    } catch (const NoJsonFound&) {
        throw MalformedPrediction("structure reply contains no JSON");
    }
    return parse_structure_prediction(j);
}

StructuralVerdict match_structures(const StructurePrediction& pred,
                                   const InterleavedSequence& answer) {
    StructuralVerdict v;
    v.predicted = pred.signature();
    v.actual = structure_signature(answer);
    v.matched = v.predicted == v.actual;
    return v;
}

double structural_score(std::span<const StructuralVerdict> verdicts) {
    if (verdicts.empty()) throw EmptyInput("structural_score of an empty verdict list");
    auto matched = std::count_if(verdicts.begin(), verdicts.end(),
                                 [](const StructuralVerdict& v) { return v.matched; });
    return static_cast<double>(matched) / static_cast<double>(verdicts.size());
}

}  // namespace isg
