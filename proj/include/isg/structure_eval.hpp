#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "isg/content.hpp"
#include "isg/gateway.hpp"

namespace isg {

struct StructurePrediction {
    std::vector<ContentToken> query_tokens;
    std::vector<ContentToken> answer_tokens;
    std::string thought;

    StructureSignature signature() const;
    // Every token the prediction names; the vocabulary block and image
    // requirements are allowed to cite.
    bool mentions(const ContentToken& token) const;
    nlohmann::json to_json() const;
};

// Parses {"Query": [...], "Answer": [...], "Thought"?}. Throws
// MalformedPrediction when a key is missing, a token does not parse, a list
// holds the wrong scope, per-kind indices are not 1,2,3,... in order, or the
// answer has adjacent <gen_text> tokens.
StructurePrediction parse_structure_prediction(const nlohmann::json& j);

// One gateway call with the structure-extraction prompt.
// Throws MalformedPrediction; backend errors propagate.
StructurePrediction predict_structure(CallSession& session, const InterleavedSequence& query);

struct StructuralVerdict {
    bool matched = false;
    StructureSignature predicted;
    StructureSignature actual;
};

StructuralVerdict match_structures(const StructurePrediction& pred,
                                   const InterleavedSequence& answer);

// Mean of matched indicators. Throws EmptyInput.
double structural_score(std::span<const StructuralVerdict> verdicts);

// Shared by the evaluators: the query rendered as labelled parts, e.g.
// "<query_text1>: ..." followed by "<query_img1>:" and the image itself.
std::vector<UserPart> render_labelled(const InterleavedSequence& seq, TokenScope scope);
std::string render_token_list(const std::vector<ContentToken>& tokens);
std::string render_element_sequence(const StructurePrediction& pred);

}  // namespace isg
