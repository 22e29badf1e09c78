#pragma once

// Block level: (subject, object, relation) requirements between blocks,
// turned into verification questions and judged by the VQA backend.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "isg/content.hpp"
#include "isg/failure.hpp"
#include "isg/gateway.hpp"
#include "isg/structure_eval.hpp"

namespace isg {

enum class JudgeMode { YesNo, Score };

std::string_view judge_mode_name(JudgeMode m);  // "yesno" / "score"
JudgeMode parse_judge_mode(std::string_view s);  // throws ConfigError
// 0.0 for YES_NO, 1.0 for SCORE.
double block_scale_minimum(JudgeMode m);

struct RelationTuple {
    ContentToken subject;
    ContentToken object;
    std::string relation;

    bool operator==(const RelationTuple&) const = default;
    nlohmann::json to_json() const;
};

struct BlockQuestion {
    RelationTuple tuple;
    std::string question;
};

struct BlockJudgment {
    JudgeMode mode = JudgeMode::Score;
    bool yes = false;  // YES_NO
    int score = 1;     // SCORE, 1..10
    std::string reason;

    static BlockJudgment minimum(JudgeMode mode, std::string reason);
    // 1/0 under YES_NO, the score under SCORE.
    double value() const;
    nlohmann::json to_json() const;
};

struct TupleExtraction {
    std::vector<RelationTuple> tuples;
    std::vector<Dropped> dropped;
};

// One gateway call. Tuples citing tokens outside the predicted structure,
// self-relations and blank relations are dropped and kept in `dropped`.
// Throws ExtractionFailed when the reply has no "relation" list.
TupleExtraction extract_relation_tuples(CallSession& session, const InterleavedSequence& query,
                                        const StructurePrediction& pred);

struct BlockQuestionSet {
    std::vector<BlockQuestion> questions;  // in tuple order
    std::vector<Dropped> discarded;
};

// One gateway call; replies are matched back to tuples by whitespace-
// normalized field equality. Throws EmptyInput for no tuples and
// GenerationFailed for an unusable reply.
BlockQuestionSet generate_block_questions(CallSession& session,
                                          std::span<const RelationTuple> tuples);

// Parses a {"Judge", "Reason"} reply under `mode`. Throws UnparseableJudgment.
BlockJudgment parse_block_judgment(const nlohmann::json& j, JudgeMode mode);

// Never throws for evaluator-side problems: an unresolvable token or an
// unparseable reply yields the scale minimum. Backend errors propagate.
BlockJudgment judge_block_question(CallSession& session, const BlockQuestion& q,
                                   const InterleavedSequence& query,
                                   const InterleavedSequence& answer, JudgeMode mode,
                                   std::size_t index = 0);

// SCORE: mean in [1,10]; YES_NO: fraction of yes. Empty → scale minimum.
// Throws MixedModes when a judgment's mode differs from `mode`.
double score_block_level(std::span<const BlockJudgment> judgments, JudgeMode mode);

struct BlockLevelResult {
    JudgeMode mode = JudgeMode::Score;
    TupleExtraction extraction;
    BlockQuestionSet questions;
    std::vector<BlockJudgment> judgments;
    double score = 1.0;
    std::vector<Failure> failures;

    nlohmann::json artifact() const;
};

// Extraction → questions → judgments → score. Evaluator failures become
// entries in `failures` and push the score to the minimum.
BlockLevelResult evaluate_block_level(CallSession& session, const InterleavedSequence& query,
                                      const InterleavedSequence& answer,
                                      const StructurePrediction& pred, JudgeMode mode);

}  // namespace isg
