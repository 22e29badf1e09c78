#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "isg/errors.hpp"
#include "isg/structure_eval.hpp"

using namespace isg;
using isg::test::layout;
using isg::test::MockRig;
using nlohmann::json;

namespace {

json prediction_for(const std::string& query_pattern, const std::string& answer_pattern) {
    json q = json::array(), a = json::array();
    int qt = 0, qi = 0, gt = 0, gi = 0;
    for (char c : query_pattern) {
        q.push_back(c == 'T' ? "<query_text" + std::to_string(++qt) + ">"
                             : "<query_img" + std::to_string(++qi) + ">");
    }
    for (char c : answer_pattern) {
        a.push_back(c == 'T' ? "<gen_text" + std::to_string(++gt) + ">"
                             : "<gen_img" + std::to_string(++gi) + ">");
    }
    return {{"Query", q}, {"Answer", a}, {"Thought", "because"}};
}

std::string random_pattern(std::mt19937& rng, int max_len, bool no_adjacent_text) {
    std::uniform_int_distribution<int> len(1, max_len), coin(0, 1);
    std::string s;
    for (int n = len(rng); n > 0; --n) {
        char c = coin(rng) ? 'T' : 'I';
        if (no_adjacent_text && c == 'T' && !s.empty() && s.back() == 'T') c = 'I';
        s += c;
    }
    return s;
}

}  // namespace

TEST(ParseStructurePrediction, Valid) {
    auto p = parse_structure_prediction(prediction_for("TI", "ITIT"));
    EXPECT_EQ(p.query_tokens.size(), 2u);
    EXPECT_EQ(p.signature().str(), "I,T,I,T");
    EXPECT_EQ(p.thought, "because");
    EXPECT_TRUE(p.mentions(ContentToken::parse("<gen_img2>")));
    EXPECT_FALSE(p.mentions(ContentToken::parse("<gen_img3>")));
    EXPECT_EQ(parse_structure_prediction(p.to_json()).to_json(), p.to_json());
}

TEST(ParseStructurePrediction, Rejects) {
    EXPECT_THROW(parse_structure_prediction(json::array()), MalformedPrediction);
    EXPECT_THROW(parse_structure_prediction({{"Query", json::array()}}), MalformedPrediction);
    EXPECT_THROW(parse_structure_prediction({{"Query", {"<query_text1>"}}, {"Answer", {"<gen_img2>"}}}),
                 MalformedPrediction);
    EXPECT_THROW(parse_structure_prediction({{"Query", {"<gen_text1>"}}, {"Answer", {"<gen_img1>"}}}),
                 MalformedPrediction);
    EXPECT_THROW(parse_structure_prediction({{"Query", {"text"}}, {"Answer", {"<gen_img1>"}}}),
                 MalformedPrediction);
    EXPECT_THROW(parse_structure_prediction({{"Query", {"<query_text1>"}},
                                             {"Answer", {"<gen_text1>", "<gen_text2>"}}}),
                 MalformedPrediction);
    EXPECT_THROW(parse_structure_prediction({{"Query", {1}}, {"Answer", json::array()}}),
                 MalformedPrediction);
}

TEST(MatchStructures, Examples) {
    auto pred = parse_structure_prediction(prediction_for("T", "ITIT"));
    EXPECT_TRUE(match_structures(pred, layout("ITIT")).matched);
    auto v = match_structures(pred, layout("TITI"));
    EXPECT_FALSE(v.matched);
    EXPECT_EQ(v.predicted.str(), "I,T,I,T");
    EXPECT_EQ(v.actual.str(), "T,I,T,I");
    EXPECT_FALSE(match_structures(pred, layout("ITI")).matched);
}

TEST(StructuralScore, Examples) {
    std::vector<StructuralVerdict> v(4);
    v[0].matched = v[2].matched = v[3].matched = true;
    EXPECT_DOUBLE_EQ(structural_score(v), 0.75);
    EXPECT_THROW(structural_score(std::vector<StructuralVerdict>{}), EmptyInput);
}

TEST(PredictStructure, FourImageTextPairs) {
    MockRig rig(json{{"s/structure", "```json\n" + prediction_for("T", "ITITITIT").dump() + "\n```"}});
    CallSession s(*rig.gateway, "s");
    InterleavedSequence q;
    q.blocks.push_back(Block::text("Generate 4 image-text pairs showing how to fold a paper crane."));
    auto pred = predict_structure(s, q);
    EXPECT_EQ(pred.signature().str(), "I,T,I,T,I,T,I,T");
    EXPECT_EQ(s.calls_with_prefix("structure"), 1u);
}

TEST(PredictStructure, NoJsonIsMalformed) {
    MockRig rig(json{{"s/structure", "I think it is four pairs."}});
    CallSession s(*rig.gateway, "s");
    EXPECT_THROW(predict_structure(s, layout("T")), MalformedPrediction);
    EXPECT_THROW(predict_structure(s, InterleavedSequence{}), EmptyInput);
}

TEST(RenderLabelled, LabelsEveryBlock) {
    auto parts = render_labelled(layout("TIT", "q"), TokenScope::Query);
    ASSERT_EQ(parts.size(), 4u);
    EXPECT_EQ(std::get<std::string>(parts[0]), "<query_text1>: q text 1");
    EXPECT_EQ(std::get<std::string>(parts[1]), "<query_img1>:");
    EXPECT_TRUE(std::holds_alternative<ImageRef>(parts[2]));
    EXPECT_EQ(std::get<std::string>(parts[3]), "<query_text2>: q text 3");
}

// Self-consistency: a prediction built from the golden answer's own layout
// always matches it after normalization, and matches any other answer exactly
// when the kind sequences agree.
TEST(StructureProperty, MatchAgreesWithKindSequenceOracle) {
    std::mt19937 rng(21);
    for (int i = 0; i < 500; ++i) {
        std::string golden = random_pattern(rng, 8, true);
        std::string other = random_pattern(rng, 8, false);
        auto pred = parse_structure_prediction(prediction_for("T", golden));
        EXPECT_TRUE(match_structures(pred, normalize_sequence(layout(golden))).matched) << golden;

        std::string merged;  // oracle normalization: collapse runs of T
        for (char c : other) {
            if (!(c == 'T' && !merged.empty() && merged.back() == 'T')) merged += c;
        }
        bool expected = merged == golden;
        EXPECT_EQ(match_structures(pred, normalize_sequence(layout(other))).matched, expected)
            << golden << " vs " << other;
    }
}
