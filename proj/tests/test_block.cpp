#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "isg/block_eval.hpp"
#include "isg/errors.hpp"

using namespace isg;
using isg::test::layout;
using isg::test::MockRig;
using nlohmann::json;

namespace {

ContentToken tok(const char* s) { return ContentToken::parse(s); }

StructurePrediction pred_tit() {
    return parse_structure_prediction(
        {{"Query", {"<query_text1>", "<query_img1>"}}, {"Answer", {"<gen_text1>", "<gen_img1>", "<gen_text2>"}}});
}

json yes(const std::string& why = "ok") { return {{"Judge", "Yes"}, {"Reason", why}}; }

}  // namespace

TEST(JudgeMode, Names) {
    EXPECT_EQ(parse_judge_mode("Yes_No"), JudgeMode::YesNo);
    EXPECT_EQ(parse_judge_mode("score"), JudgeMode::Score);
    EXPECT_THROW(parse_judge_mode("stars"), ConfigError);
    EXPECT_EQ(block_scale_minimum(JudgeMode::YesNo), 0.0);
    EXPECT_EQ(block_scale_minimum(JudgeMode::Score), 1.0);
}

TEST(ExtractRelationTuples, FiltersAgainstPrediction) {
    json reply = {{"relation",
                   {{"<query_img1>", "<gen_img1>", "same character"},
                    {"<gen_text1>", "<gen_img1>", "  describes  "},
                    {"<gen_img3>", "<gen_text1>", "outside"},
                    {"<gen_text1>", "<gen_text1>", "self"},
                    {"<gen_text2>", "<gen_img1>", "   "},
                    {"<gen_text1>", "<gen_img1>", "describes"},
                    "junk",
                    {{"subject", "<gen_text2>"}, {"object", "<gen_text1>"}, {"relation", "continues"}}}}};
    MockRig rig(json{{"s/block/extract", reply}});
    CallSession s(*rig.gateway, "s");
    auto ex = extract_relation_tuples(s, layout("TI"), pred_tit());
    ASSERT_EQ(ex.tuples.size(), 3u);
    EXPECT_EQ(ex.tuples[1], (RelationTuple{tok("<gen_text1>"), tok("<gen_img1>"), "describes"}));
    EXPECT_EQ(ex.tuples[2].relation, "continues");
    EXPECT_EQ(ex.dropped.size(), 5u);
}

TEST(ExtractRelationTuples, MissingListFails) {
    MockRig rig(json{{"s/block/extract", json{{"tuples", json::array()}}}});
    CallSession s(*rig.gateway, "s");
    EXPECT_THROW(extract_relation_tuples(s, layout("T"), pred_tit()), ExtractionFailed);
}

TEST(GenerateBlockQuestions, MatchesAndDiscards) {
    std::vector<RelationTuple> tuples = {{tok("<gen_text1>"), tok("<gen_img1>"), "describes"},
                                         {tok("<query_img1>"), tok("<gen_img1>"), "same style"}};
    json reply = json::array(
        {{{"subject", "<query_img1>"}, {"object", "<gen_img1>"}, {"relation", "same  style"},
          {"Question", "Do the first image and the second image share a style?"}},
         {{"subject", "<query_img1>"}, {"object", "<gen_img1>"}, {"relation", "same style"},
          {"Question", "Duplicate?"}},
         {{"subject", "<gen_text1>"}, {"object", "<gen_img1>"}, {"relation", "describes"},
          {"Question", "Does <gen_img1> match?"}},
         {{"subject", "<gen_text9>"}, {"object", "<gen_img1>"}, {"relation", "describes"},
          {"Question", "Unknown"}}});
    MockRig rig(json{{"s/block/questions", reply}});
    CallSession s(*rig.gateway, "s");
    auto set = generate_block_questions(s, tuples);
    ASSERT_EQ(set.questions.size(), 1u);
    EXPECT_EQ(set.questions[0].tuple, tuples[1]);
    EXPECT_EQ(set.discarded.size(), 3u);
    EXPECT_THROW(generate_block_questions(s, std::vector<RelationTuple>{}), EmptyInput);
}

TEST(ParseBlockJudgment, Variants) {
    EXPECT_TRUE(parse_block_judgment({{"Judge", " yes. "}}, JudgeMode::YesNo).yes);
    EXPECT_FALSE(parse_block_judgment({{"Judge", "No"}}, JudgeMode::YesNo).yes);
    EXPECT_TRUE(parse_block_judgment({{"Judge", true}}, JudgeMode::YesNo).yes);
    EXPECT_THROW(parse_block_judgment({{"Judge", "maybe"}}, JudgeMode::YesNo), UnparseableJudgment);
    EXPECT_EQ(parse_block_judgment({{"Judge", 7}}, JudgeMode::Score).score, 7);
    EXPECT_EQ(parse_block_judgment({{"Judge", "8/10"}}, JudgeMode::Score).score, 8);
    EXPECT_THROW(parse_block_judgment({{"Judge", 0}}, JudgeMode::Score), UnparseableJudgment);
    EXPECT_THROW(parse_block_judgment({{"Judge", 11}}, JudgeMode::Score), UnparseableJudgment);
    EXPECT_THROW(parse_block_judgment({{"Judge", 7.5}}, JudgeMode::Score), UnparseableJudgment);
    EXPECT_THROW(parse_block_judgment({{"Reason", "x"}}, JudgeMode::Score), UnparseableJudgment);
}

TEST(JudgeBlockQuestion, MissingBlockIsMinimumWithoutCall) {
    MockRig rig;
    CallSession s(*rig.gateway, "s");
    BlockQuestion q{{tok("<gen_text1>"), tok("<gen_img2>"), "describes"}, "Does it?"};
    for (auto mode : {JudgeMode::YesNo, JudgeMode::Score}) {
        auto j = judge_block_question(s, q, layout("T"), layout("TI"), mode);
        EXPECT_EQ(j.value(), block_scale_minimum(mode));
        EXPECT_EQ(j.reason, "missing block");
    }
    EXPECT_EQ(s.calls(), 0u);
}

TEST(JudgeBlockQuestion, UnparseableReplyIsMinimum) {
    MockRig rig(json{{"*/block/vqa/*", "looks good to me"}});
    CallSession s(*rig.gateway, "s");
    BlockQuestion q{{tok("<gen_text1>"), tok("<gen_img1>"), "describes"}, "Does the text describe this image?"};
    auto j = judge_block_question(s, q, layout("T"), layout("TI"), JudgeMode::Score, 0);
    EXPECT_EQ(j.score, 1);
    EXPECT_EQ(s.calls(), 1u);
}

TEST(ScoreBlockLevel, ExamplesAndMixedModes) {
    std::vector<BlockJudgment> js(4);
    for (auto& j : js) {
        j.mode = JudgeMode::YesNo;
        j.yes = true;
    }
    EXPECT_DOUBLE_EQ(score_block_level(js, JudgeMode::YesNo), 1.0);
    js[1].yes = false;
    EXPECT_DOUBLE_EQ(score_block_level(js, JudgeMode::YesNo), 0.75);
    EXPECT_EQ(score_block_level(std::vector<BlockJudgment>{}, JudgeMode::Score), 1.0);
    js[2].mode = JudgeMode::Score;
    EXPECT_THROW(score_block_level(js, JudgeMode::YesNo), MixedModes);
}

TEST(BlockScoreProperty, MeanOfJudgmentsWithinScale) {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> n(0, 12), sc(1, 10), coin(0, 1);
    for (int iter = 0; iter < 1000; ++iter) {
        JudgeMode mode = coin(rng) ? JudgeMode::Score : JudgeMode::YesNo;
        std::vector<BlockJudgment> js(static_cast<std::size_t>(n(rng)));
        long sum = 0;
        for (auto& j : js) {
            j.mode = mode;
            j.score = sc(rng);
            j.yes = coin(rng);
            sum += mode == JudgeMode::Score ? j.score : int(j.yes);
        }
        double got = score_block_level(js, mode);
        double expected = js.empty() ? block_scale_minimum(mode) : double(sum) / double(js.size());
        EXPECT_NEAR(got, expected, 1e-12);
        EXPECT_GE(got, block_scale_minimum(mode));
        EXPECT_LE(got, mode == JudgeMode::Score ? 10.0 : 1.0);
    }
}

TEST(EvaluateBlockLevel, FullPipeline) {
    json fixture = {
        {"s/block/extract", {{"relation", {{"<gen_text1>", "<gen_img1>", "describes"},
                                           {"<gen_img1>", "<gen_text2>", "continues"}}}}},
        {"s/block/questions",
         json::array({{{"subject", "<gen_text1>"}, {"object", "<gen_img1>"}, {"relation", "describes"},
                       {"Question", "Does the text describe this image?"}},
                      {{"subject", "<gen_img1>"}, {"object", "<gen_text2>"}, {"relation", "continues"},
                       {"Question", "Does the text continue this image?"}}})},
        {"s/block/vqa/yesno/0", yes()},
        {"s/block/vqa/yesno/1", {{"Judge", "No"}, {"Reason", "off"}}},
        {"s/block/vqa/score/0", {{"Judge", 9}}},
        {"s/block/vqa/score/1", {{"Judge", 4}}}};
    MockRig rig(fixture);
    CallSession s(*rig.gateway, "s");
    auto yn = evaluate_block_level(s, layout("TI"), layout("TIT"), pred_tit(), JudgeMode::YesNo);
    EXPECT_DOUBLE_EQ(yn.score, 0.5);
    EXPECT_TRUE(yn.failures.empty());
    auto sc = evaluate_block_level(s, layout("TI"), layout("TIT"), pred_tit(), JudgeMode::Score);
    EXPECT_DOUBLE_EQ(sc.score, 6.5);
    EXPECT_EQ(sc.artifact()["questions"].size(), 2u);
}

TEST(EvaluateBlockLevel, ExtractionFailureGivesMinimum) {
    MockRig rig(json{{"s/block/extract", "nothing useful"}});
    CallSession s(*rig.gateway, "s");
    auto r = evaluate_block_level(s, layout("T"), layout("TIT"), pred_tit(), JudgeMode::Score);
    EXPECT_EQ(r.score, 1.0);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].kind, "ExtractionFailed");
}
