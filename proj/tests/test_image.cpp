#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "helpers.hpp"
#include "isg/errors.hpp"
#include "isg/image_eval.hpp"

using namespace isg;
using isg::test::layout;
using isg::test::MockRig;
using nlohmann::json;

namespace {

ContentToken img(int n) { return {TokenScope::Gen, Modality::Image, n}; }

json entry(int id, const std::string& q, std::vector<int> pre, const char* image = "<gen_img1>") {
    return {{"Question", q}, {"image", image}, {"id", id}, {"Preliminary", pre}};
}

ImageQuestion question(int id, std::vector<int> pre, int image = 1) {
    return {id, img(image), "q" + std::to_string(id), std::move(pre)};
}

}  // namespace

TEST(ImageTuple, JsonForms) {
    auto t = ImageTuple::from_json(json::array({"attribute", "yellow", "fish", "<gen_img2>"}));
    ASSERT_TRUE(t);
    EXPECT_EQ(*t, ImageTuple::make_attribute("yellow", "fish", img(2)));
    EXPECT_EQ(ImageTuple::from_json(t->to_json()), t);
    EXPECT_TRUE(ImageTuple::from_json(json::array({"relation", "on", "cat", "mat", "<gen_img1>"})));
    EXPECT_FALSE(ImageTuple::from_json(json::array({"entity", "cat"})));
    EXPECT_FALSE(ImageTuple::from_json(json::array({"entity", "cat", "<query_img1>"})));
    EXPECT_FALSE(ImageTuple::from_json(json::array({"colour", "cat", "<gen_img1>"})));
    EXPECT_EQ(parse_image_requirement("HALF"), ImageRequirement::Half);
    EXPECT_FALSE(parse_image_requirement("most"));
}

TEST(ExtractImageTuples, DropsOutsideAndDuplicates) {
    auto pred = parse_structure_prediction({{"Query", {"<query_text1>"}}, {"Answer", {"<gen_img1>", "<gen_text1>"}}});
    json reply = {{"tuple",
                   {{"entity", "cat", "<gen_img1>"},
                    {"entity", "cat", "<gen_img1>"},
                    {"entity", "dog", "<gen_img2>"},
                    {"attribute", "orange", "cat", "<gen_img1>"},
                    {"bogus"}}}};
    MockRig rig(json{{"s/image/extract", reply}});
    CallSession s(*rig.gateway, "s");
    auto ex = extract_image_tuples(s, layout("T"), pred, ImageRequirement::Half);
    EXPECT_EQ(ex.tuples.size(), 2u);
    EXPECT_EQ(ex.dropped.size(), 3u);
}

TEST(RepairQuestionDag, AddsEntityPrerequisites) {
    std::vector<ImageTuple> tuples = {ImageTuple::make_entity("cat", img(1)),
                                      ImageTuple::make_entity("mat", img(1)),
                                      ImageTuple::make_attribute("orange", "cat", img(1)),
                                      ImageTuple::make_relation("on", "cat", "mat", img(1))};
    json reply = {{"questions",
                   {entry(0, "Is there a cat?", {}), entry(1, "Is there a mat?", {}),
                    entry(2, "Is the cat orange?", {}), entry(3, "Is the cat on the mat?", {})}}};
    auto set = repair_question_dag(reply, tuples);
    ASSERT_EQ(set.questions.size(), 4u);
    EXPECT_EQ(set.questions[2].preliminaries, std::vector<int>{0});
    EXPECT_EQ(set.questions[3].preliminaries, (std::vector<int>{0, 1}));
    EXPECT_FALSE(set.reordered);
}

TEST(RepairQuestionDag, ForwardReferenceIsReordered) {
    json reply = json::array({entry(0, "Is the cat orange?", {1}), entry(1, "Is there a cat?", {})});
    auto set = repair_question_dag(reply, {});
    ASSERT_EQ(set.questions.size(), 2u);
    EXPECT_TRUE(set.reordered);
    EXPECT_EQ(set.questions[0].question, "Is there a cat?");
    EXPECT_EQ(set.questions[1].preliminaries, std::vector<int>{0});
}

TEST(RepairQuestionDag, UnknownCycleAndDuplicateIds) {
    json reply = json::array({entry(0, "root", {}), entry(1, "needs ghost", {7}), entry(2, "needs 1", {1}),
                              entry(3, "cycle a", {4}), entry(4, "cycle b", {3}), entry(0, "dup", {}),
                              entry(5, "self", {5}), entry(6, "text image", {}, "<gen_text1>"), "x"});
    auto set = repair_question_dag(reply, {});
    ASSERT_EQ(set.questions.size(), 1u);
    EXPECT_EQ(set.questions[0].question, "root");
    EXPECT_EQ(set.dropped.size(), 8u);
    EXPECT_THROW(repair_question_dag(json("nope"), {}), GenerationFailed);
}

TEST(RepairDagProperty, OutputIsTopologicalAndRenumbered) {
    std::mt19937 rng(77);
    for (int iter = 0; iter < 800; ++iter) {
        std::uniform_int_distribution<int> n_dist(0, 9);
        int n = n_dist(rng);
        std::vector<int> ids(n);
        for (int i = 0; i < n; ++i) ids[i] = i * 2;  // sparse ids
        std::shuffle(ids.begin(), ids.end(), rng);
        json reply = json::array();
        std::set<std::string> texts;
        for (int i = 0; i < n; ++i) {
            std::vector<int> pre;
            for (int k = 0; k < n; ++k) {
                if (std::uniform_int_distribution<int>(0, 5)(rng) == 0) pre.push_back(ids[k]);
            }
            if (std::uniform_int_distribution<int>(0, 9)(rng) == 0) pre.push_back(101);  // unknown
            std::string text = "q" + std::to_string(ids[i]);
            texts.insert(text);
            reply.push_back(entry(ids[i], text, pre));
        }
        auto set = repair_question_dag(reply, {});
        EXPECT_EQ(set.questions.size() + set.dropped.size(), static_cast<std::size_t>(n));
        std::set<std::string> seen;
        for (std::size_t i = 0; i < set.questions.size(); ++i) {
            const auto& q = set.questions[i];
            EXPECT_EQ(q.id, static_cast<int>(i));
            for (int p : q.preliminaries) EXPECT_LT(p, q.id);
            EXPECT_TRUE(texts.contains(q.question));
            EXPECT_TRUE(seen.insert(q.question).second);
        }
    }
}

TEST(EvaluateQuestionDag, GatingSkipsDependants) {
    // 0 -> 1 -> 2, 0 -> 3; question 1 fails, so 2 is gated.
    std::vector<ImageQuestion> qs = {question(0, {}), question(1, {0}), question(2, {1}), question(3, {0})};
    MockRig rig(json{{"s/image/vqa/0", {{"Judge", "Yes"}}},
                     {"s/image/vqa/1", {{"Judge", "No"}, {"Reason", "wrong colour"}}},
                     {"s/image/vqa/3", {{"Judge", "yes."}}}});
    CallSession s(*rig.gateway, "s");
    auto vs = evaluate_question_dag(s, qs, layout("T"), layout("IT"));
    ASSERT_EQ(vs.size(), 4u);
    EXPECT_EQ(vs[0].outcome, Outcome::Yes);
    EXPECT_EQ(vs[1].outcome, Outcome::No);
    EXPECT_EQ(vs[2].outcome, Outcome::GatedNo);
    EXPECT_EQ(vs[3].outcome, Outcome::Yes);
    EXPECT_EQ(s.calls(), 3u);
    EXPECT_DOUBLE_EQ(score_image_level(vs), 0.5);
}

TEST(EvaluateQuestionDag, MissingImageAndBadReply) {
    std::vector<ImageQuestion> qs = {question(0, {}, 2), question(1, {}, 1)};
    MockRig rig(json{{"s/image/vqa/1", "definitely"}});
    CallSession s(*rig.gateway, "s");
    auto vs = evaluate_question_dag(s, qs, layout("T"), layout("IT"));
    EXPECT_EQ(vs[0].outcome, Outcome::No);
    EXPECT_EQ(vs[0].reason, "missing image");
    EXPECT_EQ(vs[1].outcome, Outcome::No);
    EXPECT_EQ(s.calls(), 1u);
}

TEST(ScoreImageLevel, Examples) {
    EXPECT_EQ(score_image_level(std::vector<ImageVerdict>{}), 0.0);
    std::vector<ImageVerdict> vs(4);
    vs[0].outcome = vs[1].outcome = vs[2].outcome = Outcome::Yes;
    vs[3].outcome = Outcome::GatedNo;
    EXPECT_DOUBLE_EQ(score_image_level(vs), 0.75);
}

TEST(EvaluateImageLevel, FullPipeline) {
    auto pred = parse_structure_prediction({{"Query", {"<query_text1>"}}, {"Answer", {"<gen_img1>"}}});
    json fixture = {
        {"s/image/extract", {{"tuple", {{"entity", "cat", "<gen_img1>"}, {"attribute", "orange", "cat", "<gen_img1>"}}}}},
        {"s/image/questions", json::array({entry(0, "Is there a cat?", {}), entry(1, "Is the cat orange?", {})})},
        {"s/image/vqa/*", {{"Judge", "Yes"}}}};
    MockRig rig(fixture);
    CallSession s(*rig.gateway, "s");
    auto r = evaluate_image_level(s, layout("T"), layout("I"), pred, ImageRequirement::Full);
    EXPECT_DOUBLE_EQ(r.score, 1.0);
    EXPECT_EQ(r.questions.questions[1].preliminaries, std::vector<int>{0});
    EXPECT_EQ(r.artifact()["verdicts"].size(), 2u);
}
