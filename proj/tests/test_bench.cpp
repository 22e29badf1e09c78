#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <regex>

#include "helpers.hpp"
#include "isg/bench.hpp"
#include "isg/errors.hpp"
#include "isg/util.hpp"

using namespace isg;
using isg::test::layout;
using isg::test::MockRig;
using isg::test::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = ISG_FIXTURES_DIR;

void write_json(const fs::path& p, const json& j) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << j.dump(2);
}

json sample_json(const std::string& id) {
    return {{"id", id},
            {"category", "Style Transfer"},
            {"subcategory", "Photo Variation"},
            {"query", {{"blocks", {{{"type", "text"}, {"content", "Make a variation."}}}}}},
            {"golden", {{"blocks", {{{"type", "text"}, {"content", "Here it is."}}}}}}};
}

Sample make_sample(const std::string& id, const std::string& subcategory, ImageRequirement req) {
    const Category* cat = Taxonomy::builtin().category_of(subcategory);
    Sample s;
    s.id = id;
    s.subcategory = subcategory;
    s.category = cat->name;
    s.modality_class = cat->modality;
    s.image_requirement = req;
    s.query = layout("T", "q");
    s.golden = layout("ITIT", "g");
    return s;
}

json four_of_each(const std::string& id) {
    json rel = json::array(), qs = json::array(), tup = json::array(), iqs = json::array();
    const char* pairs[4][2] = {{"<gen_img1>", "<gen_text1>"},
                               {"<gen_img2>", "<gen_text2>"},
                               {"<gen_text1>", "<gen_img2>"},
                               {"<query_text1>", "<gen_img1>"}};
    for (int i = 0; i < 4; ++i) {
        std::string r = "relation " + std::to_string(i);
        rel.push_back({pairs[i][0], pairs[i][1], r});
        qs.push_back({{"subject", pairs[i][0]}, {"object", pairs[i][1]}, {"relation", r},
                      {"Question", "Does the text match this image?"}});
        std::string img = i < 2 ? "<gen_img1>" : "<gen_img2>";
        std::string name = "thing" + std::to_string(i);
        tup.push_back({"entity", name, img});
        iqs.push_back({{"Question", "Is there a " + name + "?"}, {"image", img}, {"id", i}, {"Preliminary", json::array()}});
    }
    json f = {{id + "/structure", {{"Query", {"<query_text1>"}}, {"Answer", {"<gen_img1>", "<gen_text1>", "<gen_img2>", "<gen_text2>"}}}},
              {id + "/block/extract", {{"relation", rel}}},
              {id + "/block/questions", qs},
              {id + "/block/vqa/*", {{"Judge", "Yes"}, {"Reason", "ok"}}},
              {id + "/image/extract", {{"tuple", tup}}},
              {id + "/image/questions", iqs},
              {id + "/image/vqa/*", {{"Judge", "Yes"}}},
              {id + "/image/vqa/3", {{"Judge", "No"}}},
              {id + "/holistic", {{"Coherence", 8}, {"Content Accuracy", 8}, {"Relevance", 8},
                                  {"Visual-Textual Alignment", 8}, {"Creativity", 8}, {"Overall", 8}}}};
    return f;
}

SampleReport report(const std::string& id, const std::string& subcategory, std::optional<bool> matched,
                    std::optional<double> image, int holistic = 5) {
    const Category* cat = Taxonomy::builtin().category_of(subcategory);
    SampleReport r;
    r.sample_id = id;
    r.category = cat->name;
    r.subcategory = subcategory;
    r.modality_class = cat->modality;
    if (matched) r.structural = SampleReport::Structural{*matched, "", ""};
    r.image_evaluated = image.has_value();
    r.image = image.value_or(0.0);
    HolisticJudgment h;
    h.overall = holistic;
    r.holistic = h;
    return r;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(ISG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Taxonomy, BuiltinMatchesPublishedCounts) {
    const Taxonomy& t = Taxonomy::builtin();
    EXPECT_EQ(t.categories().size(), 8u);
    EXPECT_EQ(t.subcategory_count(), 21u);
    int samples = 0;
    for (const auto& c : t.categories()) {
        for (const auto& s : c.subcategories) samples += s.reference_samples;
    }
    EXPECT_EQ(samples, 1150);
    EXPECT_EQ(t.category_of("HowTo")->name, "Image-Text Complementation");
    EXPECT_EQ(t.category("VQA with Image Generation")->requirement, ImageRequirement::Empty);
    EXPECT_EQ(t.category("Temporal Prediction")->modality, ModalityClass::Both);
    EXPECT_EQ(t.category_of("no such"), nullptr);
}

TEST(Taxonomy, RejectsBadJson) {
    EXPECT_THROW(Taxonomy::from_json(json::object()), SchemaViolation);
    EXPECT_THROW(Taxonomy::from_json({{"categories", {{{"name", "X"}, {"modality_class", "SMELL"},
                                                       {"image_requirement", "FULL"},
                                                       {"subcategories", json::array()}}}}}),
                 SchemaViolation);
}

TEST(LoadCorpus, FixtureCorpus) {
    auto samples = load_corpus(kFixtures / "corpus");
    ASSERT_EQ(samples.size(), 16u);
    EXPECT_TRUE(std::is_sorted(samples.begin(), samples.end(),
                               [](const Sample& a, const Sample& b) { return a.id < b.id; }));
    std::set<std::string> categories;
    for (const auto& s : samples) categories.insert(s.category);
    EXPECT_EQ(categories.size(), 8u);
    EXPECT_NO_THROW(samples[0].query.blocks.back().image().bytes());
}

TEST(LoadCorpus, SchemaErrors) {
    TempDir d;
    json bad = sample_json("a-1");
    bad.erase("golden");
    write_json(d.path / "samples/a-1.json", bad);
    try {
        load_corpus(d.path);
        FAIL();
    } catch (const SchemaViolation& e) {
        EXPECT_NE(std::string(e.what()).find("golden"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("a-1.json"), std::string::npos);
    }

    write_json(d.path / "samples/a-1.json", sample_json("a-1"));
    write_json(d.path / "samples/b-1.json", sample_json("a-1"));
    EXPECT_THROW(load_corpus(d.path), DuplicateSampleId);

    json wrong = sample_json("b-1");
    wrong["image_requirement"] = "EMPTY";  // Style Transfer is FULL
    write_json(d.path / "samples/b-1.json", wrong);
    EXPECT_THROW(load_corpus(d.path), SchemaViolation);

    json unknown = sample_json("b-1");
    unknown["subcategory"] = "Interpretive Dance";
    write_json(d.path / "samples/b-1.json", unknown);
    EXPECT_THROW(load_corpus(d.path), SchemaViolation);

    json bad_id = sample_json("../b");
    write_json(d.path / "samples/b-1.json", bad_id);
    EXPECT_THROW(load_corpus(d.path), SchemaViolation);

    EXPECT_THROW(load_corpus(d.path / "nowhere"), IoError);
}

TEST(Levels, Parse) {
    EXPECT_EQ(Levels::parse("holistic").str(), "holistic");
    EXPECT_EQ(Levels::parse("block").str(), "structural,block");
    EXPECT_EQ(Levels::parse(" image , holistic").str(), "structural,image,holistic");
    EXPECT_THROW(Levels::parse("vibes"), ConfigError);
    EXPECT_THROW(Levels::parse(""), ConfigError);
}

TEST(EvaluateSample, AllYesBlockAndThreeOfFourImage) {
    MockRig rig(four_of_each("s1"));
    Sample s = make_sample("s1", "Text-guided Animation", ImageRequirement::Full);
    EvalConfig cfg;
    cfg.mode = JudgeMode::YesNo;
    auto r = evaluate_sample(*rig.gateway, s, layout("ITIT", "a"), cfg);
    ASSERT_TRUE(r.structural);
    EXPECT_TRUE(r.structural->matched);
    EXPECT_DOUBLE_EQ(*r.block, 1.0);
    EXPECT_DOUBLE_EQ(*r.image_score(), 0.75);
    EXPECT_EQ(*r.holistic_score(), 8.0);
    EXPECT_EQ(r.block_calls, 6u);  // extract + questions + 4 judgments
    EXPECT_EQ(r.image_calls, 6u);
    EXPECT_TRUE(r.failures.empty());
}

TEST(EvaluateSample, MismatchGivesMinimaWithoutLevelCalls) {
    MockRig rig(four_of_each("s2"));
    Sample s = make_sample("s2", "Text-guided Animation", ImageRequirement::Full);
    for (auto mode : {JudgeMode::YesNo, JudgeMode::Score}) {
        EvalConfig cfg;
        cfg.mode = mode;
        auto r = evaluate_sample(*rig.gateway, s, layout("TITI", "a"), cfg);
        EXPECT_FALSE(r.structural->matched);
        EXPECT_EQ(*r.block, block_scale_minimum(mode));
        EXPECT_EQ(*r.image_score(), 0.0);
        EXPECT_EQ(r.block_calls + r.image_calls, 0u);
        EXPECT_EQ(r.holistic_calls, 1u);
    }
}

TEST(EvaluateSample, EmptyRequirementIsAbsent) {
    MockRig rig(four_of_each("s3"));
    Sample s = make_sample("s3", "HowTo", ImageRequirement::Empty);
    auto r = evaluate_sample(*rig.gateway, s, layout("ITIT", "a"), EvalConfig{});
    EXPECT_FALSE(r.image_score());
    EXPECT_EQ(r.to_json()["image"]["score"], "ABSENT");
    EXPECT_EQ(r.image_calls, 0u);
}

TEST(EvaluateSample, MissingAnswer) {
    MockRig rig;
    Sample s = make_sample("s4", "Text-guided Animation", ImageRequirement::Full);
    auto r = evaluate_sample(*rig.gateway, s, std::nullopt, EvalConfig{});
    EXPECT_TRUE(r.missing);
    EXPECT_EQ(r.flags, std::vector<std::string>{"MISSING"});
    EXPECT_EQ(*r.structural_score(), 0.0);
    EXPECT_EQ(*r.block, 1.0);
    EXPECT_EQ(*r.image_score(), 0.0);
    EXPECT_EQ(*r.holistic_score(), 1.0);
    EXPECT_EQ(rig.backend->requests(), 0u);
}

TEST(EvaluateSample, EmptyAnswerIsScoredNotRejected) {
    MockRig rig(four_of_each("s6"));
    Sample s = make_sample("s6", "Text-guided Animation", ImageRequirement::Full);
    auto r = evaluate_sample(*rig.gateway, s, InterleavedSequence{}, EvalConfig{});
    EXPECT_FALSE(r.missing);
    EXPECT_FALSE(r.structural->matched);
    EXPECT_EQ(r.structural->actual, "");
    EXPECT_EQ(*r.block, 1.0);
    EXPECT_EQ(*r.image_score(), 0.0);
    EXPECT_EQ(r.holistic_calls, 1u);
}

TEST(EvaluateSample, BackendErrorPropagates) {
    MockRig rig;  // every call misses
    Sample s = make_sample("s5", "Text-guided Animation", ImageRequirement::Full);
    EXPECT_THROW(evaluate_sample(*rig.gateway, s, layout("IT"), EvalConfig{}), FixtureMiss);
}

TEST(Aggregate, CategoryAndImageMeans) {
    std::vector<SampleReport> rs = {report("a", "Art Style Transfer", true, 0.5),
                                    report("b", "Semantic Decomposition", true, std::nullopt),
                                    report("c", "Semantic Decomposition", false, 1.0)};
    auto run = aggregate(rs, Taxonomy::builtin());
    ASSERT_EQ(run.by_category.size(), 2u);
    EXPECT_DOUBLE_EQ(*run.by_category[0].means.structural, 1.0);
    EXPECT_DOUBLE_EQ(*run.by_category[1].means.structural, 0.5);
    EXPECT_DOUBLE_EQ(*run.avg_by_category.structural, 0.75);
    EXPECT_NEAR(*run.avg_by_sample.structural, 2.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(*run.avg_by_sample.image, 0.75);
    EXPECT_FALSE(run.avg_by_sample.block);
    EXPECT_THROW(aggregate({}, Taxonomy::builtin()), EmptyInput);
}

TEST(AggregateProperty, MeansMatchRecomputation) {
    std::mt19937 rng(3);
    const Taxonomy& tax = Taxonomy::builtin();
    std::vector<std::string> subs;
    for (const auto& c : tax.categories()) {
        for (const auto& s : c.subcategories) subs.push_back(s.name);
    }
    std::uniform_int_distribution<std::size_t> pick(0, subs.size() - 1);
    std::uniform_int_distribution<int> n(1, 40), hol(1, 10), coin(0, 1), absent(0, 3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<SampleReport> rs;
        for (int i = n(rng); i > 0; --i) {
            std::optional<double> img;
            if (absent(rng) != 0) img = u(rng);
            rs.push_back(report("s" + std::to_string(rs.size()), subs[pick(rng)], coin(rng) == 1, img, hol(rng)));
        }
        auto run = aggregate(rs, tax);
        // Oracle: plain per-category averages.
        std::map<std::string, std::vector<double>> hol_by_cat;
        std::vector<double> all_img;
        for (const auto& r : rs) {
            hol_by_cat[r.category].push_back(r.holistic->overall);
            if (r.image_evaluated) all_img.push_back(r.image);
        }
        ASSERT_EQ(run.by_category.size(), hol_by_cat.size());
        double cat_sum = 0;
        for (const auto& g : run.by_category) {
            const auto& v = hol_by_cat.at(g.name);
            double m = 0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            EXPECT_NEAR(*g.means.holistic, m, 1e-9);
            EXPECT_EQ(g.samples, v.size());
            cat_sum += m;
        }
        EXPECT_NEAR(*run.avg_by_category.holistic, cat_sum / static_cast<double>(hol_by_cat.size()), 1e-9);
        if (all_img.empty()) {
            EXPECT_FALSE(run.avg_by_sample.image);
        } else {
            double m = 0;
            for (double x : all_img) m += x;
            EXPECT_NEAR(*run.avg_by_sample.image, m / static_cast<double>(all_img.size()), 1e-9);
        }
    }
}

TEST(EmitReport, MarkdownAgreesWithJson) {
    TempDir d;
    std::vector<SampleReport> rs = {report("a", "Art Style Transfer", true, 0.5, 7),
                                    report("b", "HowTo", false, std::nullopt, 4)};
    rs[1].flags.push_back("MISSING");
    auto run = aggregate(rs, Taxonomy::builtin(), {{"vqa_mode", "score"}});
    emit_report(run, d.path, {"json", "md", "ledger"});
    json j = json::parse(util::read_file((d.path / "report.json").string()));
    std::string md = util::read_file((d.path / "report.md").string());
    EXPECT_TRUE(fs::exists(d.path / "ledger.json"));
    std::smatch m;
    ASSERT_TRUE(std::regex_search(md, m, std::regex(R"(\| Avg\. \(by sample\) \| 2 \| ([0-9.]+) \| - \| ([0-9.]+) \| ([0-9.]+) \|)")));
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    EXPECT_EQ(m[1].str(), fmt(j["avg_by_sample"]["structural"].get<double>()));
    EXPECT_EQ(m[2].str(), fmt(j["avg_by_sample"]["image"].get<double>()));
    EXPECT_EQ(m[3].str(), fmt(j["avg_by_sample"]["holistic"].get<double>()));
    EXPECT_NE(md.find("MISSING"), std::string::npos);
}

TEST(EmitReport, FormatsAndErrors) {
    TempDir d;
    auto run = aggregate({report("a", "HowTo", true, std::nullopt)}, Taxonomy::builtin());
    emit_report(run, d.path / "only", {});
    EXPECT_TRUE(fs::exists(d.path / "only/report.json"));
    EXPECT_FALSE(fs::exists(d.path / "only/report.md"));
    EXPECT_FALSE(fs::exists(d.path / "only/ledger.json"));
    EXPECT_THROW(emit_report(run, d.path / "x", {"pdf"}), ConfigError);
    std::ofstream(d.path / "plainfile") << "x";
    EXPECT_THROW(emit_report(run, d.path / "plainfile" / "out", {}), IoError);
}

TEST(EvaluateCorpus, ParallelMatchesSerial) {
    auto samples = load_corpus(kFixtures / "corpus");
    auto cfg = BackendConfig::from_json(json::parse(util::read_file((kFixtures / "backend.json").string())), kFixtures);
    auto g1 = Gateway::create(cfg);
    auto g4 = Gateway::create(cfg);
    EvalConfig ec;
    auto serial = evaluate_corpus(*g1, samples, kFixtures / "answers", ec, 1);
    auto parallel = evaluate_corpus(*g4, samples, kFixtures / "answers", ec, 4);
    ASSERT_EQ(serial.size(), 16u);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].to_json(), parallel[i].to_json()) << serial[i].sample_id;
    }
    auto missing = std::find_if(serial.begin(), serial.end(), [](const SampleReport& r) { return r.missing; });
    ASSERT_NE(missing, serial.end());
    EXPECT_EQ(missing->sample_id, "itc-sci-002");
}

TEST(Cli, ExitCodes) {
    TempDir d;
    std::string fx = kFixtures.string();
    std::string ok = "eval --corpus " + fx + "/corpus --answers " + fx + "/answers --config " + fx +
                     "/backend.json --out " + (d.path / "ok").string();
    EXPECT_EQ(run_cli(ok), 0);
    EXPECT_TRUE(fs::exists(d.path / "ok/report.md"));
    EXPECT_EQ(run_cli("eval --corpus " + fx + "/corpus"), 1);
    EXPECT_EQ(run_cli(ok + " --levels nonsense"), 1);

    json bad = sample_json("x-1");
    bad.erase("query");
    write_json(d.path / "bad/samples/x-1.json", bad);
    EXPECT_EQ(run_cli("eval --corpus " + (d.path / "bad").string() + " --answers " + fx +
                      "/answers --config " + fx + "/backend.json --out " + (d.path / "o2").string()),
              2);

    write_json(d.path / "http.json", {{"kind", "http"}, {"endpoint", "http://127.0.0.1:1/v1/chat/completions"},
                                      {"retries", 0}, {"timeout_ms", 500}, {"cache", false}});
    EXPECT_EQ(run_cli("eval --corpus " + fx + "/corpus --answers " + fx + "/answers --config " +
                      (d.path / "http.json").string() + " --out " + (d.path / "o3").string()),
              3);
}
