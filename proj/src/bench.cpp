#include "isg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "isg/errors.hpp"
#include "isg/structure_eval.hpp"
#include "isg/util.hpp"

namespace isg {

namespace fs = std::filesystem;
using nlohmann::json;

Taxonomy corpus_taxonomy(const fs::path& dir) {
    fs::path own = dir / "taxonomy.json";
    if (fs::exists(own)) return Taxonomy::from_file(own);
    return Taxonomy::builtin();
}

Sample parse_sample(const json& j, const fs::path& file, const Taxonomy& tax) {
    auto fail = [&](const std::string& field, const std::string& what) {
        throw SchemaViolation(file.string() + ": field '" + field + "': " + what);
    };
    if (!j.is_object()) fail("<root>", "sample must be a JSON object");
    auto str = [&](const char* key) {
        if (!j.contains(key)) fail(key, "missing");
        if (!j[key].is_string()) fail(key, "must be a string");
        return j[key].get<std::string>();
    };
    Sample s;
    s.source = file;
    s.id = str("id");
    static const std::regex id_re("^[A-Za-z0-9][A-Za-z0-9._-]*$");
    if (!std::regex_match(s.id, id_re)) fail("id", "'" + s.id + "' is not a safe identifier");
    s.category = str("category");
    s.subcategory = str("subcategory");
    const Category* cat = tax.category(s.category);
    if (cat == nullptr) fail("category", "unknown category '" + s.category + "'");
    if (tax.category_of(s.subcategory) != cat) {
        fail("subcategory", "'" + s.subcategory + "' is not a subtask of '" + s.category + "'");
    }
    s.modality_class = cat->modality;
    s.image_requirement = cat->requirement;
    if (j.contains("modality_class")) {
        auto m = j["modality_class"].is_string()
                     ? parse_modality_class(j["modality_class"].get<std::string>())
                     : std::nullopt;
        if (!m) fail("modality_class", "expected VISION, BOTH or LANGUAGE");
        if (*m != cat->modality) fail("modality_class", "disagrees with the taxonomy");
    }
    if (j.contains("image_requirement")) {
        auto r = j["image_requirement"].is_string()
                     ? parse_image_requirement(j["image_requirement"].get<std::string>())
                     : std::nullopt;
        if (!r) fail("image_requirement", "expected FULL, HALF or EMPTY");
        if (*r != cat->requirement) fail("image_requirement", "disagrees with the taxonomy");
    }
    for (const char* key : {"query", "golden"}) {
        if (!j.contains(key)) fail(key, "missing");
        InterleavedSequence seq;
        try {
            seq = sequence_from_json(j[key], file.parent_path());
        } catch (const DocumentError& e) {
            fail(key, e.what());
        }
        if (seq.blocks.empty()) fail(key, "no blocks");
        (std::string_view(key) == "query" ? s.query : s.golden) = std::move(seq);
    }
    bool has_text = std::any_of(s.query.blocks.begin(), s.query.blocks.end(),
                                [](const Block& b) { return b.is_text(); });
    if (!has_text) fail("query", "needs at least one text block");
    return s;
}

std::vector<Sample> load_corpus(const fs::path& dir, const Taxonomy& tax) {
    fs::path sdir = dir / "samples";
    if (!fs::is_directory(sdir)) throw IoError("no samples directory under " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(sdir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Sample> out;
    std::map<std::string, fs::path> seen;
    for (const auto& f : files) {
        json j;
        try {
            j = json::parse(util::read_file(f.string()));
        } catch (const json::exception& e) {
            throw SchemaViolation(f.string() + ": invalid JSON: " + e.what());
        }
        Sample s = parse_sample(j, f, tax);
        auto [it, fresh] = seen.emplace(s.id, f);
        if (!fresh) {
            throw DuplicateSampleId("sample id '" + s.id + "' in both " + it->second.string() +
                                    " and " + f.string());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> load_corpus(const fs::path& dir) { return load_corpus(dir, corpus_taxonomy(dir)); }

Levels Levels::parse(const std::string& list) {
    Levels l{false, false, false, false};
    std::stringstream in(list);
    std::string item;
    bool any = false;
    while (std::getline(in, item, ',')) {
        item = util::to_lower(util::trim(item));
        if (item.empty()) continue;
        any = true;
        if (item == "structural") l.structural = true;
        else if (item == "block") l.block = true;
        else if (item == "image") l.image = true;
        else if (item == "holistic") l.holistic = true;
        else throw ConfigError("unknown level '" + item + "'");
    }
    if (!any) throw ConfigError("no evaluation levels selected");
    if (l.block || l.image) l.structural = true;
    return l;
}

std::string Levels::str() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += ",";
        out += name;
    };
    add(structural, "structural");
    add(block, "block");
    add(image, "image");
    add(holistic, "holistic");
    return out;
}

std::optional<double> SampleReport::structural_score() const {
    if (!structural) return std::nullopt;
    return structural->matched ? 1.0 : 0.0;
}

std::optional<double> SampleReport::image_score() const {
    if (!image_evaluated) return std::nullopt;
    return image;
}

std::optional<double> SampleReport::holistic_score() const {
    if (!holistic) return std::nullopt;
    return static_cast<double>(holistic->overall);
}

json SampleReport::to_json() const {
    const std::string art = "samples/" + sample_id + "/";
    json j = {{"id", sample_id},
              {"category", category},
              {"subcategory", subcategory},
              {"modality_class", modality_class_name(modality_class)},
              {"image_requirement", image_requirement_name(image_requirement)},
              {"missing", missing}};
    j["structural"] = structural ? json{{"matched", structural->matched},
                                        {"predicted", structural->predicted},
                                        {"actual", structural->actual},
                                        {"score", *structural_score()},
                                        {"artifact", art + "structure.json"}}
                                 : json(nullptr);
    j["block"] = block ? json{{"score", *block},
                              {"mode", judge_mode_name(mode)},
                              {"artifact", art + "block.json"}}
                       : json(nullptr);
    j["image"] = image_evaluated ? json{{"score", image}, {"artifact", art + "image.json"}}
                                 : json{{"score", "ABSENT"}};
    j["holistic"] = holistic ? json{{"overall", holistic->overall},
                                    {"dimensions", holistic->dimensions_json()},
                                    {"artifact", art + "holistic.json"}}
                             : json(nullptr);
    j["failures"] = failures_to_json(failures);
    j["flags"] = flags;
    j["usage"] = usage_to_json(usage);
    j["calls"] = {{"structure", structure_calls},
                  {"block", block_calls},
                  {"image", image_calls},
                  {"holistic", holistic_calls}};
    return j;
}

namespace {

void write_artifact(const EvalConfig& cfg, const std::string& id, const std::string& name,
                    const json& j) {
    if (cfg.artifact_dir.empty()) return;
    fs::path dir = cfg.artifact_dir / "samples" / id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << j.dump(2) << "\n";
}

}  // namespace

SampleReport evaluate_sample(Gateway& gateway, const Sample& sample,
                             const std::optional<InterleavedSequence>& answer_in,
                             const EvalConfig& cfg) {
    SampleReport r;
    r.sample_id = sample.id;
    r.category = sample.category;
    r.subcategory = sample.subcategory;
    r.modality_class = sample.modality_class;
    r.image_requirement = sample.image_requirement;
    r.mode = cfg.mode;
    const double block_min = block_scale_minimum(cfg.mode);
    const bool image_on = cfg.levels.image && sample.image_requirement != ImageRequirement::Empty;

    if (!answer_in) {
        r.missing = true;
        r.flags.push_back("MISSING");
        r.failures.push_back({"answer", "MissingAnswer", "no answer for sample '" + sample.id + "'"});
        if (cfg.levels.structural) r.structural = SampleReport::Structural{};
        if (cfg.levels.block) r.block = block_min;
        r.image_evaluated = image_on;
        if (cfg.levels.holistic) r.holistic = HolisticJudgment{};
        return r;
    }
    const InterleavedSequence answer = normalize_sequence(*answer_in);
    CallSession session(gateway, sample.id);

    bool matched = false;
    StructurePrediction pred;
    if (cfg.levels.structural) {
        SampleReport::Structural s;
        s.actual = structure_signature(answer).str();
        json art;
        try {
            pred = predict_structure(session, sample.query);
            StructuralVerdict v = match_structures(pred, answer);
            matched = v.matched;
            s.predicted = v.predicted.str();
            art = pred.to_json();
        } catch (const Error& e) {
            if (dynamic_cast<const BackendError*>(&e) != nullptr) throw;
            r.failures.push_back(Failure::from("structure", e));
            art = {{"error", e.what()}};
        }
        s.matched = matched;
        r.structural = s;
        art["predicted_signature"] = s.predicted;
        art["actual_signature"] = s.actual;
        art["matched"] = matched;
        write_artifact(cfg, sample.id, "structure.json", art);
    }

    if (cfg.levels.block) {
        if (matched) {
            BlockLevelResult b = evaluate_block_level(session, sample.query, answer, pred, cfg.mode);
            r.block = b.score;
            r.failures.insert(r.failures.end(), b.failures.begin(), b.failures.end());
            write_artifact(cfg, sample.id, "block.json", b.artifact());
        } else {
            r.block = block_min;
            write_artifact(cfg, sample.id, "block.json",
                           {{"skipped", "structure mismatch"}, {"mode", judge_mode_name(cfg.mode)},
                            {"score", block_min}});
        }
    }

    if (image_on) {
        r.image_evaluated = true;
        if (matched) {
            ImageLevelResult im =
                evaluate_image_level(session, sample.query, answer, pred, sample.image_requirement);
            r.image = im.score;
            r.failures.insert(r.failures.end(), im.failures.begin(), im.failures.end());
            write_artifact(cfg, sample.id, "image.json", im.artifact());
        } else {
            r.image = 0.0;
            write_artifact(cfg, sample.id, "image.json",
                           {{"skipped", "structure mismatch"}, {"score", 0.0}});
        }
    }

    if (cfg.levels.holistic) {
        HolisticResult h = judge_holistic(session, sample.query, answer, sample.golden, cfg.use_golden);
        r.holistic = h.judgment;
        if (!h.failures.empty()) r.flags.push_back("HOLISTIC_UNPARSEABLE");
        r.failures.insert(r.failures.end(), h.failures.begin(), h.failures.end());
        write_artifact(cfg, sample.id, "holistic.json", h.artifact());
    }

    r.usage = session.usage();
    r.structure_calls = session.calls_with_prefix("structure");
    r.block_calls = session.calls_with_prefix("block");
    r.image_calls = session.calls_with_prefix("image");
    r.holistic_calls = session.calls_with_prefix("holistic");
    return r;
}

std::vector<SampleReport> evaluate_corpus(Gateway& gateway, const std::vector<Sample>& samples,
                                          const fs::path& answers_dir, const EvalConfig& cfg,
                                          unsigned workers) {
    std::vector<std::optional<InterleavedSequence>> answers(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fs::path f = answers_dir / (samples[i].id + ".json");
        if (fs::exists(f)) answers[i] = read_document(f);
    }

    std::vector<std::optional<SampleReport>> out(samples.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto work = [&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) {
            try {
                out[i] = evaluate_sample(gateway, samples[i], answers[i], cfg);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                next = samples.size();
            }
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(samples.size())));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<SampleReport> reports;
    for (auto& r : out) reports.push_back(std::move(*r));
    std::sort(reports.begin(), reports.end(),
              [](const SampleReport& a, const SampleReport& b) { return a.sample_id < b.sample_id; });
    return reports;
}

}  // namespace isg
