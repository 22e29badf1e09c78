#include "isg/image_eval.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "isg/errors.hpp"
#include "isg/prompts.hpp"
#include "isg/util.hpp"

namespace isg {

using nlohmann::json;

std::string_view image_requirement_name(ImageRequirement r) {
    switch (r) {
        case ImageRequirement::Full: return "FULL";
        case ImageRequirement::Half: return "HALF";
        case ImageRequirement::Empty: return "EMPTY";
    }
    return "FULL";
}

std::optional<ImageRequirement> parse_image_requirement(std::string_view s) {
    std::string v = util::to_lower(s);
    if (v == "full") return ImageRequirement::Full;
    if (v == "half") return ImageRequirement::Half;
    if (v == "empty") return ImageRequirement::Empty;
    return std::nullopt;
}

std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Yes: return "YES";
        case Outcome::No: return "NO";
        case Outcome::GatedNo: return "GATED_NO";
    }
    return "NO";
}

ImageTuple ImageTuple::make_entity(std::string name, ContentToken image) {
    ImageTuple t;
    t.kind = ImageTupleKind::Entity;
    t.name = std::move(name);
    t.image = image;
    return t;
}

ImageTuple ImageTuple::make_attribute(std::string name, std::string entity, ContentToken image) {
    ImageTuple t;
    t.kind = ImageTupleKind::Attribute;
    t.name = std::move(name);
    t.entity = std::move(entity);
    t.image = image;
    return t;
}

ImageTuple ImageTuple::make_relation(std::string name, std::string e1, std::string e2,
                                     ContentToken image) {
    ImageTuple t;
    t.kind = ImageTupleKind::Relation;
    t.name = std::move(name);
    t.entity1 = std::move(e1);
    t.entity2 = std::move(e2);
    t.image = image;
    return t;
}

json ImageTuple::to_json() const {
    switch (kind) {
        case ImageTupleKind::Entity: return {"entity", name, image.str()};
        case ImageTupleKind::Attribute: return {"attribute", name, entity, image.str()};
        case ImageTupleKind::Relation: return {"relation", name, entity1, entity2, image.str()};
    }
    return json::array();
}

std::optional<ImageTuple> ImageTuple::from_json(const json& j) {
    if (!j.is_array() || j.empty()) return std::nullopt;
    for (const auto& v : j) {
        if (!v.is_string()) return std::nullopt;
    }
    auto str = [&](std::size_t i) { return util::collapse_whitespace(j[i].get<std::string>()); };
    const std::string kind = util::to_lower(str(0));
    std::size_t arity = kind == "entity" ? 3 : kind == "attribute" ? 4 : kind == "relation" ? 5 : 0;
    if (arity == 0 || j.size() != arity) return std::nullopt;
    auto image = ContentToken::try_parse(str(arity - 1));
    if (!image || image->scope != TokenScope::Gen || image->kind != Modality::Image) {
        return std::nullopt;
    }
    for (std::size_t i = 1; i + 1 < arity; ++i) {
        if (str(i).empty()) return std::nullopt;
    }
    if (kind == "entity") return make_entity(str(1), *image);
    if (kind == "attribute") return make_attribute(str(1), str(2), *image);
    return make_relation(str(1), str(2), str(3), *image);
}

json ImageQuestion::to_json() const {
    return {{"id", id}, {"image", image.str()}, {"question", question}, {"preliminary", preliminaries}};
}

namespace {

const json* first_list(const json& j) {
    if (j.is_array()) return &j;
    if (!j.is_object()) return nullptr;
    for (const char* k : {"tuple", "tuples", "questions", "Questions"}) {
        if (j.contains(k) && j[k].is_array()) return &j[k];
    }
    for (const auto& [_, v] : j.items()) {
        if (v.is_array()) return &v;
    }
    return nullptr;
}

std::string requirement_phrase(ImageRequirement r) {
    return r == ImageRequirement::Half ? "main objects" : "all objects";
}

}  // namespace

ImageTupleExtraction extract_image_tuples(CallSession& session, const InterleavedSequence& query,
                                          const StructurePrediction& pred,
                                          ImageRequirement requirement) {
    std::vector<UserPart> parts{std::string("Here is the prompt:")};
    for (auto& p : render_labelled(query, TokenScope::Query)) parts.push_back(std::move(p));
    parts.emplace_back("Here is the element sequence: " + render_element_sequence(pred));

    ModelResponse resp = session.complete(
        "image_extract", "image/extract",
        prompts::image_requirements_extraction(requirement_phrase(requirement)), std::move(parts));
    json j;
    try {
        j = extract_json(resp.text);
    } catch (const NoJsonFound&) {
        throw ExtractionFailed("image requirement reply contains no JSON");
    }
    const json* list = nullptr;
    if (j.is_object()) {
        for (const char* k : {"tuple", "tuples"}) {
            if (j.contains(k) && j[k].is_array()) {
                list = &j[k];
                break;
            }
        }
    }
    if (list == nullptr) throw ExtractionFailed("image requirement reply lacks a \"tuple\" list");

    ImageTupleExtraction out;
    for (const json& item : *list) {
        auto t = ImageTuple::from_json(item);
        if (!t) {
            out.dropped.push_back({item, "malformed tuple (kind or arity)"});
        } else if (!pred.mentions(t->image)) {
            out.dropped.push_back({item, "image token outside the predicted structure"});
        } else if (std::find(out.tuples.begin(), out.tuples.end(), *t) != out.tuples.end()) {
            out.dropped.push_back({item, "duplicate tuple"});
        } else {
            out.tuples.push_back(std::move(*t));
        }
    }
    return out;
}

ImageQuestionSet repair_question_dag(const json& reply, std::span<const ImageTuple> tuples) {
    const json* list = first_list(reply);
    if (list == nullptr) throw GenerationFailed("image question reply is not a list");

    struct Entry {
        std::size_t position;
        int id;
        ContentToken image;
        std::string question;
        std::set<int> prelims;
        json raw;
    };
    ImageQuestionSet out;
    std::vector<std::optional<Entry>> by_position(list->size());

    for (std::size_t pos = 0; pos < list->size(); ++pos) {
        const json& item = (*list)[pos];
        if (!item.is_object()) {
            out.dropped.push_back({item, "not an object"});
            continue;
        }
        std::string q;
        for (const char* k : {"Question", "question"}) {
            if (item.contains(k) && item[k].is_string()) q = util::trim(item[k].get<std::string>());
        }
        std::optional<ContentToken> image;
        if (item.contains("image") && item["image"].is_string()) {
            image = ContentToken::try_parse(item["image"].get<std::string>());
        }
        if (q.empty() || !image || image->scope != TokenScope::Gen ||
            image->kind != Modality::Image || !item.contains("id") ||
            !item["id"].is_number_integer() || item["id"].get<int>() < 0) {
            out.dropped.push_back({item, "missing question, image token or id"});
            continue;
        }
        Entry e{pos, item["id"].get<int>(), *image, q, {}, item};
        bool prelims_ok = true;
        const json prelim = item.contains("Preliminary") ? item["Preliminary"]
                                                         : item.value("preliminary", json::array());
        if (!prelim.is_array()) prelims_ok = false;
        for (const auto& p : prelim.is_array() ? prelim : json::array()) {
            if (!p.is_number_integer()) {
                prelims_ok = false;
                break;
            }
            e.prelims.insert(p.get<int>());
        }
        if (!prelims_ok) {
            out.dropped.push_back({item, "malformed Preliminary list"});
            continue;
        }
        by_position[pos] = std::move(e);
    }

    // Entity prerequisites, when entries align one-to-one with tuples.
    if (list->size() == tuples.size()) {
        auto entity_position = [&](const std::string& name, const ContentToken& image)
            -> std::optional<std::size_t> {
            for (std::size_t k = 0; k < tuples.size(); ++k) {
                if (tuples[k].kind == ImageTupleKind::Entity && tuples[k].image == image &&
                    util::to_lower(tuples[k].name) == util::to_lower(name)) {
                    return k;
                }
            }
            return std::nullopt;
        };
        for (std::size_t i = 0; i < tuples.size(); ++i) {
            if (!by_position[i]) continue;
            std::vector<std::string> needed;
            if (tuples[i].kind == ImageTupleKind::Attribute) needed = {tuples[i].entity};
            if (tuples[i].kind == ImageTupleKind::Relation) {
                needed = {tuples[i].entity1, tuples[i].entity2};
            }
            for (const auto& name : needed) {
                auto k = entity_position(name, tuples[i].image);
                if (k && *k != i && by_position[*k]) by_position[i]->prelims.insert(by_position[*k]->id);
            }
        }
    }

    std::vector<Entry> entries;
    std::set<int> ids;
    for (auto& e : by_position) {
        if (!e) continue;
        if (!ids.insert(e->id).second) {
            out.dropped.push_back({e->raw, "duplicate id"});
            continue;
        }
        entries.push_back(std::move(*e));
    }

    // Unknown or self prerequisites drop the entry, transitively.
    for (bool changed = true; changed;) {
        changed = false;
        for (auto it = entries.begin(); it != entries.end();) {
            bool bad = std::any_of(it->prelims.begin(), it->prelims.end(),
                                   [&](int p) { return p == it->id || !ids.contains(p); });
            if (bad) {
                out.dropped.push_back({it->raw, "prerequisite id does not exist"});
                ids.erase(it->id);
                it = entries.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }

    // Stable Kahn ordering by original id.
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.id < b.id; });
    std::vector<Entry> ordered;
    std::set<int> placed;
    std::vector<bool> used(entries.size(), false);
    for (bool progress = true; progress;) {
        progress = false;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (used[i]) continue;
            bool ready = std::all_of(entries[i].prelims.begin(), entries[i].prelims.end(),
                                     [&](int p) { return placed.contains(p); });
            if (!ready) continue;
            if (i != ordered.size()) out.reordered = true;
            used[i] = true;
            placed.insert(entries[i].id);
            ordered.push_back(entries[i]);
            progress = true;
            break;
        }
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!used[i]) out.dropped.push_back({entries[i].raw, "cyclic prerequisites"});
    }

    std::map<int, int> renumber;
    for (std::size_t i = 0; i < ordered.size(); ++i) renumber[ordered[i].id] = static_cast<int>(i);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        ImageQuestion q;
        q.id = static_cast<int>(i);
        q.image = ordered[i].image;
        q.question = ordered[i].question;
        for (int p : ordered[i].prelims) q.preliminaries.push_back(renumber.at(p));
        std::sort(q.preliminaries.begin(), q.preliminaries.end());
        out.questions.push_back(std::move(q));
    }
    return out;
}

ImageQuestionSet generate_image_questions(CallSession& session,
                                          std::span<const ImageTuple> tuples) {
    if (tuples.empty()) throw EmptyInput("image question generation needs at least one tuple");
    json input = json::array();
    for (const auto& t : tuples) input.push_back(t.to_json());
    ModelResponse resp =
        session.complete("image_questions", "image/questions", prompts::image_question_generation(),
                         {std::string("Here is the input:\n") + input.dump()});
    json j;
    try {
        j = extract_json(resp.text);
    } catch (const NoJsonFound&) {
        throw GenerationFailed("image question reply contains no JSON");
    }
    return repair_question_dag(j, tuples);
}

std::vector<ImageVerdict> evaluate_question_dag(CallSession& session,
                                                std::span<const ImageQuestion> questions,
                                                const InterleavedSequence& query,
                                                const InterleavedSequence& answer) {
    std::vector<ImageQuestion> sorted(questions.begin(), questions.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ImageQuestion& a, const ImageQuestion& b) { return a.id < b.id; });
    std::map<int, Outcome> outcome;
    std::vector<ImageVerdict> verdicts;
    for (const ImageQuestion& q : sorted) {
        ImageVerdict v;
        v.id = q.id;
        auto failed = std::find_if(q.preliminaries.begin(), q.preliminaries.end(), [&](int p) {
            auto it = outcome.find(p);
            return it == outcome.end() || it->second != Outcome::Yes;
        });
        if (failed != q.preliminaries.end()) {
            v.outcome = Outcome::GatedNo;
            v.reason = "prerequisite question " + std::to_string(*failed) + " was not answered Yes";
        } else {
            const Block* block = nullptr;
            try {
                block = &resolve_token(q.image, query, answer);
            } catch (const TokenOutOfRange&) {
            }
            if (block == nullptr) {
                v.outcome = Outcome::No;
                v.reason = "missing image";
            } else {
                std::vector<UserPart> parts{"Here is the question: " + q.question, block->image(),
                                            std::string("Now please judge the question. Remember to "
                                                        "output in JSON format with \"Judge\" and "
                                                        "\"Reason\".")};
                ModelResponse resp =
                    session.complete("image_vqa", "image/vqa/" + std::to_string(q.id),
                                     prompts::image_vqa(), std::move(parts));
                v.outcome = Outcome::No;
                try {
                    json j = extract_json(resp.text);
                    if (!j.is_object() || !j.contains("Judge") || !j["Judge"].is_string()) {
                        throw UnparseableJudgment("reply lacks a string \"Judge\"");
                    }
                    std::string judge = util::to_lower(util::trim(j["Judge"].get<std::string>()));
                    while (!judge.empty() && judge.back() == '.') judge.pop_back();
                    if (judge == "yes") {
                        v.outcome = Outcome::Yes;
                    } else if (judge != "no") {
                        throw UnparseableJudgment("judge value '" + judge + "'");
                    }
                    if (j.contains("Reason") && j["Reason"].is_string()) v.reason = j["Reason"];
                } catch (const Error& e) {
                    v.outcome = Outcome::No;
                    v.reason = std::string("unparseable judgment: ") + e.what();
                }
            }
        }
        outcome[q.id] = v.outcome;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

double score_image_level(std::span<const ImageVerdict> verdicts) {
    if (verdicts.empty()) return 0.0;
    auto yes = std::count_if(verdicts.begin(), verdicts.end(),
                             [](const ImageVerdict& v) { return v.outcome == Outcome::Yes; });
    return static_cast<double>(yes) / static_cast<double>(verdicts.size());
}

json ImageLevelResult::artifact() const {
    json tuples = json::array();
    for (const auto& t : extraction.tuples) tuples.push_back(t.to_json());
    json qs = json::array();
    for (const auto& q : questions.questions) qs.push_back(q.to_json());
    json vs = json::array();
    for (const auto& v : verdicts) {
        vs.push_back({{"id", v.id}, {"outcome", outcome_name(v.outcome)}, {"reason", v.reason}});
    }
    return {{"tuples", tuples},
            {"dropped_tuples", dropped_to_json(extraction.dropped)},
            {"questions", qs},
            {"dropped_questions", dropped_to_json(questions.dropped)},
            {"reordered", questions.reordered},
            {"verdicts", vs},
            {"score", score},
            {"failures", failures_to_json(failures)}};
}

ImageLevelResult evaluate_image_level(CallSession& session, const InterleavedSequence& query,
                                      const InterleavedSequence& answer,
                                      const StructurePrediction& pred,
                                      ImageRequirement requirement) {
    ImageLevelResult r;
    try {
        r.extraction = extract_image_tuples(session, query, pred, requirement);
    } catch (const ExtractionFailed& e) {
        r.failures.push_back(Failure::from("image", e));
        return r;
    }
    if (!r.extraction.tuples.empty()) {
        try {
            r.questions = generate_image_questions(session, r.extraction.tuples);
        } catch (const GenerationFailed& e) {
            r.failures.push_back(Failure::from("image", e));
        }
    }
    r.verdicts = evaluate_question_dag(session, r.questions.questions, query, answer);
    r.score = score_image_level(r.verdicts);
    return r;
}

}  // namespace isg
