#pragma once

// Image level: entity / attribute / relation tuples per generated image,
// a prerequisite-gated question DAG, and the fraction answered Yes.

#include <optional>
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

// How much of a task's imagery must be generated accurately.
enum class ImageRequirement { Full, Half, Empty };

std::string_view image_requirement_name(ImageRequirement r);  // "FULL"/"HALF"/"EMPTY"
std::optional<ImageRequirement> parse_image_requirement(std::string_view s);

enum class ImageTupleKind { Entity, Attribute, Relation };

struct ImageTuple {
    ImageTupleKind kind = ImageTupleKind::Entity;
    std::string name;
    std::string entity;   // ATTRIBUTE
    std::string entity1;  // RELATION
    std::string entity2;  // RELATION
    ContentToken image{TokenScope::Gen, Modality::Image, 1};

    static ImageTuple make_entity(std::string name, ContentToken image);
    static ImageTuple make_attribute(std::string name, std::string entity, ContentToken image);
    static ImageTuple make_relation(std::string name, std::string e1, std::string e2,
                                    ContentToken image);

    bool operator==(const ImageTuple&) const = default;
    // Array form, e.g. ["attribute", "yellow", "fish", "<gen_img1>"].
    nlohmann::json to_json() const;
    static std::optional<ImageTuple> from_json(const nlohmann::json& j);
};

struct ImageTupleExtraction {
    std::vector<ImageTuple> tuples;
    std::vector<Dropped> dropped;
};

// One gateway call. Entries with the wrong arity, an unknown kind, or an
// image token the predicted structure does not generate are dropped.
// Throws ExtractionFailed.
ImageTupleExtraction extract_image_tuples(CallSession& session, const InterleavedSequence& query,
                                          const StructurePrediction& pred,
                                          ImageRequirement requirement = ImageRequirement::Full);

struct ImageQuestion {
    int id = 0;
    ContentToken image{TokenScope::Gen, Modality::Image, 1};
    std::string question;
    std::vector<int> preliminaries;  // all smaller than id

    bool operator==(const ImageQuestion&) const = default;
    nlohmann::json to_json() const;
};

struct ImageQuestionSet {
    std::vector<ImageQuestion> questions;  // ids 0..n-1, topologically ordered
    std::vector<Dropped> dropped;
    bool reordered = false;
};

// Validates and repairs a question-generation reply. When the reply lists
// one entry per tuple, attribute and relation entries get the ids of their
// entity questions added. Unknown prerequisite ids drop the entry (and,
// transitively, its dependants); forward references are fixed by a stable
// topological reorder; cycles are dropped. Ids are renumbered from 0.
ImageQuestionSet repair_question_dag(const nlohmann::json& reply,
                                     std::span<const ImageTuple> tuples);

// One gateway call, then repair_question_dag. Throws EmptyInput for no
// tuples, GenerationFailed for an unusable reply.
ImageQuestionSet generate_image_questions(CallSession& session,
                                          std::span<const ImageTuple> tuples);

enum class Outcome { Yes, No, GatedNo };
std::string_view outcome_name(Outcome o);  // "YES"/"NO"/"GATED_NO"

struct ImageVerdict {
    int id = 0;
    Outcome outcome = Outcome::No;
    std::string reason;
};

// In id order. A question reaches the VQA backend only when every
// prerequisite came back YES; otherwise GATED_NO without a call. An image
// token the answer lacks is NO ("missing image"), as is an unparseable reply.
std::vector<ImageVerdict> evaluate_question_dag(CallSession& session,
                                                std::span<const ImageQuestion> questions,
                                                const InterleavedSequence& query,
                                                const InterleavedSequence& answer);

// Fraction of YES; GATED_NO counts as a failure. Empty → 0.
double score_image_level(std::span<const ImageVerdict> verdicts);

struct ImageLevelResult {
    ImageTupleExtraction extraction;
    ImageQuestionSet questions;
    std::vector<ImageVerdict> verdicts;
    double score = 0.0;
    std::vector<Failure> failures;

    nlohmann::json artifact() const;
};

ImageLevelResult evaluate_image_level(CallSession& session, const InterleavedSequence& query,
                                      const InterleavedSequence& answer,
                                      const StructurePrediction& pred,
                                      ImageRequirement requirement);

}  // namespace isg
