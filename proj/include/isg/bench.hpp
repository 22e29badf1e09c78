#pragma once

// Corpus loading, per-sample evaluation across the four levels, aggregation
// and report emission.

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "isg/block_eval.hpp"
#include "isg/content.hpp"
#include "isg/failure.hpp"
#include "isg/gateway.hpp"
#include "isg/holistic_eval.hpp"
#include "isg/image_eval.hpp"
#include "isg/taxonomy.hpp"

namespace isg {

struct Sample {
    std::string id;
    std::string category;
    std::string subcategory;
    ModalityClass modality_class = ModalityClass::Both;
    ImageRequirement image_requirement = ImageRequirement::Full;
    InterleavedSequence query;
    InterleavedSequence golden;
    std::filesystem::path source;
};

// dir/taxonomy.json when present, the built-in one otherwise.
Taxonomy corpus_taxonomy(const std::filesystem::path& dir);

// Parses one sample file against `tax`. Throws SchemaViolation naming file
// and field.
Sample parse_sample(const nlohmann::json& j, const std::filesystem::path& file, const Taxonomy& tax);

// Reads dir/samples/*.json in name order. Throws SchemaViolation,
// DuplicateSampleId, IoError.
std::vector<Sample> load_corpus(const std::filesystem::path& dir, const Taxonomy& tax);
std::vector<Sample> load_corpus(const std::filesystem::path& dir);

struct Levels {
    bool structural = true;
    bool block = true;
    bool image = true;
    bool holistic = true;

    // Comma-separated subset of structural,block,image,holistic. Block and
    // image imply structural. Throws ConfigError.
    static Levels parse(const std::string& list);
    std::string str() const;
};

struct EvalConfig {
    JudgeMode mode = JudgeMode::Score;
    Levels levels;
    bool use_golden = true;
    std::filesystem::path artifact_dir;  // empty: no per-sample artifacts
};

struct SampleReport {
    std::string sample_id;
    std::string category;
    std::string subcategory;
    ModalityClass modality_class = ModalityClass::Both;
    ImageRequirement image_requirement = ImageRequirement::Full;
    bool missing = false;

    struct Structural {
        bool matched = false;
        std::string predicted;  // signature, empty when prediction failed
        std::string actual;
    };
    std::optional<Structural> structural;  // level off → nullopt
    JudgeMode mode = JudgeMode::Score;
    std::optional<double> block;           // level off → nullopt
    bool image_evaluated = false;          // false → ABSENT
    double image = 0.0;
    std::optional<HolisticJudgment> holistic;

    std::vector<Failure> failures;
    std::vector<std::string> flags;
    TokenUsage usage;  // attributed, identical on cache hits
    std::size_t structure_calls = 0, block_calls = 0, image_calls = 0, holistic_calls = 0;

    std::optional<double> structural_score() const;
    std::optional<double> image_score() const;  // nullopt when ABSENT
    std::optional<double> holistic_score() const;
    nlohmann::json to_json() const;
};

// All enabled levels for one sample. No answer → MISSING: every evaluated level at
// its minimum, no gateway calls. Backend errors propagate.
SampleReport evaluate_sample(Gateway& gateway, const Sample& sample,
                             const std::optional<InterleavedSequence>& answer,
                             const EvalConfig& cfg);

// answers_dir/<id>.json for each sample, evaluated on `workers` threads.
// Reports come back in sample-id order. Throws DocumentError for an
// unreadable answer; the first backend error is rethrown after the barrier.
std::vector<SampleReport> evaluate_corpus(Gateway& gateway, const std::vector<Sample>& samples,
                                          const std::filesystem::path& answers_dir,
                                          const EvalConfig& cfg, unsigned workers);

struct LevelMeans {
    std::optional<double> structural, block, image, holistic;
    nlohmann::json to_json() const;
};

struct GroupSummary {
    std::string name;
    std::size_t samples = 0;
    LevelMeans means;
    std::size_t block_failures = 0;
};

struct RunReport {
    std::vector<SampleReport> samples;
    std::vector<GroupSummary> by_subcategory;
    std::vector<GroupSummary> by_category;                  // sample-weighted
    std::vector<GroupSummary> by_category_over_subcategory;  // subtask-weighted
    std::vector<GroupSummary> by_modality;
    LevelMeans avg_by_category;  // mean of by_category
    LevelMeans avg_by_sample;    // mean over all samples
    nlohmann::json config;
    TokenUsage total_usage;

    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

// Means skip absent values; a level nobody has stays null. Groups follow
// taxonomy order and only include groups with samples. Throws EmptyInput.
RunReport aggregate(std::vector<SampleReport> reports, const Taxonomy& tax,
                    nlohmann::json config = nlohmann::json::object());

// report.json always; "md" adds report.md, "ledger" adds ledger.json.
// Throws IoError.
void emit_report(const RunReport& run, const std::filesystem::path& out_dir,
                 const std::set<std::string>& formats,
                 const nlohmann::json& ledger = nlohmann::json::array());

}  // namespace isg
