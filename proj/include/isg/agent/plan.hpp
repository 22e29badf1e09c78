#pragma once

// Tool plans: parsing, the tool box contract, and static validation.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "isg/content.hpp"
#include "isg/gateway.hpp"

namespace isg::agent {

enum class TaskKind { CallTool, Caption, AddImage };
std::string_view task_name(TaskKind t);  // "Call_tool"/"Caption"/"AddImage"

// #image{N}# for the query's N-th image (from 1), <GEN_{N}> for the N-th
// generated image (from 0).
struct Placeholder {
    enum class Kind { Original, Generated };
    Kind kind = Kind::Generated;
    int index = 0;

    static Placeholder original(int n) { return {Kind::Original, n}; }
    static Placeholder generated(int n) { return {Kind::Generated, n}; }
    static std::optional<Placeholder> parse(std::string_view text);
    std::string str() const;
    bool operator==(const Placeholder&) const = default;
};

inline constexpr std::string_view kWait = "<WAIT>";

struct PlanStep {
    int step = 1;
    TaskKind task = TaskKind::CallTool;
    std::string input_text;  // unused for AddImage
    std::vector<Placeholder> input_images;
    std::string output{kWait};

    bool operator==(const PlanStep&) const = default;
};

struct Plan {
    std::string id = "0000";
    std::vector<PlanStep> steps;

    const PlanStep* find(int step) const;
    PlanStep* find(int step);
    // [{"ID": ..., "Plan": [...]}], the shape the planner emits.
    nlohmann::json to_json() const;
    bool operator==(const Plan&) const = default;
};

struct ParsedPlan {
    Plan plan;
    std::vector<std::string> warnings;
};

// Accepts [{"ID","Plan"}], {"ID","Plan"} or a bare step list. Fields on an
// AddImage step other than Task/Input_images/Step are ignored with a
// warning, as is any Output other than <WAIT>. Throws MalformedPlan.
ParsedPlan parse_plan(const nlohmann::json& j);

enum class ToolName { ImageGeneration, ImageEdit, VideoGeneration, Video3DGeneration, ImageMorph };
std::string_view tool_name(ToolName t);
std::optional<ToolName> parse_tool_name(std::string_view s);

struct ToolSpec {
    ToolName name = ToolName::ImageGeneration;
    int image_arity = 0;
    bool exclusive = false;
    int max_uses = 0;  // 0: unlimited

    bool operator==(const ToolSpec&) const = default;
};

// The five tools with their input arity and exclusivity.
const std::vector<ToolSpec>& default_tools();
const ToolSpec* find_tool(std::span<const ToolSpec> tools, ToolName name);

// Images a tool returns for an instruction: 1 for generation and edit, the
// requested count for video ("... 4 images ..."; 4 when unstated), one per
// "AngleN:" view for 3D (4 when unstated), 4 for morphing.
int output_count(ToolName tool, std::string_view instruction);

// Registry tools whose guidance keyword or name appears in the text.
std::vector<ToolName> keyword_candidates(std::string_view text, std::span<const ToolSpec> tools);

// Candidates a CALL_TOOL step may run: keyword matches with the right image
// arity, minus exclusive tools when the plan has more than one CALL_TOOL
// step and the match is ambiguous. One entry means no selector call.
std::vector<ToolName> step_candidates(const Plan& plan, const PlanStep& step,
                                      std::span<const ToolSpec> tools);

enum class ViolationKind {
    StepOrder,
    UnknownTool,
    Arity,
    Exclusivity,
    MaxUses,
    AddImageArity,
    DanglingPlaceholder,
    OriginalOutOfRange,
    ConsecutiveCaption,
    EmptyInstruction,
};
std::string_view violation_name(ViolationKind k);

struct Violation {
    ViolationKind kind;
    int step = 0;
    std::string message;

    bool operator==(const Violation& o) const { return kind == o.kind && step == o.step; }
};

std::vector<Violation> validate_plan(const Plan& plan, std::span<const ToolSpec> tools,
                                     const InterleavedSequence& query);
std::string describe(const std::vector<Violation>& vs);

// One planning call; `feedback` describes why an earlier plan was rejected.
// Throws MalformedPlan, EmptyInput.
ParsedPlan build_plan(CallSession& session, const InterleavedSequence& query,
                      const std::string& feedback = {}, int attempt = 0);

// The query as planner input, images labelled #image{N}#.
std::vector<UserPart> render_task(const InterleavedSequence& query);

}  // namespace isg::agent
