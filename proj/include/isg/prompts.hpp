#pragma once

// Role prompts for every model call the evaluator and the agent make. The
// wording is part of the request fingerprint, so edits invalidate caches
// and fixture fingerprints (aliases are unaffected).

#include <string>
#include <string_view>

namespace isg::prompts {

enum class JudgeScale { YesNo, Score1To10 };

std::string structure_extraction();
std::string block_requirements_extraction();
// `requirement` is passed through verbatim, e.g. "all objects" / "main objects".
std::string image_requirements_extraction(std::string_view requirement);
std::string block_question_generation();
std::string image_question_generation();
std::string block_vqa_two_texts(JudgeScale scale);
std::string block_vqa_multimodal(JudgeScale scale);
std::string image_vqa();
std::string holistic_judge(bool with_golden);

std::string agent_planning();
std::string agent_tool_selector();
std::string agent_step_regeneration();
std::string agent_caption();
std::string agent_smoothing();

// Marker the smoothing prompt uses for every image position.
inline constexpr std::string_view kImageMarker = "<boi><eoi>";

}  // namespace isg::prompts
