#include "isg/agent/plan.hpp"

#include <algorithm>
#include <map>
#include <regex>

#include "isg/errors.hpp"
#include "isg/prompts.hpp"
#include "isg/util.hpp"

namespace isg::agent {

using nlohmann::json;

std::string_view task_name(TaskKind t) {
    switch (t) {
        case TaskKind::CallTool: return "Call_tool";
        case TaskKind::Caption: return "Caption";
        case TaskKind::AddImage: return "AddImage";
    }
    return "Call_tool";
}

std::optional<Placeholder> Placeholder::parse(std::string_view text) {
    static const std::regex orig(R"(^#image\{?([0-9]+)\}?#$)", std::regex::icase);
    static const std::regex gen(R"(^<GEN_\{?([0-9]+)\}?>$)", std::regex::icase);
    std::string s = util::trim(text);
    std::smatch m;
    if (std::regex_match(s, m, orig)) return Placeholder::original(std::stoi(m[1]));
    if (std::regex_match(s, m, gen)) return Placeholder::generated(std::stoi(m[1]));
    return std::nullopt;
}

std::string Placeholder::str() const {
    return kind == Kind::Original ? "#image" + std::to_string(index) + "#"
                                  : "<GEN_" + std::to_string(index) + ">";
}

const PlanStep* Plan::find(int step) const {
    for (const auto& s : steps) {
        if (s.step == step) return &s;
    }
    return nullptr;
}

PlanStep* Plan::find(int step) {
    return const_cast<PlanStep*>(static_cast<const Plan*>(this)->find(step));
}

json Plan::to_json() const {
    json steps_j = json::array();
    for (const auto& s : steps) {
        json imgs = json::array();
        for (const auto& p : s.input_images) imgs.push_back(p.str());
        if (s.task == TaskKind::AddImage) {
            steps_j.push_back({{"Step", s.step}, {"Task", task_name(s.task)}, {"Input_images", imgs}});
        } else {
            steps_j.push_back({{"Step", s.step},
                               {"Task", task_name(s.task)},
                               {"Input_text", s.input_text},
                               {"Input_images", imgs},
                               {"Output", s.output}});
        }
    }
    return json::array({{{"ID", id}, {"Plan", steps_j}}});
}

namespace {

std::optional<TaskKind> parse_task(std::string s) {
    std::string k;
    for (char c : util::to_lower(s)) {
        if (c != '_' && c != ' ' && c != '-') k.push_back(c);
    }
    if (k == "calltool") return TaskKind::CallTool;
    if (k == "caption") return TaskKind::Caption;
    if (k == "addimage") return TaskKind::AddImage;
    return std::nullopt;
}

}  // namespace

ParsedPlan parse_plan(const json& j) {
    const json* root = &j;
    if (root->is_array() && !root->empty() && (*root)[0].is_object() && (*root)[0].contains("Plan")) {
        root = &(*root)[0];
    }
    ParsedPlan out;
    const json* steps = root;
    if (root->is_object()) {
        if (!root->contains("Plan") || !(*root)["Plan"].is_array()) {
            throw MalformedPlan("plan object has no \"Plan\" list");
        }
        if (root->contains("ID")) {
            const json& id = (*root)["ID"];
            out.plan.id = id.is_string() ? id.get<std::string>() : id.dump();
        }
        steps = &(*root)["Plan"];
    }
    if (!steps->is_array()) throw MalformedPlan("plan is not a JSON list");
    if (steps->empty()) throw MalformedPlan("plan has no steps");

    for (std::size_t i = 0; i < steps->size(); ++i) {
        const json& s = (*steps)[i];
        const std::string where = "plan step #" + std::to_string(i + 1);
        if (!s.is_object()) throw MalformedPlan(where + " is not an object");
        PlanStep st;
        if (!s.contains("Step") || !s["Step"].is_number_integer()) {
            throw MalformedPlan(where + " lacks an integer \"Step\"");
        }
        st.step = s["Step"].get<int>();
        if (!s.contains("Task") || !s["Task"].is_string()) throw MalformedPlan(where + " lacks \"Task\"");
        auto task = parse_task(s["Task"].get<std::string>());
        if (!task) throw MalformedPlan(where + ": unknown task '" + s["Task"].get<std::string>() + "'");
        st.task = *task;

        const json imgs = s.value("Input_images", json::array());
        if (!imgs.is_array()) throw MalformedPlan(where + ": \"Input_images\" must be a list");
        for (const auto& p : imgs) {
            auto ph = p.is_string() ? Placeholder::parse(p.get<std::string>()) : std::nullopt;
            if (!ph) throw MalformedPlan(where + ": bad image placeholder " + p.dump());
            st.input_images.push_back(*ph);
        }

        if (st.task == TaskKind::AddImage) {
            for (const auto& [k, _] : s.items()) {
                if (k != "Step" && k != "Task" && k != "Input_images") {
                    out.warnings.push_back("step " + std::to_string(st.step) + ": AddImage field '" + k +
                                           "' ignored");
                }
            }
        } else {
            if (!s.contains("Input_text") || !s["Input_text"].is_string()) {
                throw MalformedPlan(where + " lacks a string \"Input_text\"");
            }
            st.input_text = s["Input_text"].get<std::string>();
            if (s.contains("Output") && s["Output"] != json(std::string(kWait))) {
                out.warnings.push_back("step " + std::to_string(st.step) + ": Output " +
                                       s["Output"].dump() + " replaced by <WAIT>");
            }
        }
        out.plan.steps.push_back(std::move(st));
    }
    return out;
}

std::string_view tool_name(ToolName t) {
    switch (t) {
        case ToolName::ImageGeneration: return "ImageGeneration";
        case ToolName::ImageEdit: return "ImageEdit";
        case ToolName::VideoGeneration: return "VideoGeneration";
        case ToolName::Video3DGeneration: return "Video3DGeneration";
        case ToolName::ImageMorph: return "ImageMorph";
    }
    return "ImageGeneration";
}

std::optional<ToolName> parse_tool_name(std::string_view s) {
    std::string v = util::to_lower(util::trim(s));
    for (ToolName t : {ToolName::ImageGeneration, ToolName::ImageEdit, ToolName::VideoGeneration,
                       ToolName::Video3DGeneration, ToolName::ImageMorph}) {
        if (util::to_lower(tool_name(t)) == v) return t;
    }
    return std::nullopt;
}

const std::vector<ToolSpec>& default_tools() {
    static const std::vector<ToolSpec> tools = {
        {ToolName::ImageGeneration, 0, false, 0},
        {ToolName::ImageEdit, 1, false, 0},
        {ToolName::VideoGeneration, 1, true, 1},
        {ToolName::Video3DGeneration, 1, true, 1},
        {ToolName::ImageMorph, 2, true, 1},
    };
    return tools;
}

const ToolSpec* find_tool(std::span<const ToolSpec> tools, ToolName name) {
    for (const auto& t : tools) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

int output_count(ToolName tool, std::string_view instruction) {
    const std::string text(instruction);
    switch (tool) {
        case ToolName::ImageGeneration:
        case ToolName::ImageEdit: return 1;
        case ToolName::ImageMorph: return 4;
        case ToolName::VideoGeneration: {
            static const std::regex n(R"(\b([1-9][0-9]?)\s+(?:images|frames|screenshots|pictures)\b)",
                                      std::regex::icase);
            std::smatch m;
            if (std::regex_search(text, m, n)) return std::stoi(m[1]);
            return 4;
        }
        case ToolName::Video3DGeneration: {
            static const std::regex angle(R"(Angle\s*[0-9]+\s*:)", std::regex::icase);
            auto count = std::distance(std::sregex_iterator(text.begin(), text.end(), angle),
                                       std::sregex_iterator());
            return count > 0 ? static_cast<int>(count) : 4;
        }
    }
    return 1;
}

std::vector<ToolName> keyword_candidates(std::string_view text, std::span<const ToolSpec> tools) {
    static const std::vector<std::pair<std::string, ToolName>> keywords = {
        {"generate one image", ToolName::ImageGeneration},
        {"generate an image", ToolName::ImageGeneration},
        {"edit the image", ToolName::ImageEdit},
        {"generate a continuous video", ToolName::VideoGeneration},
        {"generate 3d views", ToolName::Video3DGeneration},
        {"morphing from", ToolName::ImageMorph},
    };
    const std::string t = util::collapse_whitespace(util::to_lower(text));
    std::vector<ToolName> out;
    auto add = [&](ToolName n) {
        if (find_tool(tools, n) && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    };
    for (const auto& [kw, name] : keywords) {
        if (t.find(kw) != std::string::npos) add(name);
    }
    static const std::regex word(R"([A-Za-z0-9]+)");
    const std::string raw(text);
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), word); it != std::sregex_iterator(); ++it) {
        if (auto n = parse_tool_name(it->str())) add(*n);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ToolName> step_candidates(const Plan& plan, const PlanStep& step,
                                      std::span<const ToolSpec> tools) {
    std::vector<ToolName> out;
    for (ToolName n : keyword_candidates(step.input_text, tools)) {
        if (find_tool(tools, n)->image_arity == static_cast<int>(step.input_images.size())) out.push_back(n);
    }
    auto calls = std::count_if(plan.steps.begin(), plan.steps.end(),
                               [](const PlanStep& s) { return s.task == TaskKind::CallTool; });
    if (out.size() > 1 && calls > 1) {
        std::vector<ToolName> shared;
        for (ToolName n : out) {
            if (!find_tool(tools, n)->exclusive) shared.push_back(n);
        }
        if (!shared.empty()) out = shared;
    }
    return out;
}

std::string_view violation_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::StepOrder: return "StepOrder";
        case ViolationKind::UnknownTool: return "UnknownTool";
        case ViolationKind::Arity: return "ArityViolation";
        case ViolationKind::Exclusivity: return "ExclusivityViolation";
        case ViolationKind::MaxUses: return "MaxUses";
        case ViolationKind::AddImageArity: return "AddImageArity";
        case ViolationKind::DanglingPlaceholder: return "DanglingPlaceholder";
        case ViolationKind::OriginalOutOfRange: return "OriginalOutOfRange";
        case ViolationKind::ConsecutiveCaption: return "ConsecutiveCaption";
        case ViolationKind::EmptyInstruction: return "EmptyInstruction";
    }
    return "Violation";
}

std::vector<Violation> validate_plan(const Plan& plan, std::span<const ToolSpec> tools,
                                     const InterleavedSequence& query) {
    std::vector<Violation> out;
    auto flag = [&](ViolationKind k, int step, std::string msg) { out.push_back({k, step, std::move(msg)}); };
    const int query_images = static_cast<int>(std::count_if(
        query.blocks.begin(), query.blocks.end(), [](const Block& b) { return !b.is_text(); }));

    int prev = 0;
    for (const auto& s : plan.steps) {
        if (s.step <= prev) flag(ViolationKind::StepOrder, s.step, "step numbers must increase from 1");
        prev = std::max(prev, s.step);
    }

    // Resolve tools first; exclusivity needs the whole plan.
    std::vector<const PlanStep*> calls;
    std::map<const PlanStep*, std::vector<ToolName>> cands;
    for (const auto& s : plan.steps) {
        if (s.task != TaskKind::CallTool) continue;
        calls.push_back(&s);
        cands[&s] = step_candidates(plan, s, tools);
    }
    std::map<ToolName, int> uses;
    for (const PlanStep* s : calls) {
        const auto& c = cands[s];
        if (util::is_blank(s->input_text)) {
            flag(ViolationKind::EmptyInstruction, s->step, "Call_tool without instruction");
        }
        if (c.empty()) {
            if (keyword_candidates(s->input_text, tools).empty()) {
                flag(ViolationKind::UnknownTool, s->step, "instruction names no known tool");
            } else {
                flag(ViolationKind::Arity, s->step,
                     "no matching tool takes " + std::to_string(s->input_images.size()) + " input images");
            }
            continue;
        }
        if (c.size() != 1) continue;
        const ToolSpec* spec = find_tool(tools, c[0]);
        int n = ++uses[c[0]];
        if (spec->max_uses > 0 && n > spec->max_uses) {
            flag(ViolationKind::MaxUses, s->step,
                 std::string(tool_name(c[0])) + " may be called " + std::to_string(spec->max_uses) + " time(s)");
        }
        if (spec->exclusive && n == 1) {
            bool others = std::any_of(calls.begin(), calls.end(), [&](const PlanStep* o) {
                return o != s && !(cands[o].size() == 1 && cands[o][0] == c[0]);
            });
            if (others) {
                flag(ViolationKind::Exclusivity, s->step,
                     std::string(tool_name(c[0])) + " cannot coexist with other tools");
            }
        }
    }

    int generated = 0;
    std::optional<TaskKind> last_output_task;
    for (const auto& s : plan.steps) {
        for (const auto& p : s.input_images) {
            if (p.kind == Placeholder::Kind::Original) {
                if (p.index < 1 || p.index > query_images) {
                    flag(ViolationKind::OriginalOutOfRange, s.step,
                         p.str() + " but the query has " + std::to_string(query_images) + " image(s)");
                }
            } else if (p.index >= generated) {
                flag(ViolationKind::DanglingPlaceholder, s.step,
                     p.str() + " is not produced by an earlier Call_tool step");
            }
        }
        if (s.task == TaskKind::CallTool) {
            const auto& c = cands[&s];
            if (!c.empty()) {
                int n = output_count(c[0], s.input_text);
                for (ToolName t : c) n = std::min(n, output_count(t, s.input_text));
                generated += n;
            }
            continue;
        }
        if (s.task == TaskKind::AddImage && s.input_images.size() != 1) {
            flag(ViolationKind::AddImageArity, s.step, "AddImage takes exactly one image");
        }
        if (s.task == TaskKind::Caption) {
            if (util::is_blank(s.input_text)) flag(ViolationKind::EmptyInstruction, s.step, "Caption without instruction");
            if (last_output_task == TaskKind::Caption) {
                flag(ViolationKind::ConsecutiveCaption, s.step, "two Caption steps in a row");
            }
        }
        last_output_task = s.task;
    }
    return out;
}

std::string describe(const std::vector<Violation>& vs) {
    std::string out;
    for (const auto& v : vs) {
        out += "- step " + std::to_string(v.step) + ": " + std::string(violation_name(v.kind)) + ": " +
               v.message + "\n";
    }
    return out;
}

std::vector<UserPart> render_task(const InterleavedSequence& query) {
    std::vector<UserPart> parts{std::string("Input Task:")};
    int n = 0;
    for (const auto& b : query.blocks) {
        if (b.is_text()) {
            parts.emplace_back(b.text());
        } else {
            parts.emplace_back("#image" + std::to_string(++n) + "#:");
            parts.emplace_back(b.image());
        }
    }
    return parts;
}

ParsedPlan build_plan(CallSession& session, const InterleavedSequence& query, const std::string& feedback,
                      int attempt) {
    if (query.blocks.empty()) throw EmptyInput("cannot plan for an empty query");
    std::vector<UserPart> parts = render_task(query);
    if (!feedback.empty()) {
        parts.emplace_back("Your previous plan could not be used:\n" + feedback +
                           "Write a new plan from scratch that avoids these problems.");
    }
    ModelResponse resp = session.complete(
        "agent_plan", attempt == 0 ? "plan" : "plan/retry" + std::to_string(attempt),
        prompts::agent_planning(), std::move(parts));
    json j;
    try {
        j = extract_json(resp.text);
    } catch (const NoJsonFound&) {
        throw MalformedPlan("planner reply contains no JSON");
    }
    return parse_plan(j);
}

}  // namespace isg::agent
