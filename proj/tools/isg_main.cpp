// isg: evaluate interleaved answers against a corpus, or produce answers
// with the tool agent.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "isg/agent/refine.hpp"
#include "isg/bench.hpp"
#include "isg/errors.hpp"
#include "isg/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSchema = 2;
constexpr int kExitBackend = 3;
constexpr int kExitExhausted = 4;

isg::BackendConfig load_backend(const std::string& kind, const std::string& config) {
    json j = json::object();
    fs::path base;
    if (!config.empty()) {
        try {
            j = json::parse(isg::util::read_file(config));
        } catch (const json::exception& e) {
            throw isg::ConfigError(config + ": " + e.what());
        }
        base = fs::path(config).parent_path();
    }
    if (!kind.empty()) j["kind"] = kind;
    isg::BackendConfig cfg = isg::BackendConfig::from_json(j, base);
    cfg.validate();
    return cfg;
}

std::set<std::string> split_formats(const std::string& list) {
    std::set<std::string> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = isg::util::trim(item);
        if (!item.empty()) out.insert(item);
    }
    return out;
}

struct EvalArgs {
    std::string corpus, answers, backend, config, vqa_mode = "score";
    std::string levels = "structural,block,image,holistic", out, formats = "json,md,ledger";
    unsigned workers = 1;
    bool no_golden = false;
};

int run_eval(const EvalArgs& a) {
    isg::BackendConfig bcfg = load_backend(a.backend, a.config);
    isg::EvalConfig cfg;
    cfg.mode = isg::parse_judge_mode(a.vqa_mode);
    cfg.levels = isg::Levels::parse(a.levels);
    cfg.use_golden = !a.no_golden;
    cfg.artifact_dir = a.out;
    auto formats = split_formats(a.formats);

    isg::Taxonomy tax = isg::corpus_taxonomy(a.corpus);
    std::vector<isg::Sample> samples = isg::load_corpus(a.corpus, tax);
    if (samples.empty()) throw isg::SchemaViolation(a.corpus + ": corpus has no samples");

    auto gateway = isg::Gateway::create(bcfg);
    auto reports = isg::evaluate_corpus(*gateway, samples, a.answers, cfg, a.workers);
    json echo = {{"backend", bcfg.kind == isg::BackendKind::Mock ? "mock" : "http"},
                 {"model", bcfg.model},
                 {"vqa_mode", isg::judge_mode_name(cfg.mode)},
                 {"levels", cfg.levels.str()},
                 {"temperature", bcfg.decoding.temperature},
                 {"use_golden", cfg.use_golden}};
    isg::RunReport run = isg::aggregate(std::move(reports), tax, echo);
    isg::emit_report(run, a.out, formats, gateway->ledger_json());

    isg::TokenUsage total = gateway->ledger_total();
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        std::ostringstream s;
        s.precision(3);
        s << std::fixed << *v;
        return s.str();
    };
    std::cout << "samples: " << run.samples.size() << "\n"
              << "avg_by_sample: structural=" << fmt(run.avg_by_sample.structural)
              << " block=" << fmt(run.avg_by_sample.block) << " image=" << fmt(run.avg_by_sample.image)
              << " holistic=" << fmt(run.avg_by_sample.holistic) << "\n"
              << "ledger entries: " << gateway->ledger().size() << "\n"
              << "ledger total: input=" << total.input_tokens << " output=" << total.output_tokens
              << " total=" << total.total() << "\n";
    return kExitOk;
}

struct AgentArgs {
    std::string query, tools, backend, config, out;
    int replan_budget = 1, step_budget = 2;
    bool no_smoothing = false;
};

isg::InterleavedSequence load_query(const fs::path& file) {
    json j;
    try {
        j = json::parse(isg::util::read_file(file.string()));
    } catch (const json::exception& e) {
        throw isg::DocumentError(file.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("query")) return isg::sequence_from_json(j["query"], file.parent_path());
    return isg::sequence_from_json(j, file.parent_path());
}

// Inline images go to files beside the answer document.
isg::InterleavedSequence externalize(const isg::InterleavedSequence& seq, const fs::path& out) {
    isg::InterleavedSequence result;
    int n = 0;
    for (const auto& b : seq.blocks) {
        if (b.is_text() || b.image().source() == isg::ImageSource::FilePath) {
            result.blocks.push_back(b);
            continue;
        }
        fs::path file = out.parent_path() / (out.stem().string() + "_img" + std::to_string(++n) + ".png");
        auto bytes = b.image().bytes();
        std::ofstream f(file, std::ios::binary);
        if (!f) throw isg::IoError("cannot write " + file.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        result.blocks.push_back(isg::Block::image(isg::ImageRef::from_file(file)));
    }
    return result;
}

int run_agent(const AgentArgs& a) {
    isg::BackendConfig bcfg = load_backend(a.backend, a.config);
    auto tcfg = isg::agent::ToolsConfig::from_toml(a.tools);
    isg::InterleavedSequence query = load_query(a.query);
    auto gateway = isg::Gateway::create(bcfg);
    auto tools = isg::agent::make_tool_client(tcfg);
    isg::CallSession session(*gateway, "agent");
    isg::agent::AgentConfig cfg;
    cfg.replan_budget = a.replan_budget;
    cfg.step_budget = a.step_budget;
    cfg.smoothing = !a.no_smoothing;
    isg::agent::AgentResult res = isg::agent::run_agent(session, *tools, tcfg.tools, query, cfg);

    fs::path out = a.out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    isg::write_document(out, externalize(res.answer, out));
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "signature: " << isg::structure_signature(res.answer).str() << "\n"
              << "replans: " << res.replans << " regenerations: " << res.regenerations << "\n";
    for (const auto& f : res.flags) std::cout << "flag: " << f << "\n";
    return res.exhausted() ? kExitExhausted : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interleaved scene-graph evaluation and tool-agent baseline"};
    app.require_subcommand(1);

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "evaluate an answers directory against a corpus");
    eval->add_option("--corpus", ea.corpus, "corpus directory (samples/*.json)")->required();
    eval->add_option("--answers", ea.answers, "directory of <id>.json answers")->required();
    eval->add_option("--backend", ea.backend, "judge backend")->check(CLI::IsMember({"http", "mock"}));
    eval->add_option("--config", ea.config, "backend config JSON");
    eval->add_option("--vqa-mode", ea.vqa_mode, "block judge scale")->check(CLI::IsMember({"score", "yesno"}));
    eval->add_option("--levels", ea.levels, "comma-separated levels");
    eval->add_option("--out", ea.out, "output directory")->required();
    eval->add_option("--workers", ea.workers, "parallel samples")->check(CLI::Range(1u, 256u));
    eval->add_option("--formats", ea.formats, "json,md,ledger");
    eval->add_flag("--no-golden", ea.no_golden, "judge holistically without the golden answer");

    AgentArgs aa;
    auto* agent = app.add_subcommand("agent", "tool agent");
    agent->require_subcommand(1);
    auto* run = agent->add_subcommand("run", "answer one query");
    run->add_option("--query", aa.query, "query document or sample file")->required();
    run->add_option("--tools", aa.tools, "tools.toml")->required();
    run->add_option("--backend", aa.backend, "planner backend")->check(CLI::IsMember({"http", "mock"}));
    run->add_option("--config", aa.config, "backend config JSON");
    run->add_option("--out", aa.out, "answer document to write")->required();
    run->add_option("--replan-budget", aa.replan_budget, "full re-plans")->check(CLI::NonNegativeNumber);
    run->add_option("--step-budget", aa.step_budget, "regenerations per step")->check(CLI::NonNegativeNumber);
    run->add_flag("--no-smoothing", aa.no_smoothing, "skip the text smoothing pass");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends print and exit 0; everything else is a usage error.
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    try {
        if (eval->parsed()) return run_eval(ea);
        return run_agent(aa);
    } catch (const isg::SchemaViolation& e) {
        std::cerr << "schema violation: " << e.what() << "\n";
        return kExitSchema;
    } catch (const isg::DuplicateSampleId& e) {
        std::cerr << "schema violation: " << e.what() << "\n";
        return kExitSchema;
    } catch (const isg::DocumentError& e) {
        std::cerr << "document error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const isg::BackendError& e) {
        std::cerr << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const isg::Error& e) {
        std::cerr << e.kind() << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
