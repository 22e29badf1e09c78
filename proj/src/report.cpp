#include <cstdio>
#include <fstream>

#include "isg/bench.hpp"
#include "isg/errors.hpp"

namespace isg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sums in sample order; callers recomputing the mean must do the same.
struct Acc {
    double sum = 0;
    std::size_t n = 0;
    void add(const std::optional<double>& v) {
        if (!v) return;
        sum += *v;
        ++n;
    }
    std::optional<double> mean() const {
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

struct LevelAcc {
    Acc structural, block, image, holistic;
    void add(const SampleReport& r) {
        structural.add(r.structural_score());
        block.add(r.block);
        image.add(r.image_score());
        holistic.add(r.holistic_score());
    }
    void add(const LevelMeans& m) {
        structural.add(m.structural);
        block.add(m.block);
        image.add(m.image);
        holistic.add(m.holistic);
    }
    LevelMeans means() const {
        return {structural.mean(), block.mean(), image.mean(), holistic.mean()};
    }
};

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json groups_json(const std::vector<GroupSummary>& gs) {
    json out = json::array();
    for (const auto& g : gs) {
        out.push_back({{"name", g.name},
                       {"samples", g.samples},
                       {"means", g.means.to_json()},
                       {"block_failures", g.block_failures}});
    }
    return out;
}

GroupSummary summarize(const std::string& name, const std::vector<const SampleReport*>& rs) {
    GroupSummary g;
    g.name = name;
    g.samples = rs.size();
    LevelAcc acc;
    for (const auto* r : rs) {
        acc.add(*r);
        for (const auto& f : r->failures) {
            if (f.stage == "block") ++g.block_failures;
        }
    }
    g.means = acc.means();
    return g;
}

std::string cell(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

void md_table(std::string& md, const std::string& head, const std::vector<GroupSummary>& gs) {
    md += "| " + head + " | Samples | Structural | Block | Image | Holistic |\n";
    md += "|---|---|---|---|---|---|\n";
    for (const auto& g : gs) {
        md += "| " + g.name + " | " + std::to_string(g.samples) + " | " + cell(g.means.structural) +
              " | " + cell(g.means.block) + " | " + cell(g.means.image) + " | " +
              cell(g.means.holistic) + " |\n";
    }
}

}  // namespace

json LevelMeans::to_json() const {
    return {{"structural", opt(structural)},
            {"block", opt(block)},
            {"image", opt(image)},
            {"holistic", opt(holistic)}};
}

RunReport aggregate(std::vector<SampleReport> reports, const Taxonomy& tax, json config) {
    if (reports.empty()) throw EmptyInput("no sample reports to aggregate");
    RunReport run;
    run.samples = std::move(reports);
    run.config = std::move(config);

    LevelAcc all;
    for (const auto& r : run.samples) {
        all.add(r);
        run.total_usage += r.usage;
    }
    run.avg_by_sample = all.means();

    LevelAcc over_categories;
    for (const auto& cat : tax.categories()) {
        std::vector<const SampleReport*> in_cat;
        LevelAcc over_subs;
        for (const auto& sub : cat.subcategories) {
            std::vector<const SampleReport*> in_sub;
            for (const auto& r : run.samples) {
                if (r.subcategory == sub.name) in_sub.push_back(&r);
            }
            if (in_sub.empty()) continue;
            GroupSummary g = summarize(sub.name, in_sub);
            over_subs.add(g.means);
            run.by_subcategory.push_back(g);
            in_cat.insert(in_cat.end(), in_sub.begin(), in_sub.end());
        }
        if (in_cat.empty()) continue;
        GroupSummary g = summarize(cat.name, in_cat);
        over_categories.add(g.means);
        run.by_category.push_back(g);
        GroupSummary gs = g;
        gs.means = over_subs.means();
        run.by_category_over_subcategory.push_back(gs);
    }
    run.avg_by_category = over_categories.means();

    for (ModalityClass m : {ModalityClass::Vision, ModalityClass::Both, ModalityClass::Language}) {
        std::vector<const SampleReport*> in;
        for (const auto& r : run.samples) {
            if (r.modality_class == m) in.push_back(&r);
        }
        if (!in.empty()) run.by_modality.push_back(summarize(std::string(modality_class_name(m)), in));
    }
    return run;
}

json RunReport::to_json() const {
    json ss = json::array();
    for (const auto& s : samples) ss.push_back(s.to_json());
    return {{"config", config},
            {"samples", ss},
            {"by_subcategory", groups_json(by_subcategory)},
            {"by_category", groups_json(by_category)},
            {"by_category_over_subcategory", groups_json(by_category_over_subcategory)},
            {"by_modality", groups_json(by_modality)},
            {"avg_by_category", avg_by_category.to_json()},
            {"avg_by_sample", avg_by_sample.to_json()},
            {"total_usage", usage_to_json(total_usage)}};
}

std::string RunReport::to_markdown() const {
    std::string md = "# Evaluation report\n\n";
    if (config.contains("vqa_mode")) {
        md += "Block scores use the `" + config["vqa_mode"].get<std::string>() + "` scale.\n\n";
    }
    md += "## By category\n\n";
    std::vector<GroupSummary> cats = by_category;
    cats.push_back({"Avg. (by category)", samples.size(), avg_by_category, 0});
    cats.push_back({"Avg. (by sample)", samples.size(), avg_by_sample, 0});
    md_table(md, "Category", cats);
    md += "\n## By category, subtask-weighted\n\n";
    md_table(md, "Category", by_category_over_subcategory);
    md += "\n## By subcategory\n\n";
    md_table(md, "Subcategory", by_subcategory);
    md += "\n## By modality class\n\n";
    md_table(md, "Modality", by_modality);
    md += "\n## Samples\n\n";
    md += "| Sample | Subcategory | Structural | Block | Image | Holistic | Flags |\n";
    md += "|---|---|---|---|---|---|---|\n";
    for (const auto& s : samples) {
        std::string flags;
        for (const auto& f : s.flags) flags += (flags.empty() ? "" : " ") + f;
        md += "| " + s.sample_id + " | " + s.subcategory + " | " + cell(s.structural_score()) + " | " +
              cell(s.block) + " | " + cell(s.image_score()) + " | " + cell(s.holistic_score()) +
              " | " + flags + " |\n";
    }
    md += "\nTokens: input " + std::to_string(total_usage.input_tokens) + ", output " +
          std::to_string(total_usage.output_tokens) + ".\n";
    return md;
}

namespace {

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << text;
    out.close();
    if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace

void emit_report(const RunReport& run, const fs::path& out_dir, const std::set<std::string>& formats,
                 const json& ledger) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw IoError("cannot create " + out_dir.string());
    for (const auto& f : formats) {
        if (f != "json" && f != "md" && f != "ledger") throw ConfigError("unknown report format '" + f + "'");
    }
    write_text(out_dir / "report.json", run.to_json().dump(2) + "\n");
    if (formats.contains("md")) write_text(out_dir / "report.md", run.to_markdown());
    if (formats.contains("ledger")) write_text(out_dir / "ledger.json", ledger.dump(2) + "\n");
}

}  // namespace isg
