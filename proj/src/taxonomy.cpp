#include "isg/taxonomy.hpp"

#include <set>

#include "isg/errors.hpp"
#include "isg/util.hpp"

namespace isg {

namespace detail {
extern const char* const kDefaultTaxonomy;
}

using nlohmann::json;

std::string_view modality_class_name(ModalityClass m) {
    switch (m) {
        case ModalityClass::Vision: return "VISION";
        case ModalityClass::Both: return "BOTH";
        case ModalityClass::Language: return "LANGUAGE";
    }
    return "BOTH";
}

std::optional<ModalityClass> parse_modality_class(std::string_view s) {
    std::string v = util::to_lower(s);
    if (v == "vision") return ModalityClass::Vision;
    if (v == "both") return ModalityClass::Both;
    if (v == "language") return ModalityClass::Language;
    return std::nullopt;
}

Taxonomy Taxonomy::from_json(const json& j) {
    auto fail = [](const std::string& what) { throw SchemaViolation("taxonomy: " + what); };
    if (!j.is_object() || !j.contains("categories") || !j["categories"].is_array()) {
        fail("expected {\"categories\": [...]}");
    }
    Taxonomy t;
    std::set<std::string> cats, subs;
    for (const json& c : j["categories"]) {
        if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) fail("category without a name");
        Category cat;
        cat.name = c["name"].get<std::string>();
        auto m = parse_modality_class(c.value("modality_class", ""));
        if (!m) fail("category '" + cat.name + "' has no valid modality_class");
        auto r = parse_image_requirement(c.value("image_requirement", ""));
        if (!r) fail("category '" + cat.name + "' has no valid image_requirement");
        cat.modality = *m;
        cat.requirement = *r;
        if (!cats.insert(cat.name).second) fail("duplicate category '" + cat.name + "'");
        if (!c.contains("subcategories") || !c["subcategories"].is_array() || c["subcategories"].empty()) {
            fail("category '" + cat.name + "' has no subcategories");
        }
        for (const json& s : c["subcategories"]) {
            Subcategory sub;
            if (s.is_string()) {
                sub.name = s.get<std::string>();
            } else if (s.is_object() && s.contains("name") && s["name"].is_string()) {
                sub.name = s["name"].get<std::string>();
                sub.reference_samples = s.value("samples", 0);
            } else {
                fail("bad subcategory in '" + cat.name + "'");
            }
            if (!subs.insert(sub.name).second) fail("duplicate subcategory '" + sub.name + "'");
            cat.subcategories.push_back(std::move(sub));
        }
        t.categories_.push_back(std::move(cat));
    }
    if (t.categories_.empty()) fail("no categories");
    return t;
}

Taxonomy Taxonomy::from_file(const std::filesystem::path& file) {
    json j;
    try {
        j = json::parse(util::read_file(file.string()));
    } catch (const json::exception& e) {
        throw SchemaViolation(file.string() + ": " + e.what());
    }
    return from_json(j);
}

const Taxonomy& Taxonomy::builtin() {
    static const Taxonomy t = from_json(json::parse(detail::kDefaultTaxonomy));
    return t;
}

const Category* Taxonomy::category(std::string_view name) const {
    for (const auto& c : categories_) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

const Category* Taxonomy::category_of(std::string_view subcategory) const {
    for (const auto& c : categories_) {
        for (const auto& s : c.subcategories) {
            if (s.name == subcategory) return &c;
        }
    }
    return nullptr;
}

std::size_t Taxonomy::subcategory_count() const {
    std::size_t n = 0;
    for (const auto& c : categories_) n += c.subcategories.size();
    return n;
}

}  // namespace isg
