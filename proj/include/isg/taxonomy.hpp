#pragma once

// Task categories and subtasks, each with its dominant modality class and
// image-generation requirement. Ships as data/taxonomy.json; a corpus may
// carry its own.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "isg/image_eval.hpp"

namespace isg {

enum class ModalityClass { Vision, Both, Language };

std::string_view modality_class_name(ModalityClass m);  // "VISION"/"BOTH"/"LANGUAGE"
std::optional<ModalityClass> parse_modality_class(std::string_view s);

struct Subcategory {
    std::string name;
    int reference_samples = 0;  // size of the reference benchmark's split, 0 if unknown
};

struct Category {
    std::string name;
    ModalityClass modality = ModalityClass::Both;
    ImageRequirement requirement = ImageRequirement::Full;
    std::vector<Subcategory> subcategories;
};

class Taxonomy {
public:
    // Throws SchemaViolation on a malformed document or duplicated names.
    static Taxonomy from_json(const nlohmann::json& j);
    static Taxonomy from_file(const std::filesystem::path& file);
    static const Taxonomy& builtin();

    const std::vector<Category>& categories() const { return categories_; }
    const Category* category(std::string_view name) const;
    // Category owning the subtask; null when unknown.
    const Category* category_of(std::string_view subcategory) const;
    std::size_t subcategory_count() const;

private:
    std::vector<Category> categories_;
};

}  // namespace isg
