#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "isg/errors.hpp"

namespace isg {

// A recoverable error recorded against a sample instead of aborting it.
struct Failure {
    std::string stage;  // "structure", "block", "image", "holistic", ...
    std::string kind;   // Error::kind()
    std::string message;

    static Failure from(std::string stage, const Error& e) {
        return {std::move(stage), e.kind(), e.what()};
    }
    bool operator==(const Failure&) const = default;
};

inline nlohmann::json failures_to_json(const std::vector<Failure>& fs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& f : fs) {
        out.push_back({{"stage", f.stage}, {"kind", f.kind}, {"message", f.message}});
    }
    return out;
}

// Entries the evaluators rejected from model output, kept for the artifacts.
struct Dropped {
    nlohmann::json item;
    std::string reason;
};

inline nlohmann::json dropped_to_json(const std::vector<Dropped>& ds) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& d : ds) out.push_back({{"item", d.item}, {"reason", d.reason}});
    return out;
}

}  // namespace isg
