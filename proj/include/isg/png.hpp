#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace isg::png {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

// Single-colour RGB PNG with `text` written as tEXt chunks.
std::vector<std::uint8_t> encode_flat(int width, int height, Rgb color,
                                      const std::map<std::string, std::string>& text = {});

// tEXt chunks of a PNG; empty for anything else.
std::map<std::string, std::string> read_text_chunks(std::span<const std::uint8_t> bytes);

}  // namespace isg::png
