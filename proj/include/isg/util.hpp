#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace isg::util {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws isg::DocumentError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string trim(std::string_view s);
// Trims and collapses every internal whitespace run to one space.
std::string collapse_whitespace(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);

std::string read_file(const std::string& path);

}  // namespace isg::util
