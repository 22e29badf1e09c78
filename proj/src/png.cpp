#include "isg/png.hpp"

#include <zlib.h>

#include <stdexcept>
#include <string_view>

namespace isg::png {

namespace {

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void chunk(std::vector<std::uint8_t>& out, std::string_view type,
           std::span<const std::uint8_t> data) {
    put32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t start = out.size();
    out.insert(out.end(), type.begin(), type.end());
    out.insert(out.end(), data.begin(), data.end());
    uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
    put32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_flat(int width, int height, Rgb color,
                                      const std::map<std::string, std::string>& text) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("PNG dimensions must be positive");
    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

    std::vector<std::uint8_t> ihdr;
    put32(ihdr, static_cast<std::uint32_t>(width));
    put32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, no interlace
    chunk(out, "IHDR", ihdr);

    for (const auto& [key, value] : text) {
        std::vector<std::uint8_t> t(key.begin(), key.end());
        t.push_back(0);
        t.insert(t.end(), value.begin(), value.end());
        chunk(out, "tEXt", t);
    }

    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * static_cast<std::size_t>(width)));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        for (int x = 0; x < width; ++x) raw.insert(raw.end(), {color.r, color.g, color.b});
    }
    uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> packed(packed_size);
    if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
        throw std::runtime_error("zlib compression failed");
    }
    packed.resize(packed_size);
    chunk(out, "IDAT", packed);
    chunk(out, "IEND", {});
    return out;
}

std::map<std::string, std::string> read_text_chunks(std::span<const std::uint8_t> b) {
    std::map<std::string, std::string> out;
    if (b.size() < 8 || b[0] != 0x89 || b[1] != 'P') return out;
    std::size_t i = 8;
    while (i + 12 <= b.size()) {
        std::uint32_t len = (std::uint32_t{b[i]} << 24) | (std::uint32_t{b[i + 1]} << 16) |
                            (std::uint32_t{b[i + 2]} << 8) | std::uint32_t{b[i + 3]};
        std::string_view type(reinterpret_cast<const char*>(&b[i + 4]), 4);
        if (i + 12 + len > b.size()) break;
        if (type == "tEXt") {
            std::string_view data(reinterpret_cast<const char*>(&b[i + 8]), len);
            auto nul = data.find('\0');
            if (nul != std::string_view::npos) {
                out.emplace(std::string(data.substr(0, nul)), std::string(data.substr(nul + 1)));
            }
        }
        if (type == "IEND") break;
        i += 12 + len;
    }
    return out;
}

}  // namespace isg::png
