#include "isg/content.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>

#include "isg/errors.hpp"
#include "isg/util.hpp"

namespace isg {

namespace fs = std::filesystem;

std::string_view modality_name(Modality m) {
    return m == Modality::Text ? "TEXT" : "IMAGE";
}

namespace {

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}
std::uint16_t be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le24(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16);
}

std::optional<ImageInfo> sniff_jpeg(std::span<const std::uint8_t> b) {
    std::size_t i = 2;
    while (i + 9 < b.size()) {
        if (b[i] != 0xFF) return std::nullopt;
        std::uint8_t marker = b[i + 1];
        if (marker == 0xFF) {
            ++i;
            continue;
        }
        if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) {
            i += 2;
            continue;
        }
        std::uint16_t len = be16(&b[i + 2]);
        bool is_sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                      marker != 0xCC;
        if (is_sof) {
            return ImageInfo{"image/jpeg", be16(&b[i + 7]), be16(&b[i + 5])};
        }
        i += 2 + len;
    }
    return std::nullopt;
}

std::optional<ImageInfo> sniff_webp(std::span<const std::uint8_t> b) {
    if (b.size() < 30) return std::nullopt;
    std::string_view chunk(reinterpret_cast<const char*>(&b[12]), 4);
    if (chunk == "VP8 ") {
        return ImageInfo{"image/webp", le16(&b[26]) & 0x3FFF, le16(&b[28]) & 0x3FFF};
    }
    if (chunk == "VP8L") {
        std::uint32_t bits = std::uint32_t{b[21]} | (std::uint32_t{b[22]} << 8) |
                             (std::uint32_t{b[23]} << 16) | (std::uint32_t{b[24]} << 24);
        return ImageInfo{"image/webp", static_cast<int>((bits & 0x3FFF) + 1),
                         static_cast<int>(((bits >> 14) & 0x3FFF) + 1)};
    }
    if (chunk == "VP8X") {
        return ImageInfo{"image/webp", static_cast<int>(le24(&b[24]) + 1),
                         static_cast<int>(le24(&b[27]) + 1)};
    }
    return std::nullopt;
}

std::string media_type_from_extension(const fs::path& p) {
    std::string ext = util::to_lower(p.extension().string());
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    return "application/octet-stream";
}

}  // namespace

std::optional<ImageInfo> sniff_image(std::span<const std::uint8_t> b) {
    static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (b.size() >= 24 && std::equal(std::begin(kPng), std::end(kPng), b.begin())) {
        return ImageInfo{"image/png", static_cast<int>(be32(&b[16])),
                         static_cast<int>(be32(&b[20]))};
    }
    if (b.size() >= 10 && b[0] == 'G' && b[1] == 'I' && b[2] == 'F') {
        return ImageInfo{"image/gif", le16(&b[6]), le16(&b[8])};
    }
    if (b.size() >= 4 && b[0] == 0xFF && b[1] == 0xD8) return sniff_jpeg(b);
    if (b.size() >= 12 && std::string_view(reinterpret_cast<const char*>(b.data()), 4) == "RIFF" &&
        std::string_view(reinterpret_cast<const char*>(&b[8]), 4) == "WEBP") {
        return sniff_webp(b);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// ImageRef

ImageRef ImageRef::from_file(fs::path path) {
    ImageRef ref;
    ref.source_ = ImageSource::FilePath;
    ref.media_type_ = media_type_from_extension(path);
    ref.path_ = std::move(path).lexically_normal();
    return ref;
}

ImageRef ImageRef::from_bytes(std::vector<std::uint8_t> bytes, std::string media_type) {
    ImageRef ref;
    ref.source_ = ImageSource::InlineBytes;
    if (media_type.empty()) {
        auto info = sniff_image(bytes);
        media_type = info ? info->media_type : "application/octet-stream";
    }
    ref.media_type_ = std::move(media_type);
    ref.data_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes));
    return ref;
}

std::vector<std::uint8_t> ImageRef::bytes() const {
    if (source_ == ImageSource::InlineBytes) return *data_;
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw DocumentError("image file does not resolve: " + path_.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageRef ImageRef::probed() const {
    ImageRef copy = *this;
    auto data = bytes();
    if (auto info = sniff_image(data)) {
        copy.media_type_ = info->media_type;
        copy.width_ = info->width;
        copy.height_ = info->height;
    } else {
        throw DocumentError("not a recognised raster image: " +
                            (source_ == ImageSource::FilePath ? path_.string() : "<inline>"));
    }
    return copy;
}

bool ImageRef::operator==(const ImageRef& other) const {
    if (source_ != other.source_) return false;
    if (source_ == ImageSource::FilePath) return path_ == other.path_;
    return data_ == other.data_ || *data_ == *other.data_;
}

// ---------------------------------------------------------------------------
// Block / sequence

Block Block::text(std::string content) {
    if (util::is_blank(content)) throw InvalidBlock("TEXT block is empty after trimming");
    return Block(std::move(content));
}

Block Block::image(ImageRef ref) { return Block(std::move(ref)); }

const std::string& Block::text() const {
    if (!is_text()) throw InvalidBlock("block is not TEXT");
    return std::get<std::string>(content_);
}

const ImageRef& Block::image() const {
    if (!is_image()) throw InvalidBlock("block is not IMAGE");
    return std::get<ImageRef>(content_);
}

std::size_t InterleavedSequence::count(Modality m) const {
    return static_cast<std::size_t>(std::count_if(
        blocks.begin(), blocks.end(), [m](const Block& b) { return b.kind() == m; }));
}

std::string StructureSignature::str() const {
    std::string out;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        if (i) out.push_back(',');
        out.push_back(sequence[i] == Modality::Text ? 'T' : 'I');
    }
    return out;
}

InterleavedSequence normalize_sequence(const InterleavedSequence& seq) {
    InterleavedSequence out;
    out.blocks.reserve(seq.blocks.size());
    for (const Block& b : seq.blocks) {
        if (b.is_text() && !out.blocks.empty() && out.blocks.back().is_text()) {
            out.blocks.back() = Block::text(out.blocks.back().text() + "\n" + b.text());
        } else {
            out.blocks.push_back(b);
        }
    }
    return out;
}

StructureSignature structure_signature(const InterleavedSequence& seq) {
    StructureSignature sig;
    sig.sequence.reserve(seq.blocks.size());
    for (const Block& b : seq.blocks) sig.sequence.push_back(b.kind());
    return sig;
}

// ---------------------------------------------------------------------------
// Tokens

std::string ContentToken::str() const {
    std::string out = "<";
    out += scope == TokenScope::Query ? "query_" : "gen_";
    out += kind == Modality::Image ? "img" : "text";
    out += std::to_string(index);
    out += ">";
    return out;
}

std::optional<ContentToken> ContentToken::try_parse(std::string_view text) {
    static const std::regex kToken(R"(^<(query|gen)_(img|text)([1-9][0-9]*)>$)");
    std::string s = util::trim(text);
    std::smatch m;
    if (!std::regex_match(s, m, kToken)) return std::nullopt;
    ContentToken t;
    t.scope = m[1] == "query" ? TokenScope::Query : TokenScope::Gen;
    t.kind = m[2] == "img" ? Modality::Image : Modality::Text;
    std::string digits = m[3];
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.index);
    if (ec != std::errc()) return std::nullopt;
    return t;
}

ContentToken ContentToken::parse(std::string_view text) {
    auto t = try_parse(text);
    if (!t) throw InvalidToken("not a content token: '" + std::string(text) + "'");
    return *t;
}

const Block& resolve_token(const ContentToken& token, const InterleavedSequence& query,
                           const InterleavedSequence& answer) {
    const InterleavedSequence& seq = token.scope == TokenScope::Query ? query : answer;
    int seen = 0;
    for (const Block& b : seq.blocks) {
        if (b.kind() == token.kind && ++seen == token.index) return b;
    }
    throw TokenOutOfRange(token.str() + " exceeds the " + std::to_string(seen) + " " +
                          std::string(modality_name(token.kind)) + " block(s) available");
}

std::vector<ContentToken> tokenize_sequence(const InterleavedSequence& seq, TokenScope scope) {
    std::vector<ContentToken> out;
    int texts = 0;
    int images = 0;
    for (const Block& b : seq.blocks) {
        int& counter = b.is_text() ? texts : images;
        out.push_back(ContentToken{scope, b.kind(), ++counter});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Document JSON

InterleavedSequence sequence_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
    if (!doc.is_object() || !doc.contains("blocks") || !doc["blocks"].is_array()) {
        throw DocumentError("document must be an object with a \"blocks\" array");
    }
    InterleavedSequence seq;
    std::size_t i = 0;
    for (const auto& item : doc["blocks"]) {
        std::string where = "blocks[" + std::to_string(i++) + "]";
        if (!item.is_object() || !item.contains("type") || !item["type"].is_string()) {
            throw DocumentError(where + ": missing \"type\"");
        }
        const std::string type = item["type"];
        if (type == "text") {
            if (!item.contains("content") || !item["content"].is_string()) {
                throw DocumentError(where + ": text block needs string \"content\"");
            }
            try {
                seq.blocks.push_back(Block::text(item["content"].get<std::string>()));
            } catch (const InvalidBlock& e) {
                throw DocumentError(where + ": " + e.what());
            }
        } else if (type == "image") {
            if (item.contains("path") && item["path"].is_string()) {
                fs::path p = item["path"].get<std::string>();
                if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
                seq.blocks.push_back(Block::image(ImageRef::from_file(p)));
            } else if (item.contains("data") && item["data"].is_string()) {
                std::string media = item.value("media_type", std::string());
                seq.blocks.push_back(Block::image(ImageRef::from_bytes(
                    util::base64_decode(item["data"].get<std::string>()), media)));
            } else {
                throw DocumentError(where + ": image block needs \"path\" or \"data\"");
            }
        } else {
            throw DocumentError(where + ": unknown block type '" + type + "'");
        }
    }
    return seq;
}

nlohmann::json sequence_to_json(const InterleavedSequence& seq, const fs::path& base_dir) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const Block& b : seq.blocks) {
        if (b.is_text()) {
            blocks.push_back({{"type", "text"}, {"content", b.text()}});
            continue;
        }
        const ImageRef& img = b.image();
        if (img.source() == ImageSource::InlineBytes) {
            blocks.push_back({{"type", "image"},
                              {"data", util::base64_encode(img.bytes())},
                              {"media_type", img.media_type()}});
            continue;
        }
        fs::path p = img.path();
        if (!base_dir.empty()) {
            fs::path rel = p.lexically_relative(base_dir);
            if (!rel.empty() && *rel.begin() != "..") p = rel;
        }
        blocks.push_back({{"type", "image"}, {"path", p.generic_string()}});
    }
    return {{"blocks", std::move(blocks)}};
}

InterleavedSequence read_document(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DocumentError(file.string() + ": " + e.what());
    }
    return sequence_from_json(doc, file.parent_path());
}

void write_document(const fs::path& file, const InterleavedSequence& seq) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << sequence_to_json(seq, file.parent_path()).dump(2) << "\n";
    if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace isg
