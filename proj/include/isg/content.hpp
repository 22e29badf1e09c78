#pragma once

// Interleaved text/image content: blocks, sequences, placeholder tokens and
// the modality signature every evaluation level is keyed on.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace isg {

enum class Modality { Text, Image };

std::string_view modality_name(Modality m);  // "TEXT" / "IMAGE"

struct ImageInfo {
    std::string media_type;
    int width = 0;
    int height = 0;
};

// Format and dimension sniffing for PNG, JPEG, GIF and WebP headers.
std::optional<ImageInfo> sniff_image(std::span<const std::uint8_t> bytes);

enum class ImageSource { FilePath, InlineBytes };

class ImageRef {
public:
    // Lazy: the file is not touched until bytes() or probed() is called.
    static ImageRef from_file(std::filesystem::path path);
    static ImageRef from_bytes(std::vector<std::uint8_t> bytes, std::string media_type = {});

    ImageSource source() const { return source_; }
    const std::filesystem::path& path() const { return path_; }
    const std::string& media_type() const { return media_type_; }
    std::optional<int> width() const { return width_; }
    std::optional<int> height() const { return height_; }

    // File contents or the inline payload. Throws DocumentError when a
    // FILE_PATH reference does not resolve.
    std::vector<std::uint8_t> bytes() const;

    // Copy with media type and dimensions filled from the image header.
    ImageRef probed() const;

    // Content identity: inline payloads compare by bytes, files by path.
    bool operator==(const ImageRef& other) const;

private:
    ImageSource source_ = ImageSource::FilePath;
    std::filesystem::path path_;
    std::shared_ptr<const std::vector<std::uint8_t>> data_;
    std::string media_type_;
    std::optional<int> width_;
    std::optional<int> height_;
};

class Block {
public:
    // Throws InvalidBlock when the text is blank.
    static Block text(std::string content);
    static Block image(ImageRef ref);

    Modality kind() const {
        return std::holds_alternative<std::string>(content_) ? Modality::Text : Modality::Image;
    }
    bool is_text() const { return kind() == Modality::Text; }
    bool is_image() const { return kind() == Modality::Image; }

    // Throw InvalidBlock on a kind mismatch.
    const std::string& text() const;
    const ImageRef& image() const;

    bool operator==(const Block& other) const = default;

private:
    explicit Block(std::variant<std::string, ImageRef> c) : content_(std::move(c)) {}
    std::variant<std::string, ImageRef> content_;
};

struct InterleavedSequence {
    std::vector<Block> blocks;

    bool empty() const { return blocks.empty(); }
    std::size_t size() const { return blocks.size(); }
    std::size_t count(Modality m) const;
    bool operator==(const InterleavedSequence& other) const = default;
};

struct StructureSignature {
    std::vector<Modality> sequence;

    bool operator==(const StructureSignature& other) const = default;
    // Compact form, e.g. "I,T,I,T".
    std::string str() const;
};

enum class TokenScope { Query, Gen };

struct ContentToken {
    TokenScope scope = TokenScope::Gen;
    Modality kind = Modality::Text;
    int index = 1;  // 1-based within (scope, kind)

    // <query_img{n}>, <query_text{n}>, <gen_img{n}>, <gen_text{n}>
    std::string str() const;
    static ContentToken parse(std::string_view text);  // throws InvalidToken
    static std::optional<ContentToken> try_parse(std::string_view text);

    auto operator<=>(const ContentToken& other) const = default;
};

// Merges adjacent TEXT blocks with a single newline; images untouched.
InterleavedSequence normalize_sequence(const InterleavedSequence& seq);

StructureSignature structure_signature(const InterleavedSequence& seq);

// Looks the token up by position among blocks of its kind in its scope's
// sequence. Throws TokenOutOfRange.
const Block& resolve_token(const ContentToken& token, const InterleavedSequence& query,
                           const InterleavedSequence& answer);

// Tokens for every block of `seq`, in order, under `scope`.
std::vector<ContentToken> tokenize_sequence(const InterleavedSequence& seq, TokenScope scope);

// Interleaved document JSON:
//   {"blocks":[{"type":"text","content":"..."} | {"type":"image","path":"..."}]}
// Inline images use {"type":"image","data":"<base64>","media_type":"image/png"}.
// Relative paths resolve against base_dir; on output, paths under base_dir
// are written relative to it.
InterleavedSequence sequence_from_json(const nlohmann::json& doc,
                                       const std::filesystem::path& base_dir = {});
nlohmann::json sequence_to_json(const InterleavedSequence& seq,
                                const std::filesystem::path& base_dir = {});

InterleavedSequence read_document(const std::filesystem::path& file);
void write_document(const std::filesystem::path& file, const InterleavedSequence& seq);

}  // namespace isg
