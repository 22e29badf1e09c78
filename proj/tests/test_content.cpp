#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "helpers.hpp"
#include "isg/content.hpp"
#include "isg/errors.hpp"
#include "isg/png.hpp"
#include "isg/util.hpp"

using namespace isg;
using isg::test::layout;
using isg::test::png_image;
using isg::test::TempDir;

namespace {

// Random sequence of up to `max_len` blocks; text blocks drawn from a small
// pool so merges and duplicates are common.
InterleavedSequence random_sequence(std::mt19937& rng, int max_len) {
    std::uniform_int_distribution<int> len(0, max_len), coin(0, 1), pick(0, 4);
    static const char* words[] = {"alpha", "beta  gamma", "delta\nline", " eps ", "zeta"};
    InterleavedSequence seq;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (coin(rng)) {
            seq.blocks.push_back(Block::text(words[pick(rng)]));
        } else {
            seq.blocks.push_back(Block::image(png_image(static_cast<std::uint8_t>(pick(rng) * 40))));
        }
    }
    return seq;
}

// Brute-force merge used as the oracle for normalize_sequence.
std::vector<std::string> oracle_normalize(const InterleavedSequence& seq) {
    std::vector<std::string> out;
    bool last_text = false;
    for (const auto& b : seq.blocks) {
        if (b.is_text()) {
            if (last_text) {
                out.back() += "\n" + b.text();
            } else {
                out.push_back("T:" + b.text());
            }
            last_text = true;
        } else {
            out.push_back("I");
            last_text = false;
        }
    }
    return out;
}

}  // namespace

TEST(Block, RejectsBlankText) {
    EXPECT_THROW(Block::text("   \n\t"), InvalidBlock);
    EXPECT_THROW(Block::text(""), InvalidBlock);
    EXPECT_NO_THROW(Block::text(" x "));
}

TEST(Block, KindAccessorsEnforceKind) {
    Block t = Block::text("hi");
    Block i = Block::image(png_image(3));
    EXPECT_TRUE(t.is_text());
    EXPECT_TRUE(i.is_image());
    EXPECT_THROW(t.image(), InvalidBlock);
    EXPECT_THROW(i.text(), InvalidBlock);
}

TEST(Normalize, MergesAdjacentTextWithNewline) {
    InterleavedSequence s;
    s.blocks = {Block::text("a"), Block::text("b"), Block::image(png_image(1))};
    auto n = normalize_sequence(s);
    ASSERT_EQ(n.size(), 2u);
    EXPECT_EQ(n.blocks[0].text(), "a\nb");
    EXPECT_TRUE(n.blocks[1].is_image());
}

TEST(Normalize, AlternatingIsUnchanged) {
    auto s = layout("ITIT");
    EXPECT_EQ(normalize_sequence(s), s);
}

TEST(Normalize, EmptyStaysEmpty) { EXPECT_TRUE(normalize_sequence({}).empty()); }

TEST(NormalizeProperty, IdempotentAndMatchesOracle) {
    std::mt19937 rng(7);
    for (int iter = 0; iter < 500; ++iter) {
        auto s = random_sequence(rng, 8);
        auto once = normalize_sequence(s);
        EXPECT_EQ(normalize_sequence(once), once);
        auto sig = structure_signature(once).sequence;
        for (std::size_t i = 1; i < sig.size(); ++i) {
            EXPECT_FALSE(sig[i] == Modality::Text && sig[i - 1] == Modality::Text);
        }
        std::vector<std::string> got;
        for (const auto& b : once.blocks) got.push_back(b.is_text() ? "T:" + b.text() : "I");
        EXPECT_EQ(got, oracle_normalize(s));
    }
}

TEST(Signature, FourImageTextPairs) {
    EXPECT_EQ(structure_signature(layout("ITITITIT")).str(), "I,T,I,T,I,T,I,T");
    EXPECT_EQ(structure_signature(layout("T")).str(), "T");
    EXPECT_EQ(structure_signature({}).str(), "");
}

TEST(ContentToken, ParseAndPrint) {
    auto t = ContentToken::parse("<gen_img2>");
    EXPECT_EQ(t.scope, TokenScope::Gen);
    EXPECT_EQ(t.kind, Modality::Image);
    EXPECT_EQ(t.index, 2);
    EXPECT_EQ(t.str(), "<gen_img2>");
    EXPECT_EQ(ContentToken::parse("<query_text1>").str(), "<query_text1>");
    for (const char* bad : {"<gen_img0>", "<gen_image1>", "gen_img1", "<gen_img01>", "<answer_text1>", ""}) {
        EXPECT_THROW(ContentToken::parse(bad), InvalidToken) << bad;
        EXPECT_FALSE(ContentToken::try_parse(bad)) << bad;
    }
}

TEST(ContentTokenProperty, RoundTrip) {
    for (auto scope : {TokenScope::Query, TokenScope::Gen}) {
        for (auto kind : {Modality::Text, Modality::Image}) {
            for (int i = 1; i < 200; ++i) {
                ContentToken t{scope, kind, i};
                EXPECT_EQ(ContentToken::parse(t.str()), t);
            }
        }
    }
}

TEST(ResolveToken, PositionalLookup) {
    InterleavedSequence answer;
    auto i1 = png_image(10), i2 = png_image(20);
    answer.blocks = {Block::image(i1), Block::text("t1"), Block::image(i2), Block::text("t2")};
    InterleavedSequence query;
    query.blocks = {Block::text("q"), Block::image(png_image(30))};

    EXPECT_EQ(resolve_token(ContentToken::parse("<gen_img2>"), query, answer).image(), i2);
    EXPECT_EQ(resolve_token(ContentToken::parse("<query_text1>"), query, answer).text(), "q");
    EXPECT_THROW(resolve_token(ContentToken::parse("<gen_text3>"), query, answer), TokenOutOfRange);
}

TEST(ResolveTokenProperty, InjectivePerScopeAndKind) {
    std::mt19937 rng(11);
    for (int iter = 0; iter < 200; ++iter) {
        auto seq = random_sequence(rng, 10);
        auto tokens = tokenize_sequence(seq, TokenScope::Gen);
        ASSERT_EQ(tokens.size(), seq.size());
        std::set<const Block*> seen;
        for (const auto& t : tokens) {
            const Block& b = resolve_token(t, {}, seq);
            EXPECT_TRUE(seen.insert(&b).second);
            EXPECT_EQ(b.kind(), t.kind);
        }
    }
}

TEST(Document, RoundTripWithFilesAndInlineBytes) {
    TempDir dir;
    auto bytes = png::encode_flat(2, 2, {1, 2, 3});
    {
        std::ofstream f(dir.path / "a.png", std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    InterleavedSequence s;
    s.blocks = {Block::text("hello"), Block::image(ImageRef::from_file(dir.path / "a.png")),
                Block::image(png_image(9))};
    write_document(dir.path / "doc.json", s);
    auto back = read_document(dir.path / "doc.json");
    EXPECT_EQ(back, s);
    auto j = nlohmann::json::parse(util::read_file((dir.path / "doc.json").string()));
    EXPECT_EQ(j["blocks"][1]["path"], "a.png");
    EXPECT_EQ(j["blocks"][2]["media_type"], "image/png");
}

TEST(DocumentProperty, RandomRoundTrip) {
    std::mt19937 rng(3);
    for (int iter = 0; iter < 200; ++iter) {
        auto s = random_sequence(rng, 6);
        EXPECT_EQ(sequence_from_json(sequence_to_json(s)), s);
    }
}

TEST(Document, Errors) {
    using nlohmann::json;
    EXPECT_THROW(sequence_from_json(json::array()), DocumentError);
    EXPECT_THROW(sequence_from_json({{"blocks", {{{"type", "video"}}}}}), DocumentError);
    EXPECT_THROW(sequence_from_json({{"blocks", {{{"type", "text"}, {"content", "  "}}}}}), DocumentError);
    EXPECT_THROW(sequence_from_json({{"blocks", {{{"type", "image"}}}}}), DocumentError);
    auto lazy = sequence_from_json({{"blocks", {{{"type", "image"}, {"path", "/nonexistent/x.png"}}}}});
    EXPECT_THROW(lazy.blocks[0].image().bytes(), DocumentError);
}

TEST(ImageRef, SniffsPngDimensions) {
    auto img = ImageRef::from_bytes(png::encode_flat(7, 5, {0, 0, 0})).probed();
    EXPECT_EQ(img.media_type(), "image/png");
    EXPECT_EQ(img.width(), 7);
    EXPECT_EQ(img.height(), 5);
}

TEST(Png, TextChunksRoundTrip) {
    auto bytes = png::encode_flat(3, 3, {9, 9, 9}, {{"isg:step", "4"}, {"k", "v w"}});
    auto text = png::read_text_chunks(bytes);
    EXPECT_EQ(text.at("isg:step"), "4");
    EXPECT_EQ(text.at("k"), "v w");
}

TEST(Util, Sha256KnownVector) {
    EXPECT_EQ(util::sha256_hex(std::string_view("abc")),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(UtilProperty, Base64RoundTrip) {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> len(0, 64), byte(0, 255);
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<std::uint8_t> v(static_cast<std::size_t>(len(rng)));
        for (auto& b : v) b = static_cast<std::uint8_t>(byte(rng));
        EXPECT_EQ(util::base64_decode(util::base64_encode(v)), v);
    }
    EXPECT_THROW(util::base64_decode("@@@"), DocumentError);
}
