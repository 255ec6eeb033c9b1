#include "tk/text.hpp"

#include "tk/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace tk;

TEST_CASE("tokenize lowercases and splits punctuation") {
    const auto tokens = tokenize("The androgen receptor (AR),");
    const std::vector<std::string> expected{"the", "androgen", "receptor", "(", "ar", ")", ","};
    CHECK(tokens == expected);
}

TEST_CASE("tokenize edge cases") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("   \t\n ").empty());
    CHECK(tokenize("do goldfish grow") == std::vector<std::string>{"do", "goldfish", "grow"});
    // unicode whitespace (NBSP) splits too
    CHECK(tokenize("a\xc2\xa0貓") == std::vector<std::string>{"a", "貓"});
    CHECK(tokenize("b-c") == std::vector<std::string>{"b", "-", "c"});
}

TEST_CASE("build_vocabulary honors the occurrence threshold") {
    // "five" appears 5 times, "four" 4 times
    const std::vector<std::string> docs{"five five five", "five five four four", "four four"};
    const Vocabulary vocab = Vocabulary::build(docs, 5);
    CHECK(vocab.contains("five"));
    CHECK(!vocab.contains("four"));
    CHECK(vocab.id("four") == Vocabulary::kOovId);
    CHECK(vocab.id("five") >= 2);
    CHECK(vocab.min_occurrence() == 5);
}

TEST_CASE("build_vocabulary with threshold 1 keeps every term") {
    const Vocabulary vocab = Vocabulary::build({"a b", "c"}, 1);
    CHECK(vocab.contains("a"));
    CHECK(vocab.contains("b"));
    CHECK(vocab.contains("c"));
    CHECK(vocab.size() == 5); // 3 terms + pad + oov
}

TEST_CASE("build_vocabulary on an empty corpus keeps only reserved ids") {
    const Vocabulary vocab = Vocabulary::build(std::vector<std::string>{}, 3);
    CHECK(vocab.size() == 2);
    CHECK(vocab.id("anything") == Vocabulary::kOovId);
}

TEST_CASE("build_vocabulary membership is order-insensitive") {
    std::vector<std::string> docs{"x x y", "y z z z", "x w", "z y w"};
    const Vocabulary first = Vocabulary::build(docs, 2);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        for (std::size_t i = docs.size(); i > 1; --i) std::swap(docs[i - 1], docs[rng() % i]);
        const Vocabulary shuffled = Vocabulary::build(docs, 2);
        auto a = first.retained_terms();
        auto b = shuffled.retained_terms();
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
        // frequency-then-lexicographic id assignment is itself deterministic
        CHECK(first.retained_terms() == shuffled.retained_terms());
    }
}

TEST_CASE("load_embeddings takes file rows exactly and seeds the rest") {
    testutil::TempDir dir;
    const std::string path = dir.file("vectors.txt");
    testutil::write_file(path, "alpha 0.25 -0.5 1\nextra 9 9 9\n");

    const Vocabulary vocab = Vocabulary::build({"alpha alpha missing missing"}, 2);
    std::mt19937_64 rng(99);
    const EmbeddingTable table = load_embeddings(path, vocab, 3, rng);

    CHECK(table.vectors.rows() == vocab.size());
    // padding row stays zero
    for (std::size_t c = 0; c < 3; ++c) CHECK(table.vectors.at(0, c) == 0.0);
    const std::uint32_t alpha_id = vocab.id("alpha");
    CHECK(table.vectors.at(alpha_id, 0) == 0.25);
    CHECK(table.vectors.at(alpha_id, 1) == -0.5);
    CHECK(table.vectors.at(alpha_id, 2) == 1.0);

    // rows absent from the file reproduce the seeded draw; draws go in row
    // order: oov row 1 first, then each missing vocabulary row
    std::mt19937_64 replay(99);
    std::vector<double> expected;
    for (std::size_t row = 1; row < vocab.size(); ++row) {
        if (row == alpha_id) continue;
        for (std::size_t c = 0; c < 3; ++c) expected.push_back(uniform_draw(replay, -0.05, 0.05));
    }
    std::size_t at = 0;
    for (std::size_t row = 1; row < vocab.size(); ++row) {
        if (row == alpha_id) continue;
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(table.vectors.at(row, c) == expected[at]);
            ++at;
        }
        CHECK(std::fabs(table.vectors.at(row, 0)) <= 0.05);
    }
}

TEST_CASE("load_embeddings rejects malformed lines with the line number") {
    testutil::TempDir dir;
    const std::string path = dir.file("bad.txt");
    testutil::write_file(path, "good 1 2 3\nshort 1 2\n");
    const Vocabulary vocab = Vocabulary::build({"good good"}, 1);
    std::mt19937_64 rng(1);
    CHECK_THROWS_WITH_AS(load_embeddings(path, vocab, 3, rng),
                         doctest::Contains(":2"), std::runtime_error);
}

TEST_CASE("encode_sequence caps and counts") {
    const Vocabulary vocab = Vocabulary::build({"w w w w"}, 1);
    std::string long_text;
    for (int i = 0; i < 250; ++i) long_text += "w ";
    const TokenSequence capped = encode_sequence(long_text, vocab, 200);
    CHECK(capped.ids.size() == 200);
    CHECK(capped.true_length == 200);

    const TokenSequence fits = encode_sequence("w w w w w", vocab, 30);
    CHECK(fits.true_length == 5);

    const TokenSequence wide = encode_sequence(long_text, vocab, 800);
    CHECK(wide.true_length == 250);

    std::string very_long;
    for (int i = 0; i < 850; ++i) very_long += "w ";
    CHECK(encode_sequence(very_long, vocab, 800).true_length == 800);

    CHECK_THROWS_AS(encode_sequence("   ", vocab, 30), EmptyTextError);

    // unknown terms map to the OOV id
    const TokenSequence oov = encode_sequence("w novel", vocab, 30);
    CHECK(oov.ids[1] == Vocabulary::kOovId);
}

TEST_CASE("encode_sequence true_length is stable under re-encoding") {
    const Vocabulary vocab = Vocabulary::build({"a b c d e f g h"}, 1);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::string text;
        const std::size_t words = 1 + rng() % 12;
        for (std::size_t i = 0; i < words; ++i) {
            text += std::string(1, static_cast<char>('a' + rng() % 8)) + " ";
        }
        const std::size_t cap = 1 + rng() % 10;
        const TokenSequence once = encode_sequence(text, vocab, cap);
        std::string rebuilt;
        for (std::size_t i = 0; i < once.true_length; ++i) {
            rebuilt += vocab.term(once.ids[i]) + " ";
        }
        const TokenSequence twice = encode_sequence(rebuilt, vocab, cap);
        CHECK(twice.true_length == once.true_length);
    }
}

TEST_CASE("pad_sequence appends padding without touching true_length") {
    const Vocabulary vocab = Vocabulary::build({"a a"}, 1);
    TokenSequence seq = pad_sequence(encode_sequence("a a a", vocab, 10), 8);
    CHECK(seq.ids.size() == 8);
    CHECK(seq.true_length == 3);
    for (std::size_t i = 3; i < 8; ++i) CHECK(seq.ids[i] == Vocabulary::kPadId);
}

TEST_CASE("tsv loaders") {
    testutil::TempDir dir;
    const std::string pairs_path = dir.file("collection.tsv");
    testutil::write_file(pairs_path, "d1\thello world\nd2\tsecond doc\n");
    const auto pairs = load_tsv_pairs(pairs_path);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].first == "d1");
    CHECK(pairs[1].second == "second doc");

    const std::string triples_path = dir.file("triples.tsv");
    testutil::write_file(triples_path, "q text\tpositive text\tnegative text\n");
    const auto triples = load_triples_tsv(triples_path);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0].query == "q text");
    CHECK(triples[0].positive == "positive text");
    CHECK(triples[0].negative == "negative text");

    const std::string bad = dir.file("bad.tsv");
    testutil::write_file(bad, "only-one-field\n");
    CHECK_THROWS_WITH_AS(load_tsv_pairs(bad), doctest::Contains(":1"), std::runtime_error);
}
