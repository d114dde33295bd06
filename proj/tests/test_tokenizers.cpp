#include <doctest.h>

#include <random>
#include <set>

#include "reqa/error.hpp"
#include "reqa/tokenizers.hpp"

using namespace reqa;

namespace {

Vocab toy_vocab(std::vector<std::string> extra) {
    std::vector<std::string> tokens = {"[UNK]"};
    tokens.insert(tokens.end(), extra.begin(), extra.end());
    return Vocab(std::move(tokens));
}

// Independent WordPiece oracle: at each position try every vocab entry as a
// prefix and keep the longest match.
std::vector<std::string> oracle_wordpiece_word(const std::string& word, const Vocab& vocab) {
    std::vector<std::string> pieces;
    std::size_t start = 0;
    while (start < word.size()) {
        std::string best;
        std::size_t best_len = 0;
        for (std::size_t len = 1; start + len <= word.size(); ++len) {
            std::string candidate =
                (start > 0 ? vocab.continuation_prefix() : "") + word.substr(start, len);
            if (vocab.id_of(candidate) && len > best_len) {
                best = candidate;
                best_len = len;
            }
        }
        if (best_len == 0) return {vocab.unknown_token()};
        pieces.push_back(best);
        start += best_len;
    }
    return pieces;
}

}  // namespace

TEST_CASE("word_tokenize splits whitespace and punctuation, preserving case") {
    CHECK(word_tokenize("Salton Sea, 1523.") ==
          std::vector<std::string>{"Salton", "Sea", ",", "1523", "."});
    CHECK(word_tokenize("don't") == std::vector<std::string>{"don", "'", "t"});
    CHECK(word_tokenize("").empty());
    CHECK(word_tokenize("  \t\n ").empty());
    CHECK(word_tokenize("A-B") == std::vector<std::string>{"A", "-", "B"});
}

TEST_CASE("word_tokenize never alters character case") {
    std::mt19937_64 rng(11);
    const std::string alphabet = "aAbBcC zZ.,!?-'\"0189";
    for (int round = 0; round < 500; ++round) {
        std::string text;
        const std::size_t len = rng() % 40;
        for (std::size_t i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
        std::string glued;
        for (const auto& tok : word_tokenize(text)) glued += tok;
        std::string no_ws;
        for (char c : text)
            if (c != ' ' && c != '\t' && c != '\n') no_ws += c;
        CHECK(glued == no_ws);
    }
}

TEST_CASE("normalize lowercases, strips accents and pads CJK") {
    CHECK(normalize("Résumé") == "resume");
    CHECK(normalize("ABC") == "abc");
    CHECK(normalize("") == "");
    CHECK(normalize("Crème brûlée") == "creme brulee");
    CHECK(normalize("naïve Škoda") == "naive skoda");
    CHECK(normalize("a\x01m") == "am");       // control characters removed
    CHECK(normalize("tab\tsep") == "tab sep");  // whitespace folded to spaces
    CHECK(normalize("中文ab") == " 中  文 ab");
    // Combining mark form: e + U+0301.
    CHECK(normalize("cafe\xcc\x81") == "cafe");
}

TEST_CASE("wordpiece segments by greedy longest match") {
    const Vocab vocab = toy_vocab({"un", "##aff", "##able", "aff"});
    const TokenSeq seq = wordpiece_tokenize("unaffable", vocab);
    CHECK(seq.pieces == std::vector<std::string>{"un", "##aff", "##able"});

    const Vocab tiny = toy_vocab({"a"});
    CHECK(wordpiece_tokenize("xyz", tiny).pieces == std::vector<std::string>{"[UNK]"});

    const Vocab ab = toy_vocab({"ab", "a", "##b"});
    CHECK(wordpiece_tokenize("ab", ab).pieces == std::vector<std::string>{"ab"});
}

TEST_CASE("wordpiece treats oversized words as unknown") {
    const Vocab vocab = toy_vocab({"a", "##a"});
    const std::string ok(200, 'a');
    CHECK(wordpiece_tokenize(ok, vocab, false).pieces.size() == 200);
    const std::string too_long(201, 'a');
    CHECK(wordpiece_tokenize(too_long, vocab, false).pieces ==
          std::vector<std::string>{"[UNK]"});
}

TEST_CASE("wordpiece normalization is part of the regime but can be toggled") {
    const Vocab vocab = toy_vocab({"resume", "Resume"});
    CHECK(wordpiece_tokenize("Résumé", vocab).pieces == std::vector<std::string>{"resume"});
    CHECK(wordpiece_tokenize("Resume", vocab, false).pieces ==
          std::vector<std::string>{"Resume"});
}

TEST_CASE("vocab requires the unknown token and unique entries") {
    CHECK_THROWS_AS(Vocab({}), EmptyVocab);
    CHECK_THROWS_AS(Vocab({"a", "b"}), EmptyVocab);  // missing [UNK]
    CHECK_THROWS_AS(Vocab({"[UNK]", "a", "a"}), FormatError);
    const Vocab v({"x", "[UNK]"});
    CHECK(v.unknown_id() == 1);
    CHECK(v.id_of("x") == 0);
    CHECK_FALSE(v.id_of("y").has_value());
}

TEST_CASE("wordpiece agrees with the brute-force longest-prefix oracle") {
    std::mt19937_64 rng(17);
    const std::string alphabet = "abcde";
    for (int round = 0; round < 300; ++round) {
        // Random toy vocab over a small alphabet.
        std::set<std::string> entries;
        const std::size_t vocab_size = 3 + rng() % 20;
        while (entries.size() < vocab_size) {
            std::string tok;
            const std::size_t len = 1 + rng() % 4;
            for (std::size_t i = 0; i < len; ++i) tok += alphabet[rng() % alphabet.size()];
            if (rng() % 2) tok = "##" + tok;
            entries.insert(tok);
        }
        std::vector<std::string> tokens(entries.begin(), entries.end());
        tokens.push_back("[UNK]");
        const Vocab vocab(std::move(tokens));

        for (int w = 0; w < 20; ++w) {
            std::string word;
            const std::size_t len = 1 + rng() % 10;
            for (std::size_t i = 0; i < len; ++i) word += alphabet[rng() % alphabet.size()];
            const auto got = wordpiece_tokenize(word, vocab, false).pieces;
            const auto expected = oracle_wordpiece_word(word, vocab);
            CHECK(got == expected);
        }
    }
}

TEST_CASE("detokenization inverts segmentation when no unknown was emitted") {
    std::mt19937_64 rng(19);
    const std::string alphabet = "abc";
    for (int round = 0; round < 200; ++round) {
        std::set<std::string> entries = {"a", "b", "c", "##a", "##b", "##c"};
        for (int extra = 0; extra < 6; ++extra) {
            std::string tok;
            const std::size_t len = 2 + rng() % 3;
            for (std::size_t i = 0; i < len; ++i) tok += alphabet[rng() % alphabet.size()];
            entries.insert(rng() % 2 ? "##" + tok : tok);
        }
        std::vector<std::string> tokens(entries.begin(), entries.end());
        tokens.push_back("[UNK]");
        const Vocab vocab(std::move(tokens));

        std::string word;
        const std::size_t len = 1 + rng() % 12;
        for (std::size_t i = 0; i < len; ++i) word += alphabet[rng() % alphabet.size()];
        const auto seq = wordpiece_tokenize(word, vocab, false);
        bool has_unknown = false;
        for (TokenId id : seq.ids) has_unknown |= (id == vocab.unknown_id());
        if (!has_unknown) CHECK(wordpiece_detokenize(seq.pieces) == word);
    }
}

TEST_CASE("vocab files map line numbers to ids") {
    const Vocab v =
        Vocab::from_file(std::string(REQA_TEST_DATA_DIR) + "/mini_vocab.txt");
    CHECK(v.id_of("[UNK]").has_value());
    CHECK(v.size() > 10);
    // Line order defines the id.
    CHECK(v.token(0) == "[PAD]");
}

TEST_CASE("tokenizer regimes expose distinct fingerprints") {
    const auto vocab = std::make_shared<const Vocab>(toy_vocab({"a"}));
    CHECK(Tokenizer::word().fingerprint() == "word");
    const auto wpm = Tokenizer::wordpiece(vocab);
    const auto wpm_nonorm = Tokenizer::wordpiece(vocab, false);
    CHECK(wpm.fingerprint() != wpm_nonorm.fingerprint());
    CHECK(wpm.fingerprint().rfind("wpm:", 0) == 0);
}
