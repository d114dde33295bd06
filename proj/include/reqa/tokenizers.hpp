#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reqa {

using TokenId = std::int32_t;

// Fixed subword vocabulary with dense ids 0..V-1, a continuation prefix
// convention ("##") and a mandatory unknown token.
class Vocab {
public:
    Vocab(std::vector<std::string> tokens, std::string unknown_token = "[UNK]",
          std::string continuation_prefix = "##");

    // One token per line, line number = id. Interoperable with published
    // WordPiece vocabularies.
    static Vocab from_file(const std::string& path, std::string unknown_token = "[UNK]",
                           std::string continuation_prefix = "##");

    std::size_t size() const { return tokens_.size(); }
    std::optional<TokenId> id_of(std::string_view token) const;
    const std::string& token(TokenId id) const;
    TokenId unknown_id() const { return unknown_id_; }
    const std::string& unknown_token() const { return tokens_[unknown_id_]; }
    const std::string& continuation_prefix() const { return continuation_prefix_; }

    // FNV-1a over the token list; embedded in index and checkpoint files.
    std::uint64_t fingerprint() const { return fingerprint_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
    std::string continuation_prefix_;
    TokenId unknown_id_ = -1;
    std::uint64_t fingerprint_ = 0;
};

struct TokenSeq {
    std::vector<std::string> pieces;
    std::vector<TokenId> ids;  // parallel to pieces

    std::size_t size() const { return pieces.size(); }
    bool empty() const { return pieces.empty(); }
};

// Unnormalized word tokenization: splits on whitespace, breaks punctuation
// into standalone tokens, preserves case.
std::vector<std::string> word_tokenize(std::string_view text);

// Lowercases, strips Latin accents, removes control characters, pads CJK
// characters with spaces.
std::string normalize(std::string_view text);

// Greedy longest-match-first WordPiece segmentation per whitespace/punct-split
// word; a word with no match at any position, or longer than 200 characters,
// becomes the unknown token. Normalization is part of this regime but can be
// toggled off.
TokenSeq wordpiece_tokenize(std::string_view text, const Vocab& vocab,
                            bool normalize_first = true);

// Strips continuation prefixes and concatenates; inverse of segmentation for
// words that produced no unknown token.
std::string wordpiece_detokenize(const std::vector<std::string>& pieces,
                                 const std::string& continuation_prefix = "##");

// Tokenization regime selector shared by the BM25 engine and the CLI
// (--tokenizer {word,wpm}).
class Tokenizer {
public:
    static Tokenizer word();
    static Tokenizer wordpiece(std::shared_ptr<const Vocab> vocab, bool normalize = true);

    std::vector<std::string> tokenize(std::string_view text) const;

    bool is_wordpiece() const { return vocab_ != nullptr; }
    const std::shared_ptr<const Vocab>& vocab() const { return vocab_; }

    // "word" or "wpm[-nonorm]:<vocab fingerprint>"; embedded in index files.
    std::string fingerprint() const;

private:
    Tokenizer() = default;
    std::shared_ptr<const Vocab> vocab_;
    bool normalize_ = true;
};

}  // namespace reqa
