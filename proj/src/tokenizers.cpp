#include "reqa/tokenizers.hpp"

#include <fstream>

#include "reqa/error.hpp"
#include "reqa/unicode.hpp"

namespace reqa {

namespace {

constexpr std::size_t kMaxWordpieceChars = 200;

std::uint64_t fnv1a(std::uint64_t h, std::string_view data) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens, std::string unknown_token,
             std::string continuation_prefix)
    : tokens_(std::move(tokens)), continuation_prefix_(std::move(continuation_prefix)) {
    if (tokens_.empty()) throw EmptyVocab("vocabulary has no tokens");
    fingerprint_ = 14695981039346656037ULL;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
            throw FormatError("duplicate vocab token at line " + std::to_string(i + 1) + ": " +
                              tokens_[i]);
        fingerprint_ = fnv1a(fnv1a(fingerprint_, tokens_[i]), "\n");
    }
    auto it = ids_.find(unknown_token);
    if (it == ids_.end())
        throw EmptyVocab("vocabulary is missing the unknown token " + unknown_token);
    unknown_id_ = it->second;
}

Vocab Vocab::from_file(const std::string& path, std::string unknown_token,
                       std::string continuation_prefix) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocab file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    // A trailing newline yields one phantom empty line; drop it.
    if (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
    return Vocab(std::move(tokens), std::move(unknown_token), std::move(continuation_prefix));
}

std::optional<TokenId> Vocab::id_of(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocab::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw OutOfBounds("token id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> word_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto cp = unicode::decode(text, i);
        if (unicode::is_whitespace(cp.value)) {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
        } else if (unicode::is_punctuation(cp.value)) {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
            tokens.emplace_back(text.substr(cp.offset, cp.size));
        } else {
            current.append(text.substr(cp.offset, cp.size));
        }
        i += cp.size;
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto cp = unicode::decode(text, i);
        i += cp.size;
        char32_t v = cp.value;
        if (unicode::is_control(v) || unicode::is_combining_mark(v) || v == 0xFFFD) continue;
        if (unicode::is_whitespace(v)) {
            out.push_back(' ');
            continue;
        }
        if (unicode::is_cjk(v)) {
            out.push_back(' ');
            unicode::append_utf8(out, v);
            out.push_back(' ');
            continue;
        }
        if (v >= U'A' && v <= U'Z') {
            out.push_back(char(v + 32));
            continue;
        }
        if (char32_t folded = unicode::latin_fold(v)) {
            unicode::append_utf8(out, folded);
            continue;
        }
        unicode::append_utf8(out, v);
    }
    return out;
}

namespace {

// Greedy longest-match segmentation of one word. Returns false when some
// position has no vocab match (caller substitutes the unknown token).
bool greedy_segment(std::string_view word, const Vocab& vocab, TokenSeq& out) {
    const auto cps = unicode::decode_all(word);
    std::vector<std::string> pieces;
    std::vector<TokenId> ids;
    std::size_t start = 0;
    while (start < cps.size()) {
        std::size_t end = cps.size();
        std::optional<TokenId> match;
        std::string piece;
        while (end > start) {
            const std::size_t b = cps[start].offset;
            const std::size_t e = cps[end - 1].offset + cps[end - 1].size;
            piece.assign(start > 0 ? vocab.continuation_prefix() : "");
            piece.append(word.substr(b, e - b));
            if ((match = vocab.id_of(piece))) break;
            --end;
        }
        if (!match) return false;
        pieces.push_back(std::move(piece));
        ids.push_back(*match);
        start = end;
    }
    out.pieces.insert(out.pieces.end(), pieces.begin(), pieces.end());
    out.ids.insert(out.ids.end(), ids.begin(), ids.end());
    return true;
}

}  // namespace

TokenSeq wordpiece_tokenize(std::string_view text, const Vocab& vocab, bool normalize_first) {
    std::string normalized;
    if (normalize_first) {
        normalized = normalize(text);
        text = normalized;
    }
    TokenSeq out;
    for (const std::string& word : word_tokenize(text)) {
        const std::size_t n_chars = unicode::decode_all(word).size();
        if (n_chars > kMaxWordpieceChars || !greedy_segment(word, vocab, out)) {
            out.pieces.push_back(vocab.unknown_token());
            out.ids.push_back(vocab.unknown_id());
        }
    }
    return out;
}

std::string wordpiece_detokenize(const std::vector<std::string>& pieces,
                                 const std::string& continuation_prefix) {
    std::string out;
    for (const auto& p : pieces) {
        if (p.compare(0, continuation_prefix.size(), continuation_prefix) == 0)
            out.append(p.substr(continuation_prefix.size()));
        else
            out.append(p);
    }
    return out;
}

Tokenizer Tokenizer::word() { return Tokenizer{}; }

Tokenizer Tokenizer::wordpiece(std::shared_ptr<const Vocab> vocab, bool normalize) {
    if (!vocab) throw EmptyVocab("wordpiece tokenizer requires a vocabulary");
    Tokenizer t;
    t.vocab_ = std::move(vocab);
    t.normalize_ = normalize;
    return t;
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    if (!vocab_) return word_tokenize(text);
    return wordpiece_tokenize(text, *vocab_, normalize_).pieces;
}

std::string Tokenizer::fingerprint() const {
    if (!vocab_) return "word";
    std::string tag = normalize_ ? "wpm" : "wpm-nonorm";
    return tag + ":" + std::to_string(vocab_->fingerprint());
}

}  // namespace reqa
