#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 utilities shared by the segmenter and tokenizers.
// Covers the character classes the pipeline needs (whitespace, punctuation,
// control, CJK, Latin accents) without pulling in ICU.

namespace reqa::unicode {

struct Codepoint {
    char32_t value;
    std::size_t offset;  // byte offset of the first byte
    std::size_t size;    // encoded byte length (1..4)
};

// Decodes the codepoint starting at `offset`. Invalid sequences decode as
// U+FFFD with size 1 so iteration always makes progress.
Codepoint decode(std::string_view text, std::size_t offset);

std::vector<Codepoint> decode_all(std::string_view text);

void append_utf8(std::string& out, char32_t cp);

bool is_whitespace(char32_t cp);
bool is_control(char32_t cp);

// ASCII punctuation and symbol ranges plus common Unicode punctuation
// (general punctuation block, CJK punctuation, fullwidth forms, guillemets).
bool is_punctuation(char32_t cp);

// CJK unified ideograph blocks.
bool is_cjk(char32_t cp);

// Folds Latin-1 Supplement / Latin Extended-A letters to lowercase with
// accents stripped (É -> e, Š -> s, Æ -> æ). Returns 0 when the codepoint
// has no mapping.
char32_t latin_fold(char32_t cp);

// Combining diacritical marks (dropped during normalization).
bool is_combining_mark(char32_t cp);

}  // namespace reqa::unicode
