#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace reqa {

// Half-open byte range [begin, end) into a context string. Spans produced by
// the splitter are trimmed to non-whitespace endpoints, non-overlapping and
// sorted, and cover every non-whitespace byte of the context.
struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const SentenceSpan&) const = default;
    bool contains(std::size_t b, std::size_t e) const { return begin <= b && e <= end; }
};

// Deterministic rule-based sentence boundary detection. A boundary occurs
// after terminal punctuation (. ! ?) optionally followed by closing quotes or
// brackets, then whitespace; an abbreviation list suppresses splits after
// tokens like "Dr." or "e.g.". Two consecutive newlines force a boundary,
// a single newline does not.
class SentenceSplitter {
public:
    // Uses the built-in abbreviation list (same entries as the shipped
    // abbreviations.txt data file).
    SentenceSplitter();

    // Entries may be any case; matching is ASCII case-insensitive. A trailing
    // period is implied when missing.
    explicit SentenceSplitter(const std::vector<std::string>& abbreviations);

    // Loads one abbreviation token per line; blank lines and '#' comments
    // are skipped.
    static SentenceSplitter from_file(const std::string& path);

    static const std::vector<std::string>& default_abbreviations();

    std::vector<SentenceSpan> split(std::string_view context) const;

    bool is_abbreviation(std::string_view token) const;

private:
    std::unordered_set<std::string> abbreviations_;  // lowercase, trailing '.'
};

// Returns the index of the unique sentence wholly containing [begin, end), or
// nullopt when the span crosses a sentence boundary (the multi-sentence
// marker). Throws OutOfBounds when the span exceeds the context length.
std::optional<std::size_t> locate_span(const std::vector<SentenceSpan>& sentences,
                                       std::size_t begin, std::size_t end,
                                       std::size_t context_length);

}  // namespace reqa
