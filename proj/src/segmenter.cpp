#include "reqa/segmenter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "reqa/error.hpp"
#include "reqa/unicode.hpp"

namespace reqa {

namespace {

using unicode::Codepoint;

bool is_terminal(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?'; }

bool is_closer(char32_t cp) {
    switch (cp) {
        case U'"': case U'\'': case U')': case U']': case U'}':
        case 0x201D:  // right double quotation mark
        case 0x2019:  // right single quotation mark
        case 0x00BB:  // right guillemet
        case 0x203A:  // right single guillemet
            return true;
        default:
            return false;
    }
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

const std::vector<std::string>& SentenceSplitter::default_abbreviations() {
    static const std::vector<std::string> kDefaults = {
        "Mr.",   "Mrs.",  "Ms.",   "Dr.",   "Prof.", "St.",   "Mt.",  "Gen.",
        "Col.",  "Sgt.",  "Capt.", "Lt.",   "Rev.",  "Hon.",  "Sen.", "Rep.",
        "Gov.",  "Pres.", "vs.",   "etc.",  "e.g.",  "i.e.",  "cf.",  "Fig.",
        "No.",   "Vol.",  "Ch.",   "pp.",   "Jan.",  "Feb.",  "Mar.", "Apr.",
        "Jun.",  "Jul.",  "Aug.",  "Sep.",  "Sept.", "Oct.",  "Nov.", "Dec.",
        "U.S.",  "U.K.",  "Inc.",  "Ltd.",  "Co.",   "Corp.", "Jr.",  "Sr.",
        "approx.",
    };
    return kDefaults;
}

SentenceSplitter::SentenceSplitter() : SentenceSplitter(default_abbreviations()) {}

SentenceSplitter::SentenceSplitter(const std::vector<std::string>& abbreviations) {
    for (const auto& a : abbreviations) {
        if (a.empty()) continue;
        std::string key = ascii_lower(a);
        if (key.back() != '.') key.push_back('.');
        abbreviations_.insert(std::move(key));
    }
}

SentenceSplitter SentenceSplitter::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open abbreviation list: " + path);
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        entries.push_back(line);
    }
    return SentenceSplitter(entries);
}

bool SentenceSplitter::is_abbreviation(std::string_view token) const {
    return abbreviations_.count(ascii_lower(token)) > 0;
}

std::vector<SentenceSpan> SentenceSplitter::split(std::string_view context) const {
    const std::vector<Codepoint> cps = unicode::decode_all(context);
    const std::size_t n = cps.size();
    std::vector<SentenceSpan> spans;

    auto is_ws = [&](std::size_t i) { return unicode::is_whitespace(cps[i].value); };

    // Emits the trimmed span covering codepoints [first, last] inclusive.
    auto emit = [&](std::size_t first, std::size_t last) {
        while (first <= last && is_ws(first)) ++first;
        while (last > first && is_ws(last)) --last;
        if (first > last || is_ws(first)) return;
        spans.push_back({cps[first].offset, cps[last].offset + cps[last].size});
    };

    // True when the whitespace run starting at i holds two or more newlines.
    auto paragraph_break = [&](std::size_t i) {
        int newlines = 0;
        for (std::size_t j = i; j < n && is_ws(j); ++j) {
            if (cps[j].value == U'\n' && ++newlines >= 2) return true;
        }
        return false;
    };

    // The word ending at codepoint index `dot` (inclusive), with any leading
    // opening punctuation trimmed.
    auto word_ending_at = [&](std::size_t dot) {
        std::size_t k = dot;
        while (k > 0 && !is_ws(k - 1)) --k;
        while (k < dot && unicode::is_punctuation(cps[k].value) && cps[k].value != U'.') ++k;
        const std::size_t b = cps[k].offset;
        const std::size_t e = cps[dot].offset + cps[dot].size;
        return context.substr(b, e - b);
    };

    std::size_t start = 0;
    while (start < n && is_ws(start)) ++start;
    std::size_t i = start;
    while (i < n) {
        if (is_ws(i) && paragraph_break(i)) {
            if (i > start) emit(start, i - 1);
            while (i < n && is_ws(i)) ++i;
            start = i;
            continue;
        }
        if (is_terminal(cps[i].value)) {
            std::size_t j = i + 1;
            while (j < n && (is_terminal(cps[j].value) || is_closer(cps[j].value))) ++j;
            const bool at_break = j >= n || is_ws(j);
            if (at_break) {
                const bool suppressed =
                    cps[i].value == U'.' && is_abbreviation(word_ending_at(i));
                if (!suppressed) {
                    emit(start, j - 1);
                    i = j;
                    while (i < n && is_ws(i) && !paragraph_break(i)) ++i;
                    start = i;
                    continue;
                }
            }
            i = j;
            continue;
        }
        ++i;
    }
    if (start < n) emit(start, n - 1);
    return spans;
}

std::optional<std::size_t> locate_span(const std::vector<SentenceSpan>& sentences,
                                       std::size_t begin, std::size_t end,
                                       std::size_t context_length) {
    if (begin > end || end > context_length)
        throw OutOfBounds("span [" + std::to_string(begin) + "," + std::to_string(end) +
                          ") exceeds context of length " + std::to_string(context_length));
    for (std::size_t idx = 0; idx < sentences.size(); ++idx) {
        if (sentences[idx].contains(begin, end)) return idx;
    }
    return std::nullopt;
}

}  // namespace reqa
