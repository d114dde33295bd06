#include "reqa/unicode.hpp"

#include <array>

namespace reqa::unicode {

Codepoint decode(std::string_view text, std::size_t offset) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    const std::size_t n = text.size();
    const unsigned char b0 = bytes[offset];

    auto invalid = [&]() { return Codepoint{0xFFFD, offset, 1}; };

    if (b0 < 0x80) return {b0, offset, 1};
    if ((b0 & 0xE0) == 0xC0) {
        if (offset + 1 >= n || (bytes[offset + 1] & 0xC0) != 0x80) return invalid();
        char32_t cp = (char32_t(b0 & 0x1F) << 6) | (bytes[offset + 1] & 0x3F);
        if (cp < 0x80) return invalid();  // overlong
        return {cp, offset, 2};
    }
    if ((b0 & 0xF0) == 0xE0) {
        if (offset + 2 >= n || (bytes[offset + 1] & 0xC0) != 0x80 ||
            (bytes[offset + 2] & 0xC0) != 0x80)
            return invalid();
        char32_t cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(bytes[offset + 1] & 0x3F) << 6) |
                      (bytes[offset + 2] & 0x3F);
        if (cp < 0x800) return invalid();
        return {cp, offset, 3};
    }
    if ((b0 & 0xF8) == 0xF0) {
        if (offset + 3 >= n || (bytes[offset + 1] & 0xC0) != 0x80 ||
            (bytes[offset + 2] & 0xC0) != 0x80 || (bytes[offset + 3] & 0xC0) != 0x80)
            return invalid();
        char32_t cp = (char32_t(b0 & 0x07) << 18) | (char32_t(bytes[offset + 1] & 0x3F) << 12) |
                      (char32_t(bytes[offset + 2] & 0x3F) << 6) | (bytes[offset + 3] & 0x3F);
        if (cp < 0x10000 || cp > 0x10FFFF) return invalid();
        return {cp, offset, 4};
    }
    return invalid();
}

std::vector<Codepoint> decode_all(std::string_view text) {
    std::vector<Codepoint> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        Codepoint cp = decode(text, i);
        out.push_back(cp);
        i += cp.size;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(char(cp));
    } else if (cp < 0x800) {
        out.push_back(char(0xC0 | (cp >> 6)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(char(0xE0 | (cp >> 12)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(char(0xF0 | (cp >> 18)));
        out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    }
}

bool is_whitespace(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_control(char32_t cp) {
    if (cp == U'\t' || cp == U'\n' || cp == U'\r') return false;
    if (cp < 0x20 || (cp >= 0x7F && cp <= 0x9F)) return true;
    // Common format characters: soft hyphen, zero-width and bidi marks, BOM.
    if (cp == 0x00AD || (cp >= 0x200B && cp <= 0x200F) || (cp >= 0x202A && cp <= 0x202E) ||
        cp == 0x2060 || cp == 0xFEFF)
        return true;
    return false;
}

bool is_punctuation(char32_t cp) {
    // ASCII: everything that is neither alphanumeric nor whitespace.
    if ((cp >= 33 && cp <= 47) || (cp >= 58 && cp <= 64) || (cp >= 91 && cp <= 96) ||
        (cp >= 123 && cp <= 126))
        return true;
    switch (cp) {
        case 0x00A1: case 0x00A7: case 0x00AB: case 0x00B6:
        case 0x00B7: case 0x00BB: case 0x00BF: case 0x3030:
            return true;
        default:
            break;
    }
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if ((cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
        (cp >= 0x3014 && cp <= 0x301F))
        return true;
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65))
        return true;
    return false;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2A6DF) ||
           (cp >= 0x2A700 && cp <= 0x2B73F) || (cp >= 0x2B740 && cp <= 0x2B81F) ||
           (cp >= 0x2B820 && cp <= 0x2CEAF) || (cp >= 0x2F800 && cp <= 0x2FA1F);
}

bool is_combining_mark(char32_t cp) {
    return cp >= 0x0300 && cp <= 0x036F;
}

namespace {

struct FoldRange {
    char32_t lo;
    char32_t hi;
    char32_t base;
};

constexpr std::array<FoldRange, 36> kFoldRanges = {{
    {0x00C0, 0x00C5, U'a'}, {0x00C7, 0x00C7, U'c'}, {0x00C8, 0x00CB, U'e'},
    {0x00CC, 0x00CF, U'i'}, {0x00D1, 0x00D1, U'n'}, {0x00D2, 0x00D6, U'o'},
    {0x00D9, 0x00DC, U'u'}, {0x00DD, 0x00DD, U'y'}, {0x00E0, 0x00E5, U'a'},
    {0x00E7, 0x00E7, U'c'}, {0x00E8, 0x00EB, U'e'}, {0x00EC, 0x00EF, U'i'},
    {0x00F1, 0x00F1, U'n'}, {0x00F2, 0x00F6, U'o'}, {0x00F9, 0x00FC, U'u'},
    {0x00FD, 0x00FD, U'y'}, {0x00FF, 0x00FF, U'y'}, {0x0100, 0x0105, U'a'},
    {0x0106, 0x010D, U'c'}, {0x010E, 0x0111, U'd'}, {0x0112, 0x011B, U'e'},
    {0x011C, 0x0123, U'g'}, {0x0124, 0x0127, U'h'}, {0x0128, 0x0131, U'i'},
    {0x0134, 0x0135, U'j'}, {0x0136, 0x0138, U'k'}, {0x0139, 0x0142, U'l'},
    {0x0143, 0x014B, U'n'}, {0x014C, 0x0151, U'o'}, {0x0154, 0x0159, U'r'},
    {0x015A, 0x0161, U's'}, {0x0162, 0x0167, U't'}, {0x0168, 0x0173, U'u'},
    {0x0174, 0x0175, U'w'}, {0x0176, 0x0178, U'y'}, {0x0179, 0x017E, U'z'},
}};

}  // namespace

char32_t latin_fold(char32_t cp) {
    for (const auto& r : kFoldRanges) {
        if (cp >= r.lo && cp <= r.hi) return r.base;
    }
    switch (cp) {
        case 0x00C6: return 0x00E6;  // AE
        case 0x00D0: return 0x00F0;  // Eth
        case 0x00D8: return 0x00F8;  // O-slash
        case 0x00DE: return 0x00FE;  // Thorn
        case 0x0132: return 0x0133;  // IJ
        case 0x0152: return 0x0153;  // OE
        case 0x017F: return U's';    // long s
        default: return 0;
    }
}

}  // namespace reqa::unicode
