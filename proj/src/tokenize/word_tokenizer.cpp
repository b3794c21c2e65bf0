#include "mtp/tokenize/word_tokenizer.hpp"

#include <cstdint>

namespace mtp::tokenize {

namespace {

struct CodePoint {
    std::uint32_t value;
    std::size_t length;
};

constexpr std::uint32_t kInvalid = 0xFFFFFFFF;

// Malformed sequences decode as a single opaque byte.
CodePoint decode_at(std::string_view s, std::size_t i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) return {c, 1};
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
        len = 2;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        len = 3;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        len = 4;
        cp = c & 0x07;
    } else {
        return {kInvalid, 1};
    }
    if (i + len > s.size()) return {kInvalid, 1};
    for (std::size_t k = 1; k < len; ++k) {
        const auto cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) return {kInvalid, 1};
        cp = (cp << 6) | (cc & 0x3F);
    }
    return {cp, len};
}

bool is_space(std::uint32_t cp) {
    if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D) || (cp >= 0x1C && cp <= 0x1F)) return true;
    switch (cp) {
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_ascii_digit(std::uint32_t cp) { return cp >= '0' && cp <= '9'; }

// Approximates Python's Unicode \w without a character database: ASCII
// alphanumerics and '_', plus non-ASCII code points outside the common
// punctuation, symbol and whitespace blocks.
bool is_word(std::uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || is_ascii_digit(cp) || cp == '_';
    }
    if (cp == kInvalid || is_space(cp)) return false;
    if (cp <= 0xBF) {
        switch (cp) {
            case 0xAA: case 0xB2: case 0xB3: case 0xB5: case 0xB9: case 0xBA: case 0xBC: case 0xBD: case 0xBE:
                return true;
            default:
                return false;
        }
    }
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x206F) return cp == 0x203F || cp == 0x2040 || cp == 0x2054;
    if (cp >= 0x20A0 && cp <= 0x20CF) return false;
    if (cp >= 0x2190 && cp <= 0x2BFF) return false;
    if (cp >= 0x3001 && cp <= 0x3004) return false;
    if (cp >= 0x3008 && cp <= 0x3020) return false;
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF3E) ||
        cp == 0xFF40 || (cp >= 0xFF5B && cp <= 0xFF65)) {
        return false;
    }
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;
    return true;
}

// Closing position of a quoted string starting at `i`, or npos.
std::size_t match_string(std::string_view s, std::size_t i, char quote) {
    std::size_t j = i + 1;
    while (j < s.size()) {
        if (s[j] == quote) return j + 1;
        if (s[j] == '\\') {
            if (j + 1 >= s.size()) return std::string_view::npos;
            j += 1 + decode_at(s, j + 1).length;
        } else {
            j += decode_at(s, j).length;
        }
    }
    return std::string_view::npos;
}

}  // namespace

std::vector<WordSpan> word_spans(std::string_view text) {
    std::vector<WordSpan> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto cp = decode_at(text, i);
        if (is_space(cp.value)) {
            i += cp.length;
            continue;
        }
        if (text[i] == '"' || text[i] == '\'') {
            const auto end = match_string(text, i, text[i]);
            if (end != std::string_view::npos) {
                spans.push_back({i, end});
                i = end;
                continue;
            }
        }
        if (is_ascii_digit(cp.value)) {
            std::size_t j = i;
            while (j < text.size() && is_ascii_digit(static_cast<unsigned char>(text[j]))) ++j;
            if (j + 1 < text.size() && text[j] == '.' && is_ascii_digit(static_cast<unsigned char>(text[j + 1]))) {
                j += 1;
                while (j < text.size() && is_ascii_digit(static_cast<unsigned char>(text[j]))) ++j;
            }
            spans.push_back({i, j});
            i = j;
            continue;
        }
        if (is_word(cp.value)) {
            std::size_t j = i;
            while (j < text.size()) {
                const auto next = decode_at(text, j);
                if (!is_word(next.value)) break;
                j += next.length;
            }
            spans.push_back({i, j});
            i = j;
            continue;
        }
        spans.push_back({i, i + cp.length});
        i += cp.length;
    }
    return spans;
}

std::vector<std::string> word_tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (const auto &span : word_spans(text)) out.emplace_back(text.substr(span.begin, span.end - span.begin));
    return out;
}

}  // namespace mtp::tokenize
