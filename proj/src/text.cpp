#include "llmfrac/text.hpp"

#include <algorithm>

#include "llmfrac/errors.hpp"

namespace llmfrac {

namespace {

struct Codepoint {
    char32_t value;
    std::size_t length;  // bytes consumed; 0 marks an invalid sequence of 1 byte
};

Codepoint decode_utf8(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1};

    auto cont = [&](std::size_t off) {
        return pos + off < s.size() &&
               (static_cast<unsigned char>(s[pos + off]) & 0xC0) == 0x80;
    };
    auto bits = [&](std::size_t off) {
        return static_cast<char32_t>(static_cast<unsigned char>(s[pos + off]) & 0x3F);
    };

    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | bits(1);
        return cp >= 0x80 ? Codepoint{cp, 2} : Codepoint{0, 0};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = (static_cast<char32_t>(b0 & 0x0F) << 12) | (bits(1) << 6) | bits(2);
        return cp >= 0x800 ? Codepoint{cp, 3} : Codepoint{0, 0};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = (static_cast<char32_t>(b0 & 0x07) << 18) | (bits(1) << 12) |
                      (bits(2) << 6) | bits(3);
        return (cp >= 0x10000 && cp <= 0x10FFFF) ? Codepoint{cp, 4} : Codepoint{0, 0};
    }
    return {0, 0};
}

bool is_word_codepoint(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
               (cp >= '0' && cp <= '9');
    }
    if (cp >= 0xA0 && cp <= 0xBF) return false;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x206F) return false;
    if (cp >= 0x3000 && cp <= 0x303F) return false;
    return true;
}

char32_t lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;

    std::size_t pos = 0;
    bool prev_is_word = false;
    while (pos < text.size()) {
        Codepoint cp = decode_utf8(text, pos);
        if (cp.length == 0) {  // invalid byte: separator
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
            prev_is_word = false;
            ++pos;
            continue;
        }

        if (is_word_codepoint(cp.value)) {
            append_utf8(current, lower(cp.value));
            prev_is_word = true;
        } else if (cp.value == '\'' && prev_is_word) {
            // keep only if the next codepoint is a word character
            std::size_t next_pos = pos + cp.length;
            bool next_is_word = false;
            if (next_pos < text.size()) {
                Codepoint next = decode_utf8(text, next_pos);
                next_is_word = next.length != 0 && is_word_codepoint(next.value);
            }
            if (next_is_word) {
                current.push_back('\'');
            } else if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
            prev_is_word = next_is_word;
        } else {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
            prev_is_word = false;
        }
        pos += cp.length;
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> segment_sentences(std::string_view text) {
    std::vector<std::string> segments;
    auto push_trimmed = [&](std::string_view seg) {
        std::size_t b = 0, e = seg.size();
        while (b < e && is_ascii_space(seg[b])) ++b;
        while (e > b && is_ascii_space(seg[e - 1])) --e;
        if (e > b) segments.emplace_back(seg.substr(b, e - b));
    };

    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == text.size() || is_ascii_space(text[i + 1]))) {
            push_trimmed(text.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    if (start < text.size()) push_trimmed(text.substr(start));
    return segments;
}

OccurrenceVector occurrence_vector(std::string_view unit_text, const Vocabulary& vocab) {
    if (vocab.empty()) raise(Errc::invalid_argument, "occurrence_vector needs a non-empty vocabulary");
    OccurrenceVector v;
    v.bits.assign(vocab.size(), false);
    for (const std::string& tok : tokenize(unit_text)) {
        std::int32_t slot = vocab.slot_of(tok);
        if (slot >= 0) v.bits[static_cast<std::size_t>(slot)] = true;
    }
    return v;
}

std::vector<std::int32_t> present_slots(std::string_view unit_text, const Vocabulary& vocab) {
    std::vector<std::int32_t> slots;
    for (const std::string& tok : tokenize(unit_text)) {
        std::int32_t slot = vocab.slot_of(tok);
        if (slot >= 0) slots.push_back(slot);
    }
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    return slots;
}

}  // namespace llmfrac
