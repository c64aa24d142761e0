#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "llmfrac/vocabulary.hpp"

namespace llmfrac {

/// Deterministic word tokenizer. The grammar is intentionally simple so that
/// two independent implementations produce identical token streams:
///
///   - input is UTF-8; invalid bytes act as separators
///   - word characters: ASCII letters (lowercased), ASCII digits, and any
///     codepoint >= U+0080 except the punctuation ranges below
///   - separators: everything else, plus U+00A0..U+00BF, U+00D7, U+00F7,
///     U+2000..U+206F (general punctuation) and U+3000..U+303F
///   - U+00C0..U+00DE (except U+00D7) lowercase to U+00E0..U+00FE
///   - an ASCII apostrophe stays inside a token when both neighbours are
///     word characters ("don't" stays one token)
///
/// Tokens are maximal runs of word characters, in input order.
std::vector<std::string> tokenize(std::string_view text);

/// Splits after '.', '!' or '?' when followed by ASCII whitespace or end of
/// input. No abbreviation handling. Segments are whitespace-trimmed; empty
/// segments are dropped.
std::vector<std::string> segment_sentences(std::string_view text);

/// Presence/absence summary of one estimation unit against a vocabulary.
struct OccurrenceVector {
    std::vector<bool> bits;  // bits.size() == vocab.size()
};

/// bits[t] is true iff vocabulary token t appears at least once in
/// tokenize(unit_text). Token multiplicity is ignored.
OccurrenceVector occurrence_vector(std::string_view unit_text, const Vocabulary& vocab);

/// Strictly increasing vocabulary slots of the tokens present in unit_text.
/// Same information as occurrence_vector in sparse form.
std::vector<std::int32_t> present_slots(std::string_view unit_text, const Vocabulary& vocab);

}  // namespace llmfrac
