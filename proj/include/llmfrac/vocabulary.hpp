#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace llmfrac {

/// Ordered token set. Slot order is canonical: descending combined document
/// frequency at build time, ties broken by ascending lexicographic order.
class Vocabulary {
public:
    Vocabulary() = default;

    /// Takes tokens already in canonical order. Throws on duplicates.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const std::string& token(std::size_t slot) const { return tokens_[slot]; }

    /// Slot of a token, or -1 if absent.
    std::int32_t slot_of(std::string_view token) const noexcept;

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    struct Eq {
        using is_transparent = void;
        bool operator()(std::string_view a, std::string_view b) const noexcept { return a == b; }
    };

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t, Hash, Eq> index_;
};

}  // namespace llmfrac
