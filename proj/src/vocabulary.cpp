#include "llmfrac/vocabulary.hpp"

#include "llmfrac/errors.hpp"

namespace llmfrac {

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    v.index_.reserve(v.tokens_.size());
    for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
        auto [it, inserted] = v.index_.emplace(v.tokens_[i], static_cast<std::int32_t>(i));
        if (!inserted) raise(Errc::invalid_argument, "duplicate vocabulary token: " + v.tokens_[i]);
    }
    return v;
}

std::int32_t Vocabulary::slot_of(std::string_view token) const noexcept {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

}  // namespace llmfrac
