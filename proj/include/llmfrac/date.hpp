#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace llmfrac {

/// Calendar date with day granularity. Valid range is [1900-01-01, 2100-01-01].
struct Date {
    int year = 1900;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    bool valid() const noexcept;

    /// "YYYY-MM-DD"
    std::string to_string() const;

    /// "YYYY-MM"
    std::string month_label() const;

    /// "YYYYQn"
    std::string quarter_label() const;

    /// Parses "YYYY-MM-DD". Throws Error(invalid_argument) on malformed or
    /// out-of-range input.
    static Date parse(std::string_view s);

    /// Parse variant that reports failure instead of throwing.
    static bool try_parse(std::string_view s, Date& out) noexcept;
};

int days_in_month(int year, int month) noexcept;

}  // namespace llmfrac
