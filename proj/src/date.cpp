#include "llmfrac/date.hpp"

#include <cctype>
#include <cstdio>

#include "llmfrac/errors.hpp"

namespace llmfrac {

int days_in_month(int year, int month) noexcept {
    static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) return 0;
    if (month == 2) {
        bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return kDays[month - 1];
}

bool Date::valid() const noexcept {
    if (month < 1 || month > 12) return false;
    if (day < 1 || day > days_in_month(year, month)) return false;
    static constexpr Date kMin{1900, 1, 1};
    static constexpr Date kMax{2100, 1, 1};
    return *this >= kMin && *this <= kMax;
}

std::string Date::to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::string Date::month_label() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

std::string Date::quarter_label() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04dQ%d", year, (month - 1) / 3 + 1);
    return buf;
}

bool Date::try_parse(std::string_view s, Date& out) noexcept {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    auto num = [&](size_t pos, size_t len) {
        int v = 0;
        for (size_t i = pos; i < pos + len; ++i) v = v * 10 + (s[i] - '0');
        return v;
    };
    Date d{num(0, 4), num(5, 2), num(8, 2)};
    if (!d.valid()) return false;
    out = d;
    return true;
}

Date Date::parse(std::string_view s) {
    Date d;
    if (!try_parse(s, d)) {
        raise(Errc::invalid_argument, "not a valid YYYY-MM-DD date in [1900-01-01, 2100-01-01]: '" +
                                          std::string(s) + "'");
    }
    return d;
}

}  // namespace llmfrac
