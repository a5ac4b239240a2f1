#pragma once

/// @file timestamp.hpp
/// Calendar timestamp with second resolution, serialized "YYYY-MM-DD HH:MM:SS".
/// Stored as seconds since the civil epoch 1970-01-01 00:00:00 (no time zone),
/// so ordering and arithmetic are plain integer operations and the textual
/// form round-trips exactly.

#include <cstdint>
#include <cstdio>
#include <compare>
#include <optional>
#include <string>

#include "ctxcast/errors.hpp"

namespace ctxcast {

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

inline bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

inline int days_in_month(int y, int m) {
    static constexpr int dim[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : dim[m - 1];
}

}  // namespace detail

/// Second-resolution calendar datetime. Comparable, hashable via seconds().
class Timestamp {
public:
    Timestamp() = default;
    explicit Timestamp(std::int64_t seconds_since_epoch) : secs_(seconds_since_epoch) {}

    /// Parses "YYYY-MM-DD HH:MM:SS". Returns nullopt on any deviation.
    static std::optional<Timestamp> parse(const std::string& text) {
        if (text.size() != 19) return std::nullopt;
        int y, mo, d, h, mi, s;
        char c1, c2, c3, c4;
        int consumed = 0;
        if (std::sscanf(text.c_str(), "%4d%c%2d%c%2d %2d%c%2d%c%2d%n", &y, &c1, &mo, &c2, &d,
                        &h, &c3, &mi, &c4, &s, &consumed) != 10)
            return std::nullopt;
        if (consumed != 19 || c1 != '-' || c2 != '-' || c3 != ':' || c4 != ':')
            return std::nullopt;
        if (text[4] != '-' || text[7] != '-' || text[10] != ' ') return std::nullopt;
        if (mo < 1 || mo > 12 || d < 1 || d > detail::days_in_month(y, mo)) return std::nullopt;
        if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59) return std::nullopt;
        const std::int64_t days = detail::days_from_civil(y, mo, d);
        return Timestamp(days * 86400 + h * 3600 + mi * 60 + s);
    }

    /// Parses or throws MalformedLine-style Error.
    static Timestamp parse_or_throw(const std::string& text) {
        auto ts = parse(text);
        if (!ts) throw Error("bad timestamp '" + text + "' (want YYYY-MM-DD HH:MM:SS)");
        return *ts;
    }

    std::string str() const {
        std::int64_t days = secs_ / 86400;
        std::int64_t rem = secs_ % 86400;
        if (rem < 0) {
            rem += 86400;
            days -= 1;
        }
        int y, m, d;
        detail::civil_from_days(days, y, m, d);
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d,
                      static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                      static_cast<int>(rem % 60));
        return buf;
    }

    std::int64_t seconds() const { return secs_; }

    Timestamp plus_seconds(std::int64_t s) const { return Timestamp(secs_ + s); }
    Timestamp plus_hours(std::int64_t h) const { return Timestamp(secs_ + h * 3600); }

    auto operator<=>(const Timestamp&) const = default;

private:
    std::int64_t secs_ = 0;
};

}  // namespace ctxcast
