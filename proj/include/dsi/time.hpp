// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dsi {

inline constexpr std::int64_t kMicrosPerSecond = 1'000'000;
inline constexpr std::int64_t kMicrosPerMinute = 60 * kMicrosPerSecond;
inline constexpr std::int64_t kMicrosPerDay = 24 * 60 * kMicrosPerMinute;
inline constexpr int kMaxOffsetMinutes = 14 * 60;

using Micros = std::chrono::microseconds;

/// A UTC instant plus the UTC offset the capturing device recorded.
///
/// The instant is the ordering key. The offset is kept verbatim so wall-clock
/// analyses (capture-local binning, daily windows) see what the device saw.
struct Timestamp {
    std::int64_t micros = 0;          ///< microseconds since 1970-01-01T00:00:00Z
    std::int16_t utc_offset_minutes = 0;

    /// Capture-local wall clock, expressed as microseconds on a naive UTC-like axis.
    constexpr std::int64_t local_micros() const noexcept
    {
        return micros + std::int64_t{utc_offset_minutes} * kMicrosPerMinute;
    }

    friend constexpr bool operator==(const Timestamp&, const Timestamp&) = default;
};

/// Orders by instant only; offsets do not affect chronology.
constexpr bool earlier(const Timestamp& a, const Timestamp& b) noexcept
{
    return a.micros < b.micros;
}

namespace detail {

inline bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out)
{
    if (pos + n > s.size()) {
        return false;
    }
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        const char c = s[i];
        if (c < '0' || c > '9') {
            return false;
        }
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

} // namespace detail

/// Parses `YYYY-MM-DDTHH:MM:SS[.ffffff](Z|+HH:MM|-HH:MM)`.
///
/// Up to six fractional digits are accepted; an offset is mandatory. Returns
/// nullopt for anything else, including out-of-range calendar fields.
inline std::optional<Timestamp> parse_iso8601(std::string_view s)
{
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!detail::digits(s, 0, 4, y) || s.size() < 20 || s[4] != '-' || !detail::digits(s, 5, 2, mo) ||
        s[7] != '-' || !detail::digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
        !detail::digits(s, 11, 2, h) || s[13] != ':' || !detail::digits(s, 14, 2, mi) || s[16] != ':' ||
        !detail::digits(s, 17, 2, sec)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) {
        return std::nullopt;
    }

    std::size_t pos = 19;
    std::int64_t frac = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t n = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (++n > 6) {
                return std::nullopt;
            }
            frac = frac * 10 + (s[pos] - '0');
            ++pos;
        }
        if (n == 0) {
            return std::nullopt;
        }
        for (; n < 6; ++n) {
            frac *= 10;
        }
    }

    int offset = 0;
    if (pos >= s.size()) {
        return std::nullopt;
    }
    if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '-' ? -1 : 1;
        int oh = 0, om = 0;
        if (!detail::digits(s, pos + 1, 2, oh)) {
            return std::nullopt;
        }
        std::size_t mpos = pos + 3;
        if (mpos < s.size() && s[mpos] == ':') {
            ++mpos;
        }
        if (!detail::digits(s, mpos, 2, om) || om > 59) {
            return std::nullopt;
        }
        pos = mpos + 2;
        offset = sign * (oh * 60 + om);
        if (offset > kMaxOffsetMinutes || offset < -kMaxOffsetMinutes) {
            return std::nullopt;
        }
    } else {
        return std::nullopt;
    }
    if (pos != s.size()) {
        return std::nullopt;
    }

    const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
    const std::int64_t local = days * kMicrosPerDay + (std::int64_t{h} * 3600 + mi * 60 + sec) * kMicrosPerSecond + frac;
    return Timestamp{local - std::int64_t{offset} * kMicrosPerMinute, static_cast<std::int16_t>(offset)};
}

/// Canonical rendering: wall clock at the recorded offset, `Z` for offset zero,
/// fractional seconds only when non-zero (always six digits).
inline std::string format_iso8601(const Timestamp& ts)
{
    using namespace std::chrono;
    const std::int64_t local = ts.local_micros();
    const std::int64_t days = detail::floor_div(local, kMicrosPerDay);
    std::int64_t rem = local - days * kMicrosPerDay;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    const auto frac = rem % kMicrosPerSecond;
    rem /= kMicrosPerSecond;

    char buf[48];
    int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                          static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
    if (frac != 0) {
        n += std::snprintf(buf + n, sizeof buf - n, ".%06lld", static_cast<long long>(frac));
    }
    if (ts.utc_offset_minutes == 0) {
        std::snprintf(buf + n, sizeof buf - n, "Z");
    } else {
        const int off = ts.utc_offset_minutes;
        const int a = off < 0 ? -off : off;
        std::snprintf(buf + n, sizeof buf - n, "%c%02d:%02d", off < 0 ? '-' : '+', a / 60, a % 60);
    }
    return buf;
}

/// Wall-clock time of day in [00:00, 24:00), minute resolution.
struct TimeOfDay {
    int minutes = 0;

    friend constexpr auto operator<=>(const TimeOfDay&, const TimeOfDay&) = default;
};

/// Parses `HH:MM`; `24:00` is accepted as an end-of-day bound.
inline std::optional<TimeOfDay> parse_time_of_day(std::string_view s)
{
    int h = 0, m = 0;
    if (s.size() != 5 || !detail::digits(s, 0, 2, h) || s[2] != ':' || !detail::digits(s, 3, 2, m) || m > 59 ||
        h > 24 || (h == 24 && m != 0)) {
        return std::nullopt;
    }
    return TimeOfDay{h * 60 + m};
}

/// Microseconds since capture-local midnight.
inline std::int64_t local_time_of_day_micros(const Timestamp& ts)
{
    const std::int64_t local = ts.local_micros();
    return local - detail::floor_div(local, kMicrosPerDay) * kMicrosPerDay;
}

} // namespace dsi
