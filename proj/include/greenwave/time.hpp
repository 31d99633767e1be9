#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace greenwave {

/// Simulation clock. Instants count milliseconds from the start of a run, so
/// every schedule computed from integer millisecond durations is exact.
struct SimClock {
  using rep = std::int64_t;
  using period = std::milli;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SimClock, duration>;
  static constexpr bool is_steady = true;
};

using Duration = SimClock::duration;
using Instant = SimClock::time_point;

inline constexpr Instant kSimStart{};

inline Duration from_seconds(double s) {
  return Duration{static_cast<std::int64_t>(std::llround(s * 1000.0))};
}

constexpr double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1000.0; }
constexpr double to_seconds(Instant t) { return to_seconds(t.time_since_epoch()); }

inline Instant instant_at(double seconds) { return Instant{from_seconds(seconds)}; }

using UtcSeconds = std::chrono::sys_seconds;

/// Maps simulation instants onto wall-clock UTC, truncated to whole seconds.
struct UtcAnchor {
  UtcSeconds epoch{};

  UtcSeconds at(Instant t) const {
    return epoch + std::chrono::floor<std::chrono::seconds>(t.time_since_epoch());
  }
  Instant to_sim(UtcSeconds utc) const {
    return Instant{std::chrono::duration_cast<Duration>(utc - epoch)};
  }
};

/// "YYYY-MM-DDTHH:MM:SSZ"
inline std::string format_iso8601(UtcSeconds t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace detail {
inline bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  auto r = std::from_chars(s.data() + pos, s.data() + pos + n, out);
  return r.ec == std::errc{};
}
}  // namespace detail

/// Strict inverse of format_iso8601; rejects anything but the 20-character form.
inline std::optional<UtcSeconds> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':' || s[19] != 'Z') {
    return std::nullopt;
  }
  int y, mo, d, h, mi, se;
  if (!detail::read_digits(s, 0, 4, y) || !detail::read_digits(s, 5, 2, mo) ||
      !detail::read_digits(s, 8, 2, d) || !detail::read_digits(s, 11, 2, h) ||
      !detail::read_digits(s, 14, 2, mi) || !detail::read_digits(s, 17, 2, se)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
}

}  // namespace greenwave
