#pragma once

// NMEA 0183 framing and GGA/RMC decoding.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "greenwave/expected.hpp"

namespace greenwave::nmea {

enum class SentenceType { GGA, RMC };

enum class NmeaError { ChecksumMismatch, MalformedField, MalformedCoordinate };

inline const char* to_string(NmeaError e) {
  switch (e) {
    case NmeaError::ChecksumMismatch: return "ChecksumMismatch";
    case NmeaError::MalformedField: return "MalformedField";
    case NmeaError::MalformedCoordinate: return "MalformedCoordinate";
  }
  return "?";
}

inline const char* to_string(SentenceType t) { return t == SentenceType::GGA ? "GGA" : "RMC"; }

struct RawSentence {
  std::string text;  // starts with '$', no line terminator
  bool checksum_present = false;

  static RawSentence from_text(std::string text) {
    const bool star = text.find('*') != std::string::npos;
    return RawSentence{std::move(text), star};
  }
};

/// A decoded fix. When fix_quality is 0 the position fields carry no meaning.
struct GeoPosition {
  double latitude = 0.0;
  double longitude = 0.0;
  double utc_time = 0.0;  // seconds of day
  int fix_quality = 0;
  int satellites = 0;
  double hdop = 0.0;
  std::optional<double> altitude_m;
  SentenceType source_sentence = SentenceType::GGA;

  bool has_fix() const { return fix_quality >= 1; }
};

struct Unsupported {
  std::string sentence_type;
};

using ParseResult = std::variant<GeoPosition, Unsupported, NmeaError>;

/// XOR of every byte between '$' and '*'.
constexpr std::uint8_t checksum(std::string_view payload) {
  std::uint8_t acc = 0;
  for (char c : payload) acc ^= static_cast<std::uint8_t>(c);
  return acc;
}

namespace detail {

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline std::optional<int> parse_int(std::string_view s) {
  if (!all_digits(s)) return std::nullopt;
  int v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Plain decimal: digits with at most one '.', optional leading '-'.
inline std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string_view body = s.front() == '-' ? s.substr(1) : s;
  if (body.empty() || body.front() == '.' || body.back() == '.') return std::nullopt;
  int dots = 0;
  for (char c : body) {
    if (c == '.') {
      ++dots;
    } else if (c < '0' || c > '9') {
      return std::nullopt;
    }
  }
  if (dots > 1) return std::nullopt;
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// "hhmmss" or "hhmmss.sss" to seconds of day.
inline std::optional<double> parse_hhmmss(std::string_view s) {
  if (s.size() < 6) return std::nullopt;
  auto h = parse_int(s.substr(0, 2));
  auto m = parse_int(s.substr(2, 2));
  auto sec = s.size() == 6 ? std::optional<double>(parse_int(s.substr(4, 2)).value_or(-1))
                           : parse_decimal(s.substr(4));
  if (!h || !m || !sec || *sec < 0) return std::nullopt;
  if (*h > 23 || *m > 59 || *sec >= 61.0) return std::nullopt;
  if (s.size() > 6 && s[6] != '.') return std::nullopt;
  return *h * 3600.0 + *m * 60.0 + *sec;
}

}  // namespace detail

/// "ddmm.mmmm" (N/S) or "dddmm.mmmm" (E/W) to signed decimal degrees.
inline Expected<double, NmeaError> to_decimal_degrees(std::string_view field, char hemisphere) {
  int degree_digits = 0;
  switch (hemisphere) {
    case 'N':
    case 'S': degree_digits = 2; break;
    case 'E':
    case 'W': degree_digits = 3; break;
    default: return unexpected(NmeaError::MalformedCoordinate);
  }
  const auto dot = field.find('.');
  const std::string_view whole = field.substr(0, dot);
  const std::string_view frac =
      dot == std::string_view::npos ? std::string_view{} : field.substr(dot + 1);
  if (whole.size() != static_cast<std::size_t>(degree_digits + 2) || !detail::all_digits(whole)) {
    return unexpected(NmeaError::MalformedCoordinate);
  }
  if (dot != std::string_view::npos && !detail::all_digits(frac)) {
    return unexpected(NmeaError::MalformedCoordinate);
  }
  const int degrees = *detail::parse_int(whole.substr(0, degree_digits));
  const auto minutes = detail::parse_decimal(field.substr(degree_digits));
  if (!minutes || *minutes >= 60.0) return unexpected(NmeaError::MalformedCoordinate);
  double value = degrees + *minutes / 60.0;
  const double limit = degree_digits == 2 ? 90.0 : 180.0;
  if (value > limit) return unexpected(NmeaError::MalformedCoordinate);
  if (hemisphere == 'S' || hemisphere == 'W') value = -value;
  return value;
}

namespace detail {

inline Expected<double, NmeaError> coordinate(std::string_view field, std::string_view hemi,
                                              bool latitude) {
  if (hemi.size() != 1) return unexpected(NmeaError::MalformedCoordinate);
  const char h = hemi.front();
  if (latitude ? (h != 'N' && h != 'S') : (h != 'E' && h != 'W')) {
    return unexpected(NmeaError::MalformedCoordinate);
  }
  return to_decimal_degrees(field, h);
}

inline ParseResult parse_gga(const std::vector<std::string_view>& f) {
  if (f.size() != 15) return NmeaError::MalformedField;
  GeoPosition p;
  p.source_sentence = SentenceType::GGA;
  auto quality = parse_int(f[6]);
  if (!quality || *quality > 9) return NmeaError::MalformedField;
  p.fix_quality = *quality;
  if (!f[1].empty()) {
    auto t = parse_hhmmss(f[1]);
    if (!t) return NmeaError::MalformedField;
    p.utc_time = *t;
  }
  if (!f[7].empty()) {
    auto sats = parse_int(f[7]);
    if (!sats) return NmeaError::MalformedField;
    p.satellites = *sats;
  }
  if (!f[8].empty()) {
    auto hdop = parse_decimal(f[8]);
    if (!hdop || *hdop < 0) return NmeaError::MalformedField;
    p.hdop = *hdop;
  }
  if (!f[9].empty()) {
    auto alt = parse_decimal(f[9]);
    if (!alt) return NmeaError::MalformedField;
    p.altitude_m = *alt;
  }
  if (p.fix_quality == 0) return p;
  auto lat = coordinate(f[2], f[3], true);
  if (!lat) return lat.error();
  auto lon = coordinate(f[4], f[5], false);
  if (!lon) return lon.error();
  p.latitude = *lat;
  p.longitude = *lon;
  return p;
}

inline ParseResult parse_rmc(const std::vector<std::string_view>& f) {
  // NMEA 2.3+ appends a mode indicator; both layouts are accepted.
  if (f.size() != 12 && f.size() != 13) return NmeaError::MalformedField;
  GeoPosition p;
  p.source_sentence = SentenceType::RMC;
  if (!f[1].empty()) {
    auto t = parse_hhmmss(f[1]);
    if (!t) return NmeaError::MalformedField;
    p.utc_time = *t;
  }
  if (f[2] == "V") return p;
  if (f[2] != "A") return NmeaError::MalformedField;
  p.fix_quality = 1;
  auto lat = coordinate(f[3], f[4], true);
  if (!lat) return lat.error();
  auto lon = coordinate(f[5], f[6], false);
  if (!lon) return lon.error();
  p.latitude = *lat;
  p.longitude = *lon;
  return p;
}

}  // namespace detail

inline ParseResult parse_sentence(const RawSentence& raw) {
  std::string_view text = raw.text;
  if (text.empty() || text.front() != '$') return NmeaError::MalformedField;
  for (char c : text) {
    if (c < 0x20 || c > 0x7e) return NmeaError::MalformedField;
  }
  const auto star = text.find('*');
  std::string_view payload = text.substr(1);
  if (star != std::string_view::npos) {
    if (text.find('*', star + 1) != std::string_view::npos) return NmeaError::MalformedField;
    const std::string_view hex = text.substr(star + 1);
    if (hex.size() != 2) return NmeaError::MalformedField;
    const int hi = detail::hex_value(hex[0]);
    const int lo = detail::hex_value(hex[1]);
    if (hi < 0 || lo < 0) return NmeaError::MalformedField;
    payload = text.substr(1, star - 1);
    if (checksum(payload) != static_cast<std::uint8_t>(hi * 16 + lo)) {
      return NmeaError::ChecksumMismatch;
    }
  }
  if (payload.find('$') != std::string_view::npos) return NmeaError::MalformedField;
  const auto fields = detail::split(payload, ',');
  const std::string_view address = fields.front();
  if (address.size() < 3) return NmeaError::MalformedField;
  // Talker id (GP/GN/GL/...) is ignored; the last three letters select the decoder.
  const std::string_view type = address.substr(address.size() - 3);
  if (address.size() == 5 && type == "GGA") return detail::parse_gga(fields);
  if (address.size() == 5 && type == "RMC") return detail::parse_rmc(fields);
  return Unsupported{std::string(address)};
}

inline ParseResult parse_sentence(std::string_view line) {
  return parse_sentence(RawSentence::from_text(std::string(line)));
}

/// Incremental '$'..EOL framer for a serial byte stream.
class FrameBuffer {
 public:
  static constexpr std::size_t kDefaultMaxLen = 82;

  FrameBuffer() = default;
  explicit FrameBuffer(std::size_t max_len) : max_len_(max_len) {}

  std::vector<RawSentence> feed_bytes(std::string_view chunk) {
    std::vector<RawSentence> out;
    for (char c : chunk) {
      if (!in_frame_) {
        if (c == '$') {
          in_frame_ = true;
          pending_.assign(1, c);
        }
        continue;
      }
      if (c == '\r' || c == '\n') {
        out.push_back(RawSentence::from_text(std::move(pending_)));
        pending_.clear();
        in_frame_ = false;
      } else if (c == '$') {
        ++truncated_count_;
        pending_.assign(1, c);
      } else if (pending_.size() >= max_len_) {
        ++overflow_count_;
        pending_.clear();
        in_frame_ = false;
      } else {
        pending_.push_back(c);
      }
    }
    return out;
  }

  std::size_t max_len() const { return max_len_; }
  std::size_t pending_size() const { return pending_.size(); }
  /// Frames dropped for exceeding max_len.
  std::size_t overflow_count() const { return overflow_count_; }
  /// Frames abandoned because a new '$' arrived before the line ended.
  std::size_t truncated_count() const { return truncated_count_; }

 private:
  std::size_t max_len_ = kDefaultMaxLen;
  std::string pending_;
  bool in_frame_ = false;
  std::size_t overflow_count_ = 0;
  std::size_t truncated_count_ = 0;
};

namespace detail {

inline std::string format_coordinate(double value, int degree_digits) {
  // Work in integer 1e-5 minute units so rounding can never print 60 minutes.
  const auto units = static_cast<long long>(std::llround(std::fabs(value) * 60.0 * 1e5));
  const long long per_degree = 60LL * 100000LL;
  const long long deg = units / per_degree;
  const long long rem = units % per_degree;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*lld%02lld.%05lld", degree_digits, deg, rem / 100000,
                rem % 100000);
  return buf;
}

}  // namespace detail

/// Builds a checksummed "$GPGGA" sentence for a fix (no line terminator).
inline std::string format_gga(const GeoPosition& p) {
  const double t = std::fmod(std::max(p.utc_time, 0.0), 86400.0);
  const auto centis = static_cast<long long>(std::llround(t * 100.0)) % 8640000LL;
  char time_buf[16];
  std::snprintf(time_buf, sizeof time_buf, "%02lld%02lld%02lld.%02lld", centis / 360000,
                (centis / 6000) % 60, (centis / 100) % 60, centis % 100);
  std::string payload = "GPGGA,";
  payload += time_buf;
  payload += ',';
  if (p.fix_quality >= 1) {
    payload += detail::format_coordinate(p.latitude, 2);
    payload += p.latitude < 0 ? ",S," : ",N,";
    payload += detail::format_coordinate(p.longitude, 3);
    payload += p.longitude < 0 ? ",W," : ",E,";
  } else {
    payload += ",,,,";
  }
  char tail[96];
  std::snprintf(tail, sizeof tail, "%d,%02d,%.1f,%.1f,M,0.0,M,,", p.fix_quality, p.satellites,
                p.hdop, p.altitude_m.value_or(0.0));
  payload += tail;
  char sum[8];
  std::snprintf(sum, sizeof sum, "*%02X", checksum(payload));
  return "$" + payload + sum;
}

}  // namespace greenwave::nmea
