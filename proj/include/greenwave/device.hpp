#pragma once

// Ambulance telemetry unit: a bounded GPS parse window sets newData when a
// valid fix arrives; each window that produced one sends the fix as a maps
// link by SMS to the control room and the hospital.

#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "greenwave/expected.hpp"
#include "greenwave/modem.hpp"
#include "greenwave/nmea.hpp"
#include "greenwave/time.hpp"

namespace greenwave::device {

inline constexpr std::string_view kMapsPrefix = "https://maps.google.com/maps?q=";

enum class DeviceError { NoFix, InvalidConfig };

inline const char* to_string(DeviceError e) {
  return e == DeviceError::NoFix ? "NoFix" : "InvalidConfig";
}

/// 1-16 characters from [A-Za-z0-9_-].
inline bool valid_ambulance_id(std::string_view id) {
  if (id.empty() || id.size() > 16) return false;
  for (char c : id) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

struct DeviceConfig {
  std::string ambulance_id;
  Duration parse_window{1000};
  Duration send_interval{1000};
  bool single_shot = false;  // send the first fix only
  std::string control_room_number;
  std::string hospital_number;
  std::string serial_link_gps = "uart-gps";
  std::string serial_link_modem = "uart-gsm";

  bool valid() const {
    return valid_ambulance_id(ambulance_id) && parse_window.count() > 0 &&
           send_interval >= parse_window && serial_link_gps != serial_link_modem &&
           modem::valid_address(control_room_number) && modem::valid_address(hospital_number);
  }

  std::vector<std::string> destinations() const { return {control_room_number, hospital_number}; }
};

/// Bytes read from the GPS link, stamped with their arrival instant.
struct SerialChunk {
  Instant at{};
  std::string bytes;
};

struct TimedFix {
  nmea::GeoPosition fix;
  Instant observed_at{};
};

struct DeviceState {
  bool new_data = false;
  std::optional<TimedFix> last_fix;
  std::optional<Instant> last_send_time;
  std::uint64_t messages_sent = 0;     // per-destination messages handed to the modem
  std::uint64_t messages_dropped = 0;  // per-destination messages lost to ModemBusy
  nmea::FrameBuffer framer;
};

/// One parse window. Every valid fix replaces last_fix (latest wins) and raises
/// new_data; a window without one leaves new_data false.
inline DeviceState run_parse_window(DeviceState state, std::span<const SerialChunk> gps_bytes) {
  state.new_data = false;
  for (const SerialChunk& chunk : gps_bytes) {
    for (const nmea::RawSentence& raw : state.framer.feed_bytes(chunk.bytes)) {
      auto parsed = nmea::parse_sentence(raw);
      if (auto* fix = std::get_if<nmea::GeoPosition>(&parsed); fix && fix->has_fix()) {
        state.last_fix = TimedFix{*fix, chunk.at};
        state.new_data = true;
      }
    }
  }
  return state;
}

namespace detail {
inline std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}
}  // namespace detail

inline Expected<std::string, DeviceError> make_maps_link(const nmea::GeoPosition& fix) {
  if (!fix.has_fix()) return unexpected(DeviceError::NoFix);
  return std::string(kMapsPrefix) + detail::fixed6(fix.latitude) + "," + detail::fixed6(fix.longitude);
}

struct LocationMessage {
  std::string ambulance_id;
  UtcSeconds timestamp{};
  std::string maps_link;
  std::string destination;

  /// `<ambulance_id> <ISO8601 UTC> <maps_link>`
  std::string body() const { return ambulance_id + " " + format_iso8601(timestamp) + " " + maps_link; }
};

/// Precondition: `fix` has a fix (quality >= 1).
inline LocationMessage compose_message(const nmea::GeoPosition& fix, std::string_view dest,
                                       const DeviceConfig& cfg, UtcSeconds now) {
  return LocationMessage{cfg.ambulance_id, now, *make_maps_link(fix), std::string(dest)};
}

struct SendAction {
  LocationMessage message;
  std::string response;  // modem reply to the body, "+CMGS: n\r\nOK\r\n" on success
};

struct TickResult {
  std::vector<SendAction> sends;
  bool modem_busy = false;
};

/// The device: configuration, loop state and its modem link.
class Device {
 public:
  Device(DeviceConfig cfg, UtcAnchor utc) : cfg_(std::move(cfg)), utc_(utc) {}

  const DeviceConfig& config() const { return cfg_; }
  const DeviceState& state() const { return state_; }

  /// Runs the window ending at `now` over `gps_bytes`, then sends if the
  /// window produced a fix and the send interval allows it.
  TickResult tick(Instant now, std::span<const SerialChunk> gps_bytes, modem::Modem& link,
                  modem::SmsNetwork& net) {
    TickResult out;
    state_ = run_parse_window(std::move(state_), gps_bytes);
    const bool due = !state_.last_send_time || now - *state_.last_send_time >= cfg_.send_interval;
    const bool allowed = !(cfg_.single_shot && state_.last_send_time);
    if (state_.new_data && due && allowed) {
      const auto dests = cfg_.destinations();
      if (!link.begin_batch(now)) {
        out.modem_busy = true;
        state_.messages_sent += dests.size();
        state_.messages_dropped += dests.size();
      } else {
        ensure_text_mode(link, now, net);
        const TimedFix& f = *state_.last_fix;
        for (const auto& dest : dests) {
          LocationMessage msg = compose_message(f.fix, dest, cfg_, utc_.at(f.observed_at));
          link.exchange("AT+CMGS=\"" + dest + "\"", now, net);
          std::string body = msg.body();
          body += modem::kCtrlZ;
          std::string resp = link.exchange(body, now, net);
          ++state_.messages_sent;
          out.sends.push_back(SendAction{std::move(msg), std::move(resp)});
        }
        link.end_batch(now);
        state_.last_send_time = now;
      }
    }
    state_.new_data = false;
    return out;
  }

 private:
  void ensure_text_mode(modem::Modem& link, Instant now, modem::SmsNetwork& net) {
    if (link.state().mode == modem::Mode::TextMode) return;
    link.exchange("AT", now, net);
    link.exchange("AT+CMGF=1", now, net);
  }

  DeviceConfig cfg_;
  UtcAnchor utc_;
  DeviceState state_;
};

}  // namespace greenwave::device
