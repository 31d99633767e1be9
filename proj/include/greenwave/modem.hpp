#pragma once

// SIM900A-style text-mode AT command handling and a seeded SMS network.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "greenwave/time.hpp"

namespace greenwave::modem {

inline constexpr char kCtrlZ = '\x1a';
inline constexpr std::size_t kMaxBody = 160;

enum class Mode { Idle, TextMode, AwaitingBody, Sending };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Idle: return "IDLE";
    case Mode::TextMode: return "TEXT_MODE";
    case Mode::AwaitingBody: return "AWAITING_BODY";
    case Mode::Sending: return "SENDING";
  }
  return "?";
}

struct ModemState {
  Mode mode = Mode::Idle;
  std::optional<std::string> pending_dest;
  std::string pending_body;
  int message_counter = 0;
};

struct Submission {
  std::string to;
  std::string body;
  int reference = 0;
};

struct AtResult {
  ModemState state;
  std::string response;
  std::optional<Submission> submitted;
};

namespace responses {
inline constexpr std::string_view kOk = "OK\r\n";
inline constexpr std::string_view kError = "ERROR\r\n";
inline constexpr std::string_view kPrompt = "> ";
}  // namespace responses

/// `+?[0-9]{3,15}`
inline bool valid_address(std::string_view a) {
  if (!a.empty() && a.front() == '+') a.remove_prefix(1);
  if (a.size() < 3 || a.size() > 15) return false;
  return std::all_of(a.begin(), a.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// One command line (without terminator) or, while awaiting a body, raw body
/// bytes. The body completes at the first 0x1A.
inline AtResult handle_at_line(ModemState state, std::string_view line) {
  AtResult r{std::move(state), {}, std::nullopt};
  ModemState& s = r.state;

  if (s.mode == Mode::AwaitingBody) {
    const auto end = line.find(kCtrlZ);
    s.pending_body.append(line.substr(0, end));
    if (end == std::string_view::npos) return r;
    std::string body = std::move(s.pending_body);
    s.pending_body.clear();
    const std::string dest = *s.pending_dest;
    s.pending_dest.reset();
    if (body.size() > kMaxBody) {
      s.mode = Mode::TextMode;
      r.response = "+CMS ERROR: 500\r\n";
      return r;
    }
    ++s.message_counter;
    r.submitted = Submission{dest, std::move(body), s.message_counter};
    r.response = "+CMGS: " + std::to_string(s.message_counter) + "\r\n" + std::string(responses::kOk);
    s.mode = Mode::TextMode;
    return r;
  }

  if (line == "AT") {
    r.response = responses::kOk;
  } else if (line == "AT+CMGF=1") {
    s.mode = Mode::TextMode;
    r.response = responses::kOk;
  } else if (line.starts_with("AT+CMGS=\"") && line.size() >= 11 && line.back() == '"') {
    const auto dest = line.substr(9, line.size() - 10);
    if (s.mode != Mode::TextMode || !valid_address(dest)) {
      r.response = responses::kError;
    } else {
      s.mode = Mode::AwaitingBody;
      s.pending_dest = std::string(dest);
      r.response = responses::kPrompt;
    }
  } else {
    r.response = responses::kError;
  }
  return r;
}

enum class SmsStatus { InFlight, Delivered, Lost };

inline const char* to_string(SmsStatus s) {
  switch (s) {
    case SmsStatus::InFlight: return "IN_FLIGHT";
    case SmsStatus::Delivered: return "DELIVERED";
    case SmsStatus::Lost: return "LOST";
  }
  return "?";
}

struct SmsEnvelope {
  std::string from;
  std::string to;
  std::string body;
  Instant submit_time{};
  std::optional<Instant> deliver_time;
  SmsStatus status = SmsStatus::InFlight;
  std::uint64_t sequence = 0;  // submission order, assigned by the network
};

struct SmsNetworkConfig {
  Duration latency_min{500};
  Duration latency_max{2000};
  double loss_probability = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Store-and-forward network with seeded latency and loss. Per-destination:
/// a message to two numbers is two envelopes.
class SmsNetwork {
 public:
  explicit SmsNetwork(SmsNetworkConfig cfg = {}) : cfg_(cfg), rng_(cfg.rng_seed) {
    if (cfg_.latency_max < cfg_.latency_min) cfg_.latency_max = cfg_.latency_min;
  }

  const SmsNetworkConfig& config() const { return cfg_; }

  void submit(SmsEnvelope env, Instant now) {
    env.submit_time = now;
    env.sequence = next_sequence_++;
    ++submitted_;
    // Two draws per submission, loss then latency, whether or not the message is lost.
    const double loss_draw = unit(rng_);
    const double latency_draw = unit(rng_);
    if (loss_draw < cfg_.loss_probability) {
      env.status = SmsStatus::Lost;
      env.deliver_time.reset();
      lost_.push_back(std::move(env));
      return;
    }
    const auto span = (cfg_.latency_max - cfg_.latency_min).count();
    const auto extra = static_cast<std::int64_t>(latency_draw * static_cast<double>(span + 1));
    env.deliver_time = now + cfg_.latency_min + Duration{std::min<std::int64_t>(extra, span)};
    env.status = SmsStatus::InFlight;
    in_flight_.push_back(std::move(env));
  }

  /// Envelopes due by `now`, ordered by deliver_time then submission order.
  std::vector<SmsEnvelope> deliver_due(Instant now) {
    std::vector<SmsEnvelope> due;
    auto split = std::stable_partition(in_flight_.begin(), in_flight_.end(),
                                       [&](const SmsEnvelope& e) { return *e.deliver_time > now; });
    for (auto it = split; it != in_flight_.end(); ++it) due.push_back(std::move(*it));
    in_flight_.erase(split, in_flight_.end());
    std::sort(due.begin(), due.end(), [](const SmsEnvelope& a, const SmsEnvelope& b) {
      if (*a.deliver_time != *b.deliver_time) return *a.deliver_time < *b.deliver_time;
      return a.sequence < b.sequence;
    });
    for (auto& e : due) e.status = SmsStatus::Delivered;
    delivered_ += due.size();
    return due;
  }

  std::size_t in_flight() const { return in_flight_.size(); }
  std::uint64_t submitted() const { return submitted_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t lost() const { return lost_.size(); }
  const std::vector<SmsEnvelope>& lost_envelopes() const { return lost_; }

 private:
  // 53-bit uniform in [0, 1) straight from the engine's standardized output.
  static double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

  SmsNetworkConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<SmsEnvelope> in_flight_;
  std::vector<SmsEnvelope> lost_;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t submitted_ = 0;
  std::uint64_t delivered_ = 0;
};

/// A modem wired to the network: the AT state machine plus the time it stays
/// busy transmitting after each accepted message.
class Modem {
 public:
  Modem(std::string own_number, Duration send_time) : number_(std::move(own_number)), send_time_(send_time) {}

  const std::string& number() const { return number_; }
  const ModemState& state() const { return state_; }
  bool busy(Instant now) const { return now < busy_until_; }
  Mode mode(Instant now) const { return busy(now) ? Mode::Sending : state_.mode; }

  /// Opens a send batch; false (ModemBusy) while a previous batch is still transmitting.
  bool begin_batch(Instant now) {
    if (busy(now)) return false;
    in_batch_ = true;
    batch_sends_ = 0;
    return true;
  }

  /// The modem stays busy for send_time per message accepted in the batch.
  void end_batch(Instant now) {
    in_batch_ = false;
    busy_until_ = now + send_time_ * batch_sends_;
  }

  /// Feeds one line; accepted bodies are handed to `net` at `now`.
  std::string exchange(std::string_view line, Instant now, SmsNetwork& net) {
    if (!in_batch_ && busy(now)) return std::string(responses::kError);
    auto r = handle_at_line(std::move(state_), line);
    state_ = std::move(r.state);
    transcript_ += line;
    if (line.find(kCtrlZ) == std::string_view::npos) transcript_ += '\r';
    transcript_ += r.response;
    if (r.submitted) {
      SmsEnvelope env;
      env.from = number_;
      env.to = r.submitted->to;
      env.body = r.submitted->body;
      net.submit(std::move(env), now);
      if (in_batch_) {
        ++batch_sends_;
      } else {
        busy_until_ = now + send_time_;
      }
    }
    return r.response;
  }

  const std::string& transcript() const { return transcript_; }

 private:
  std::string number_;
  Duration send_time_;
  ModemState state_;
  Instant busy_until_{};
  bool in_batch_ = false;
  int batch_sends_ = 0;
  std::string transcript_;
};

}  // namespace greenwave::modem
