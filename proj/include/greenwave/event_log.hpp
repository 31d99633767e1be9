#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "greenwave/time.hpp"

namespace greenwave {

enum class EventKind {
  MsgReceived,
  TrackUpdated,
  RouteSet,
  PreemptSent,
  ReleaseSent,
  SignalChanged,
  Arrived,
  OperatorAction,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::MsgReceived: return "MSG_RECEIVED";
    case EventKind::TrackUpdated: return "TRACK_UPDATED";
    case EventKind::RouteSet: return "ROUTE_SET";
    case EventKind::PreemptSent: return "PREEMPT_SENT";
    case EventKind::ReleaseSent: return "RELEASE_SENT";
    case EventKind::SignalChanged: return "SIGNAL_CHANGED";
    case EventKind::Arrived: return "ARRIVED";
    case EventKind::OperatorAction: return "OPERATOR_ACTION";
  }
  return "?";
}

struct EventRecord {
  std::uint64_t seq = 0;
  Instant time{};
  EventKind kind = EventKind::MsgReceived;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const {
    return nlohmann::json{{"seq", seq}, {"time_s", to_seconds(time)}, {"kind", to_string(kind)},
                          {"payload", payload}};
  }
};

/// Append-only log, gapless sequence numbers from 0. One writer, many readers;
/// readers may block until records past a sequence number exist.
class EventLog {
 public:
  std::uint64_t append(Instant time, EventKind kind, nlohmann::json payload) {
    std::uint64_t seq;
    {
      std::unique_lock lock(mutex_);
      seq = records_.size();
      records_.push_back(EventRecord{seq, time, kind, std::move(payload)});
    }
    { std::lock_guard wake(wait_mutex_); }
    cv_.notify_all();
    return seq;
  }

  /// Records with seq >= from_seq, in order.
  std::vector<EventRecord> read(std::uint64_t from_seq) const {
    std::shared_lock lock(mutex_);
    if (from_seq >= records_.size()) return {};
    return {records_.begin() + static_cast<std::ptrdiff_t>(from_seq), records_.end()};
  }

  /// Like read, but waits up to `timeout` for at least one record.
  std::vector<EventRecord> wait_and_read(std::uint64_t from_seq, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(wait_mutex_);
    cv_.wait_for(lock, timeout, [&] { return size() > from_seq; });
    return read(from_seq);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
  }

  /// Line-delimited JSON, one record per line.
  void write_jsonl(std::ostream& out, std::uint64_t from_seq = 0) const {
    for (const auto& r : read(from_seq)) out << r.to_json().dump() << '\n';
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : read(0)) {
      out += r.to_json().dump();
      out += '\n';
    }
    return out;
  }

  bool write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) return false;
    write_jsonl(f);
    return static_cast<bool>(f);
  }

 private:
  mutable std::shared_mutex mutex_;
  mutable std::mutex wait_mutex_;
  mutable std::condition_variable cv_;
  std::vector<EventRecord> records_;
};

}  // namespace greenwave
