#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

namespace vponsim {

/// Min-queue ordered by (time, seq). `seq` is assigned on push, so events
/// scheduled for the same instant run in the order they were scheduled.
template <typename Payload, typename Time = std::int64_t>
class EventQueue {
 public:
  struct Entry {
    Time time;
    std::uint64_t seq;
    Payload payload;
  };

  std::uint64_t push(Time time, Payload payload) {
    if (time < now_) throw std::logic_error("event scheduled in the past");
    const auto seq = next_seq_++;
    heap_.push(Entry{time, seq, std::move(payload)});
    return seq;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  Time now() const { return now_; }
  const Entry& top() const { return heap_.top(); }

  Entry pop() {
    Entry e = heap_.top();
    heap_.pop();
    if (e.time < now_) throw std::logic_error("event queue went backwards in time");
    now_ = e.time;
    return e;
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  Time now_{};
};

}  // namespace vponsim
