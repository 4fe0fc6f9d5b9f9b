#pragma once

#include <algorithm>
#include <iostream>
#include <vector>

#include "ghp/common.hpp"

namespace ghp {

struct Event {
  double time = 0.0;
  int type = 0;
};

// A finite realization of a marked point process on [0, horizon].
// Events are kept sorted by time; type indices live in [0, num_types).
struct EventSequence {
  double horizon = 0.0;
  int num_types = 0;
  std::vector<Event> events;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
};

// Throws on malformed input; equal timestamps are tolerated (kept in stable
// order) because data files may carry ties even though the process itself
// produces none almost surely.
inline void validate_sequence(const EventSequence& seq, bool warn_on_ties = false) {
  if (seq.horizon <= 0.0) throw std::invalid_argument("event sequence: horizon must be positive");
  if (seq.num_types < 0) throw std::invalid_argument("event sequence: negative type count");
  double prev = 0.0;
  bool ties = false;
  for (const Event& e : seq.events) {
    if (!(e.time >= 0.0) || e.time > seq.horizon)
      throw std::invalid_argument("event sequence: event time outside [0, T]");
    if (e.type < 0 || e.type >= seq.num_types)
      throw std::invalid_argument("event sequence: type index out of range");
    if (e.time < prev) throw std::invalid_argument("event sequence: events not sorted by time");
    if (e.time == prev && &e != seq.events.data()) ties = true;
    prev = e.time;
  }
  if (ties && warn_on_ties)
    std::cerr << "warning: event sequence contains tied timestamps; stable order kept\n";
}

// Per-type view of the counting process: one sorted time list per declared
// type, empty lists included.
inline std::vector<std::vector<double>> times_by_type(const EventSequence& seq) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(seq.num_types));
  for (const Event& e : seq.events) out[static_cast<std::size_t>(e.type)].push_back(e.time);
  return out;
}

inline int distinct_type_count(const EventSequence& seq) {
  std::vector<char> seen(static_cast<std::size_t>(seq.num_types), 0);
  int n = 0;
  for (const Event& e : seq.events) {
    if (!seen[static_cast<std::size_t>(e.type)]) {
      seen[static_cast<std::size_t>(e.type)] = 1;
      ++n;
    }
  }
  return n;
}

}  // namespace ghp
