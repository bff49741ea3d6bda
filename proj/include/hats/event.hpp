#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hats/error.hpp"

namespace hats {

using Timestamp = std::int64_t;  // microseconds

inline constexpr Timestamp kTimestampMax = std::numeric_limits<Timestamp>::max();

enum class Polarity : std::int8_t { Off = -1, On = +1 };

/// 0 for OFF, 1 for ON. Used for the fixed (q) axis of surfaces/descriptors.
constexpr int channel(Polarity p) noexcept { return p == Polarity::On ? 1 : 0; }

constexpr int sign(Polarity p) noexcept { return static_cast<int>(p); }

struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Timestamp t = 0;
  Polarity p = Polarity::On;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Unchecked record as read from an external source, before validation.
struct RawEvent {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t t = 0;
  int p = 1;
};

struct SensorGeometry {
  std::uint32_t width = 1;
  std::uint32_t height = 1;

  bool contains(std::int64_t x, std::int64_t y) const noexcept {
    return x >= 0 && y >= 0 && x < static_cast<std::int64_t>(width) &&
           y < static_cast<std::int64_t>(height);
  }

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

inline void check_geometry(const SensorGeometry& g) {
  if (g.width < 1 || g.height < 1)
    throw Error(ErrorCode::InvalidGeometry, "width and height must be >= 1");
  if (g.width > 65536 || g.height > 65536)
    throw Error(ErrorCode::InvalidGeometry, "width and height must be <= 65536");
}

/// Time-ordered, bounds-checked event sequence. Immutable once built; the
/// only ways to obtain one are validate_stream and the operations below,
/// all of which preserve the invariants.
class EventStream {
 public:
  EventStream() = default;

  const SensorGeometry& geometry() const noexcept { return geometry_; }
  std::span<const Event> events() const noexcept { return events_; }
  const std::optional<std::uint32_t>& label() const noexcept { return label_; }

  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const Event& operator[](std::size_t i) const noexcept { return events_[i]; }
  auto begin() const noexcept { return events_.begin(); }
  auto end() const noexcept { return events_.end(); }

  Timestamp first_time() const noexcept { return empty() ? 0 : events_.front().t; }
  Timestamp last_time() const noexcept { return empty() ? 0 : events_.back().t; }

  EventStream with_label(std::optional<std::uint32_t> label) const {
    EventStream s = *this;
    s.label_ = label;
    return s;
  }

  friend bool operator==(const EventStream&, const EventStream&) = default;

  /// Wraps events already known to satisfy the invariants. Internal use by
  /// operations that provably preserve them; prefer validate_stream.
  static EventStream trusted(SensorGeometry geometry, std::vector<Event> events,
                             std::optional<std::uint32_t> label = std::nullopt) {
    EventStream s;
    s.geometry_ = geometry;
    s.events_ = std::move(events);
    s.label_ = label;
    return s;
  }

 private:
  SensorGeometry geometry_{};
  std::vector<Event> events_;
  std::optional<std::uint32_t> label_;
};

inline Event checked_event(const RawEvent& r, const SensorGeometry& g,
                           std::size_t index) {
  if (r.p != 1 && r.p != -1)
    throw Error(ErrorCode::InvalidPolarity,
                "polarity " + std::to_string(r.p) + " at index " + std::to_string(index),
                index);
  if (r.t < 0)
    throw Error(ErrorCode::NegativeTimestamp,
                "timestamp " + std::to_string(r.t) + " at index " + std::to_string(index),
                index);
  if (!g.contains(r.x, r.y))
    throw Error(ErrorCode::OutOfBoundsPixel,
                "pixel (" + std::to_string(r.x) + "," + std::to_string(r.y) +
                    ") at index " + std::to_string(index) + " outside " +
                    std::to_string(g.width) + "x" + std::to_string(g.height),
                index);
  return Event{static_cast<std::uint16_t>(r.x), static_cast<std::uint16_t>(r.y), r.t,
               r.p > 0 ? Polarity::On : Polarity::Off};
}

/// Checks every stream invariant and rejects (never reorders) on violation.
inline EventStream validate_stream(std::span<const RawEvent> raw, SensorGeometry geometry,
                                   std::optional<std::uint32_t> label = std::nullopt) {
  check_geometry(geometry);
  std::vector<Event> events;
  events.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Event e = checked_event(raw[i], geometry, i);
    if (!events.empty() && e.t < events.back().t)
      throw Error(ErrorCode::NonMonotonicTimestamps,
                  "timestamp " + std::to_string(e.t) + " at index " + std::to_string(i) +
                      " precedes " + std::to_string(events.back().t),
                  i);
    events.push_back(e);
  }
  return EventStream::trusted(geometry, std::move(events), label);
}

inline EventStream validate_stream(std::span<const Event> events, SensorGeometry geometry,
                                   std::optional<std::uint32_t> label = std::nullopt) {
  std::vector<RawEvent> raw;
  raw.reserve(events.size());
  for (const Event& e : events) raw.push_back({e.x, e.y, e.t, sign(e.p)});
  return validate_stream(std::span<const RawEvent>(raw), geometry, label);
}

/// Events with t in [t_start, t_end), order, geometry and label preserved.
inline EventStream slice_window(const EventStream& stream, Timestamp t_start,
                                Timestamp t_end) {
  if (t_start > t_end)
    throw Error(ErrorCode::InvalidArgument, "slice_window requires t_start <= t_end");
  auto ev = stream.events();
  auto by_time = [](const Event& e, Timestamp t) { return e.t < t; };
  auto lo = std::lower_bound(ev.begin(), ev.end(), t_start, by_time);
  auto hi = std::lower_bound(lo, ev.end(), t_end, by_time);
  return EventStream::trusted(stream.geometry(), std::vector<Event>(lo, hi), stream.label());
}

/// Shifts every event by (dx, dy, dt).
inline EventStream transform(const EventStream& stream, std::int64_t dx, std::int64_t dy,
                             Timestamp dt) {
  const SensorGeometry& g = stream.geometry();
  std::vector<Event> out;
  out.reserve(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Event& e = stream[i];
    const std::int64_t x = std::int64_t{e.x} + dx;
    const std::int64_t y = std::int64_t{e.y} + dy;
    if (!g.contains(x, y))
      throw Error(ErrorCode::OutOfBoundsPixel,
                  "translated pixel (" + std::to_string(x) + "," + std::to_string(y) +
                      ") at index " + std::to_string(i),
                  i);
    if (dt > 0 && e.t > kTimestampMax - dt)
      throw Error(ErrorCode::InvalidArgument, "timestamp overflow", i);
    const Timestamp t = e.t + dt;
    if (t < 0)
      throw Error(ErrorCode::NegativeTimestamp,
                  "translated timestamp " + std::to_string(t) + " at index " + std::to_string(i),
                  i);
    out.push_back(Event{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t, e.p});
  }
  return EventStream::trusted(g, std::move(out), stream.label());
}

}  // namespace hats
