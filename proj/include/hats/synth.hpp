#pragma once

// Deterministic synthetic event streams: moving edges/bars plus uniform
// Poisson noise. All randomness comes from SplitMix64 (see random.hpp).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hats/error.hpp"
#include "hats/event.hpp"
#include "hats/random.hpp"

namespace hats {

enum class EdgePattern { Vertical, Horizontal, Diagonal };

inline EdgePattern parse_edge_pattern(std::string_view s) {
  if (s == "vertical-edge" || s == "vertical") return EdgePattern::Vertical;
  if (s == "horizontal-edge" || s == "horizontal") return EdgePattern::Horizontal;
  if (s == "diagonal-edge" || s == "diagonal") return EdgePattern::Diagonal;
  throw Error(ErrorCode::InvalidArgument, "unknown pattern '" + std::string(s) + "'");
}

/// A straight edge sweeping across the sensor. The edge line is x = pos
/// (vertical), y = pos (horizontal) or x + y = pos (diagonal), with
/// pos(t) = offset + velocity * t. A pixel fires when the edge passes its
/// coordinate. With bar_width > 0 a trailing edge follows the leading one at
/// that distance; the leading edge emits ON events, the trailing edge OFF.
struct SceneSpec {
  SensorGeometry geometry{32, 32};
  EdgePattern pattern = EdgePattern::Vertical;
  double velocity = 1000.0;  // pixels per second, signed
  Timestamp duration = 100'000;
  int events_per_crossing = 1;
  double bar_width = 0.0;  // pixels; 0 = single edge
  double offset = 0.0;     // leading-edge position at t = 0, pixels
  Timestamp jitter = 0;    // each event delayed by U{0..jitter} us
  std::uint64_t seed = 0;

  void validate() const {
    check_geometry(geometry);
    if (duration <= 0) throw Error(ErrorCode::InvalidArgument, "scene duration must be > 0");
    if (!(std::abs(velocity) > 0.0) || !std::isfinite(velocity))
      throw Error(ErrorCode::InvalidArgument, "scene velocity must be non-zero");
    if (events_per_crossing < 1) throw Error(ErrorCode::InvalidArgument, "events per crossing must be >= 1");
    if (bar_width < 0.0) throw Error(ErrorCode::InvalidArgument, "bar width must be >= 0");
    if (jitter < 0) throw Error(ErrorCode::InvalidArgument, "jitter must be >= 0");
  }
};

struct NoiseSpec {
  double rate = 0.0;  // events per second over the whole array
  std::uint64_t seed = 0;
};

namespace detail {

inline void sort_by_time(std::vector<Event>& events) {
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
}

}  // namespace detail

inline EventStream generate_scene(const SceneSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const double dir = spec.velocity > 0 ? 1.0 : -1.0;
  std::vector<Event> events;

  auto emit = [&](std::uint32_t x, std::uint32_t y, double coord, double edge_offset, Polarity p) {
    // pos(t) = offset - edge_offset + v t  ==  coord
    const double t_cross = (coord - (spec.offset - edge_offset)) / spec.velocity * 1e6;
    if (!(t_cross >= -0.5)) return;
    const auto t0 = static_cast<Timestamp>(std::llround(t_cross));
    if (t0 < 0 || t0 >= spec.duration) return;
    for (int k = 0; k < spec.events_per_crossing; ++k) {
      const Timestamp t = t0 + (spec.jitter > 0 ? static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(spec.jitter) + 1)) : 0);
      if (t >= spec.duration) continue;
      events.push_back(Event{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t, p});
    }
  };

  for (std::uint32_t y = 0; y < spec.geometry.height; ++y) {
    for (std::uint32_t x = 0; x < spec.geometry.width; ++x) {
      double coord = 0.0;
      switch (spec.pattern) {
        case EdgePattern::Vertical: coord = x; break;
        case EdgePattern::Horizontal: coord = y; break;
        case EdgePattern::Diagonal: coord = double(x) + double(y); break;
      }
      emit(x, y, coord, 0.0, Polarity::On);
      if (spec.bar_width > 0.0) emit(x, y, coord, dir * spec.bar_width, Polarity::Off);
    }
  }
  detail::sort_by_time(events);
  return EventStream::trusted(spec.geometry, std::move(events));
}

/// Uniform Poisson process on [t_begin, t_end]: uniform pixel and polarity,
/// timestamps floored to whole microseconds.
inline std::vector<Event> poisson_noise(SensorGeometry geometry, Timestamp t_begin, Timestamp t_end,
                                        const NoiseSpec& noise) {
  if (noise.rate < 0.0 || !std::isfinite(noise.rate))
    throw Error(ErrorCode::InvalidArgument, "noise rate must be a finite value >= 0");
  std::vector<Event> out;
  if (noise.rate == 0.0 || t_end < t_begin) return out;
  SplitMix64 rng(noise.seed);
  const double mean_gap = 1e6 / noise.rate;
  const double end = static_cast<double>(t_end);
  for (double t = static_cast<double>(t_begin) + rng.exponential(mean_gap); t <= end;
       t += rng.exponential(mean_gap)) {
    const auto x = static_cast<std::uint16_t>(rng.below(geometry.width));
    const auto y = static_cast<std::uint16_t>(rng.below(geometry.height));
    const Polarity p = rng.below(2) ? Polarity::On : Polarity::Off;
    out.push_back(Event{x, y, static_cast<Timestamp>(std::floor(t)), p});
  }
  return out;
}

/// Time-ordered merge; on equal timestamps events of `base` come first.
inline EventStream merge_events(const EventStream& base, std::span<const Event> extra) {
  std::vector<Event> merged;
  merged.reserve(base.size() + extra.size());
  auto ev = base.events();
  std::merge(ev.begin(), ev.end(), extra.begin(), extra.end(), std::back_inserter(merged),
             [](const Event& a, const Event& b) { return a.t < b.t; });
  return EventStream::trusted(base.geometry(), std::move(merged), base.label());
}

/// Adds uniform Poisson noise over [t_first, t_last]; original events are kept
/// and come before injected ones at equal timestamps.
inline EventStream inject_noise(const EventStream& stream, const NoiseSpec& noise) {
  auto injected = poisson_noise(stream.geometry(), stream.first_time(), stream.last_time(), noise);
  if (stream.empty() || injected.empty()) return stream;
  return merge_events(stream, injected);
}

struct DatasetOptions {
  Timestamp duration = 100'000;
  double min_speed = 250.0;  // pixels per second
  double max_speed = 600.0;
  double max_lead_in = 15.0;  // pixels the leading edge may start outside the array
  double min_bar = 3.0;
  double max_bar = 8.0;
  Timestamp jitter = 200;
};

/// Class 0: horizontal edges (moving along y). Class 1: vertical edges
/// (moving along x). Samples alternate 0, 1, 0, 1, ...; speed, direction,
/// bar width and lead-in distance are drawn per sample, then noise is added.
inline std::vector<EventStream> two_class_dataset(std::size_t n_per_class, SensorGeometry geometry,
                                                  const NoiseSpec& noise, std::uint64_t seed,
                                                  const DatasetOptions& options = {}) {
  if (n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  check_geometry(geometry);
  std::vector<EventStream> out;
  out.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const std::uint32_t label = static_cast<std::uint32_t>(i % 2);
    SplitMix64 rng(derive_seed(seed, i));
    SceneSpec scene;
    scene.geometry = geometry;
    scene.pattern = label == 0 ? EdgePattern::Horizontal : EdgePattern::Vertical;
    const double extent = label == 0 ? geometry.height : geometry.width;
    const double speed = rng.uniform(options.min_speed, options.max_speed);
    const bool forward = rng.below(2) == 0;
    const double lead_in = rng.uniform(0.0, options.max_lead_in);
    scene.velocity = forward ? speed : -speed;
    scene.offset = forward ? -lead_in : (extent - 1.0) + lead_in;
    scene.bar_width = rng.uniform(options.min_bar, options.max_bar);
    scene.duration = options.duration;
    scene.jitter = options.jitter;
    scene.seed = rng.next();
    const EventStream clean = generate_scene(scene);
    // Noise covers the whole recording, including the time before the edge
    // enters the array.
    const NoiseSpec sample_noise{noise.rate, derive_seed(noise.seed ^ seed, i)};
    EventStream noisy = merge_events(clean, poisson_noise(geometry, 0, options.duration - 1, sample_noise));
    out.push_back(noisy.with_label(label));
  }
  return out;
}

}  // namespace hats
