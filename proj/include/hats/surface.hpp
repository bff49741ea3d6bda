#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hats/error.hpp"
#include "hats/event.hpp"

namespace hats {

struct SurfaceParams {
  int rho = 3;                  // neighbourhood radius, pixels
  double tau = 1e9;             // decay constant, us
  Timestamp delta_t = 100'000;  // past window length, us

  int side() const noexcept { return 2 * rho + 1; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side()) * 2;
  }

  void validate() const {
    if (rho < 0) throw Error(ErrorCode::InvalidArgument, "rho must be >= 0");
    if (rho > 255) throw Error(ErrorCode::InvalidArgument, "rho must be <= 255");
    if (!(tau > 0.0) || !std::isfinite(tau))
      throw Error(ErrorCode::InvalidArgument, "tau must be a positive finite number");
    if (delta_t <= 0) throw Error(ErrorCode::InvalidArgument, "delta_t must be > 0");
  }
};

/// Index of entry (zx, zy, q) in a (2rho+1)^2 x 2 patch laid out as
/// (z_y, z_x, q) with q = OFF, ON. Shared by surfaces and cell histograms.
constexpr std::size_t patch_index(int rho, int zx, int zy, int q_channel) noexcept {
  const int side = 2 * rho + 1;
  return (static_cast<std::size_t>(zy + rho) * side + static_cast<std::size_t>(zx + rho)) * 2 +
         static_cast<std::size_t>(q_channel);
}

/// Dense (2rho+1) x (2rho+1) x 2 patch of non-negative values.
class Surface {
 public:
  Surface() = default;
  explicit Surface(int rho) : rho_(rho), values_(SurfaceParams{rho, 1.0, 1}.size(), 0.0) {}

  int rho() const noexcept { return rho_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double at(int zx, int zy, Polarity q) const noexcept {
    return values_[patch_index(rho_, zx, zy, channel(q))];
  }
  double& at(int zx, int zy, Polarity q) noexcept {
    return values_[patch_index(rho_, zx, zy, channel(q))];
  }

  /// Sum of the entries on one polarity channel.
  double channel_sum(Polarity q) const noexcept {
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(channel(q)); i < values_.size(); i += 2) s += values_[i];
    return s;
  }

  friend bool operator==(const Surface&, const Surface&) = default;

 private:
  int rho_ = 0;
  std::vector<double> values_;
};

/// Per-pixel, per-polarity time of the most recent event.
class PixelLastTime {
 public:
  static constexpr Timestamp kNever = -1;

  explicit PixelLastTime(SensorGeometry geometry)
      : geometry_(geometry),
        last_(static_cast<std::size_t>(geometry.width) * geometry.height * 2, kNever) {}

  const SensorGeometry& geometry() const noexcept { return geometry_; }

  Timestamp last(std::uint32_t x, std::uint32_t y, Polarity q) const noexcept {
    return last_[slot(x, y, q)];
  }

  void update(const Event& e) noexcept { last_[slot(e.x, e.y, e.p)] = e.t; }

 private:
  std::size_t slot(std::uint32_t x, std::uint32_t y, Polarity q) const noexcept {
    return (static_cast<std::size_t>(y) * geometry_.width + x) * 2 + static_cast<std::size_t>(channel(q));
  }

  SensorGeometry geometry_;
  std::vector<Timestamp> last_;
};

inline double decay(Timestamp age, double tau) noexcept {
  return std::exp(-static_cast<double>(age) / tau);
}

/// Last-event time surface: each neighbour contributes only its most recent
/// event of the same polarity. `state` must reflect the events strictly
/// before `e`. Pixels that never fired and off-grid offsets are 0.
inline Surface last_event_surface(const Event& e, const PixelLastTime& state,
                                  const SurfaceParams& params) {
  Surface s(params.rho);
  const SensorGeometry& g = state.geometry();
  for (int zy = -params.rho; zy <= params.rho; ++zy) {
    const std::int64_t y = std::int64_t{e.y} + zy;
    for (int zx = -params.rho; zx <= params.rho; ++zx) {
      const std::int64_t x = std::int64_t{e.x} + zx;
      if (!g.contains(x, y)) continue;
      const Timestamp last = state.last(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), e.p);
      if (last == PixelLastTime::kNever) continue;
      s.at(zx, zy, e.p) = decay(e.t - last, params.tau);
    }
  }
  return s;
}

/// True when `other` belongs to the spatio-temporal neighbourhood of `e`:
/// same polarity, within rho on both axes, t in [t_e - delta_t, t_e).
inline bool in_neighbourhood(const Event& e, const Event& other,
                             const SurfaceParams& params) noexcept {
  if (other.p != e.p) return false;
  if (other.t >= e.t || other.t < e.t - params.delta_t) return false;
  const int dx = int{other.x} - int{e.x};
  const int dy = int{other.y} - int{e.y};
  return dx >= -params.rho && dx <= params.rho && dy >= -params.rho && dy <= params.rho;
}

/// Local memory time surface of `e` over a plain store of past events: the
/// sum of exp(-(t_e - t_j)/tau) over every stored neighbour. Store entries
/// outside the neighbourhood are ignored, so the store may hold more.
inline Surface local_memory_surface(const Event& e, std::span<const Event> memory,
                                    const SurfaceParams& params) {
  Surface s(params.rho);
  for (const Event& m : memory) {
    if (!in_neighbourhood(e, m, params)) continue;
    s.at(int{m.x} - int{e.x}, int{m.y} - int{e.y}, e.p) += decay(e.t - m.t, params.tau);
  }
  return s;
}

/// Reference local memory surface by exhaustive scan of every event that
/// precedes `index` in the stream. Quadratic; meant for oracles.
inline Surface brute_force_surface(const EventStream& stream, std::size_t index,
                                   const SurfaceParams& params) {
  const Event& e = stream[index];
  return local_memory_surface(e, stream.events().first(index), params);
}

}  // namespace hats
