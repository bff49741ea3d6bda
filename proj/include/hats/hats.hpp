#pragma once

// Histograms of Averaged Time Surfaces.
//
// The sensor is tiled into K x K cells (border cells may be smaller). Every
// event adds its local memory time surface into the histogram of its cell;
// at the end each histogram is divided by the number of events that fell in
// the cell and the histograms are concatenated cell-major, each laid out as
// (z_y, z_x, q) with q = OFF, ON.
//
// Surfaces are evaluated against per-cell memory units instead of the whole
// stream. In `faithful` mode an event is stored only in its own cell's unit,
// so neighbours across a cell border are not seen. In `exact` mode an event
// is stored in every unit whose cell, dilated by rho, contains it, which
// reproduces the full-stream surface exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <ranges>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hats/error.hpp"
#include "hats/event.hpp"
#include "hats/surface.hpp"

namespace hats {

enum class MemoryMode { Faithful, Exact };

inline std::string_view to_string(MemoryMode m) {
  return m == MemoryMode::Faithful ? "faithful" : "exact";
}

inline MemoryMode parse_memory_mode(std::string_view s) {
  if (s == "faithful") return MemoryMode::Faithful;
  if (s == "exact") return MemoryMode::Exact;
  throw Error(ErrorCode::InvalidArgument, "mode must be 'faithful' or 'exact', got '" + std::string(s) + "'");
}

struct BlockNorm {
  int cells = 2;          // block side, in cells
  double exponent = 2.0;  // p of the L_p norm
};

struct HatsParams {
  int cell_size = 10;
  SurfaceParams surface{};
  MemoryMode mode = MemoryMode::Faithful;
  std::optional<BlockNorm> block_norm;

  void validate() const {
    if (cell_size < 1) throw Error(ErrorCode::InvalidArgument, "cell size K must be >= 1");
    surface.validate();
    if (block_norm) {
      if (block_norm->cells < 1) throw Error(ErrorCode::InvalidArgument, "block size must be >= 1");
      if (!(block_norm->exponent >= 1.0))
        throw Error(ErrorCode::InvalidArgument, "block norm exponent must be >= 1");
    }
  }

  std::string fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    os << "k=" << cell_size << ";rho=" << surface.rho << ";tau=" << surface.tau
       << ";dt=" << surface.delta_t << ";mode=" << to_string(mode) << ";block=";
    if (block_norm)
      os << "l" << block_norm->exponent << ":" << block_norm->cells;
    else
      os << "off";
    return os.str();
  }
};

struct CellBounds {
  std::uint32_t x0, y0, x1, y1;  // half-open [x0, x1) x [y0, y1)
};

class CellGrid {
 public:
  CellGrid(SensorGeometry geometry, int cell_size)
      : geometry_(geometry),
        cell_size_(static_cast<std::uint32_t>(cell_size)),
        cols_((geometry.width + cell_size_ - 1) / cell_size_),
        rows_((geometry.height + cell_size_ - 1) / cell_size_) {
    check_geometry(geometry);
    if (cell_size < 1) throw Error(ErrorCode::InvalidArgument, "cell size K must be >= 1");
  }

  const SensorGeometry& geometry() const noexcept { return geometry_; }
  std::uint32_t cell_size() const noexcept { return cell_size_; }
  std::uint32_t cols() const noexcept { return cols_; }
  std::uint32_t rows() const noexcept { return rows_; }
  std::size_t cell_count() const noexcept { return std::size_t{cols_} * rows_; }

  std::size_t cell_of(std::uint32_t x, std::uint32_t y) const noexcept {
    return std::size_t{y / cell_size_} * cols_ + x / cell_size_;
  }

  CellBounds bounds(std::size_t cell) const noexcept {
    const auto r = static_cast<std::uint32_t>(cell / cols_);
    const auto c = static_cast<std::uint32_t>(cell % cols_);
    return {c * cell_size_, r * cell_size_, std::min(geometry_.width, (c + 1) * cell_size_),
            std::min(geometry_.height, (r + 1) * cell_size_)};
  }

 private:
  SensorGeometry geometry_;
  std::uint32_t cell_size_;
  std::uint32_t cols_;
  std::uint32_t rows_;
};

/// Row-major cell index: floor(y/K) * ceil(M/K) + floor(x/K).
inline std::size_t get_cell(std::int64_t x, std::int64_t y, const CellGrid& grid) {
  if (!grid.geometry().contains(x, y))
    throw Error(ErrorCode::OutOfBoundsPixel,
                "pixel (" + std::to_string(x) + "," + std::to_string(y) + ") outside the grid");
  return grid.cell_of(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
}

/// Append-at-back, drop-at-front queue over a vector.
template <typename T>
class FifoBuffer {
 public:
  void push_back(const T& v) { data_.push_back(v); }

  void pop_front() noexcept {
    ++head_;
    if (head_ == data_.size()) {
      data_.clear();
      head_ = 0;
    } else if (head_ >= 64 && head_ * 2 >= data_.size()) {
      data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  const T& front() const noexcept { return data_[head_]; }
  std::size_t size() const noexcept { return data_.size() - head_; }
  bool empty() const noexcept { return size() == 0; }
  std::span<const T> view() const noexcept { return std::span<const T>(data_).subspan(head_); }

  void clear() noexcept {
    data_.clear();
    head_ = 0;
  }

 private:
  std::vector<T> data_;
  std::size_t head_ = 0;
};

/// Recent events relevant to one cell, kept as one timestamp list per
/// (pixel, polarity) of the unit's coverage rectangle. Each insert first
/// drops every stored event older than delta_t relative to the new one.
class MemoryUnit {
 public:
  MemoryUnit() = default;
  explicit MemoryUnit(CellBounds coverage)
      : coverage_(coverage),
        width_(coverage.x1 - coverage.x0),
        lists_(std::size_t{coverage.x1 - coverage.x0} * (coverage.y1 - coverage.y0) * 2) {}

  const CellBounds& coverage() const noexcept { return coverage_; }

  bool covers(std::int64_t x, std::int64_t y) const noexcept {
    return x >= coverage_.x0 && x < coverage_.x1 && y >= coverage_.y0 && y < coverage_.y1;
  }

  void insert(const Event& e, Timestamp delta_t) {
    while (!arrivals_.empty() && arrivals_.front().first < e.t - delta_t) {
      lists_[arrivals_.front().second].pop_front();
      arrivals_.pop_front();
    }
    const auto slot = slot_of(e.x, e.y, e.p);
    lists_[slot].push_back(e.t);
    arrivals_.push_back({e.t, slot});
  }

  /// Stored timestamps for a covered pixel and polarity, oldest first.
  std::span<const Timestamp> timestamps(std::uint32_t x, std::uint32_t y, Polarity q) const noexcept {
    return lists_[slot_of(x, y, q)].view();
  }

  std::size_t size() const noexcept { return arrivals_.size(); }
  bool empty() const noexcept { return arrivals_.empty(); }

  /// Every stored event, in arrival order.
  std::vector<Event> contents() const {
    std::vector<Event> out;
    out.reserve(size());
    for (const auto& [t, slot] : arrivals_.view()) {
      const std::uint32_t pixel = slot / 2;
      out.push_back(Event{static_cast<std::uint16_t>(coverage_.x0 + pixel % width_),
                          static_cast<std::uint16_t>(coverage_.y0 + pixel / width_), t,
                          slot % 2 ? Polarity::On : Polarity::Off});
    }
    return out;
  }

  /// Adds the local memory surface of `e` into `patch` (layout of
  /// patch_index). Only covered pixels are visited.
  void accumulate_surface(const Event& e, const SurfaceParams& params, std::span<double> patch) const noexcept {
    const Timestamp oldest = e.t - params.delta_t;
    const int q = channel(e.p);
    const std::int64_t ylo = std::max<std::int64_t>(std::int64_t{e.y} - params.rho, coverage_.y0);
    const std::int64_t yhi = std::min<std::int64_t>(std::int64_t{e.y} + params.rho, std::int64_t{coverage_.y1} - 1);
    const std::int64_t xlo = std::max<std::int64_t>(std::int64_t{e.x} - params.rho, coverage_.x0);
    const std::int64_t xhi = std::min<std::int64_t>(std::int64_t{e.x} + params.rho, std::int64_t{coverage_.x1} - 1);
    for (std::int64_t y = ylo; y <= yhi; ++y) {
      for (std::int64_t x = xlo; x <= xhi; ++x) {
        const auto ts = lists_[slot_of(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), e.p)].view();
        if (ts.empty()) continue;
        double sum = 0.0;
        // Newest first: skip same-time entries, stop at the window start.
        for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
          if (*it >= e.t) continue;
          if (*it < oldest) break;
          sum += decay(e.t - *it, params.tau);
        }
        if (sum != 0.0)
          patch[patch_index(params.rho, static_cast<int>(x - e.x), static_cast<int>(y - e.y), q)] += sum;
      }
    }
  }

  void clear() noexcept {
    for (auto& l : lists_) l.clear();
    arrivals_.clear();
  }

 private:
  std::uint32_t slot_of(std::uint32_t x, std::uint32_t y, Polarity q) const noexcept {
    return ((y - coverage_.y0) * width_ + (x - coverage_.x0)) * 2 + static_cast<std::uint32_t>(channel(q));
  }

  CellBounds coverage_{0, 0, 0, 0};
  std::uint32_t width_ = 0;
  std::vector<FifoBuffer<Timestamp>> lists_;
  FifoBuffer<std::pair<Timestamp, std::uint32_t>> arrivals_;
};

inline Surface local_memory_surface(const Event& e, const MemoryUnit& memory, const SurfaceParams& params) {
  Surface s(params.rho);
  memory.accumulate_surface(e, params, s.values());
  return s;
}

/// Running (unnormalized) histogram of one cell and its event count.
struct CellAccumulator {
  std::span<const double> hist;
  std::uint64_t count = 0;
};

struct HatsDescriptor {
  std::vector<double> values;
  std::size_t cells = 0;
  std::size_t cell_dim = 0;
  std::string fingerprint;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> cell(std::size_t l) const noexcept {
    return std::span<const double>(values).subspan(l * cell_dim, cell_dim);
  }
};

inline std::size_t descriptor_dimension(SensorGeometry geometry, const HatsParams& params) {
  return CellGrid(geometry, params.cell_size).cell_count() * params.surface.size();
}

/// Divides each block of block x block adjacent cells by its L_p norm + eps.
/// Blocks tile the cell grid without overlap; border blocks may be smaller.
/// Zero blocks are left unchanged.
inline HatsDescriptor block_normalize(HatsDescriptor desc, const CellGrid& grid, int block,
                                      double exponent = 2.0) {
  constexpr double kEps = 1e-12;
  if (block < 1) throw Error(ErrorCode::InvalidArgument, "block size must be >= 1");
  if (desc.cells != grid.cell_count() || desc.values.size() != desc.cells * desc.cell_dim)
    throw Error(ErrorCode::DimensionMismatch, "descriptor does not match the cell grid");
  const auto b = static_cast<std::uint32_t>(block);
  for (std::uint32_t br = 0; br < grid.rows(); br += b) {
    for (std::uint32_t bc = 0; bc < grid.cols(); bc += b) {
      const std::uint32_t r1 = std::min(grid.rows(), br + b);
      const std::uint32_t c1 = std::min(grid.cols(), bc + b);
      double acc = 0.0;
      for (std::uint32_t r = br; r < r1; ++r)
        for (std::uint32_t c = bc; c < c1; ++c)
          for (double v : desc.cell(std::size_t{r} * grid.cols() + c))
            acc += exponent == 2.0 ? v * v : std::pow(std::abs(v), exponent);
      if (acc == 0.0) continue;
      const double norm = exponent == 2.0 ? std::sqrt(acc) : std::pow(acc, 1.0 / exponent);
      const double scale = 1.0 / (norm + kEps);
      for (std::uint32_t r = br; r < r1; ++r)
        for (std::uint32_t c = bc; c < c1; ++c) {
          const std::size_t off = (std::size_t{r} * grid.cols() + c) * desc.cell_dim;
          for (std::size_t i = 0; i < desc.cell_dim; ++i) desc.values[off + i] *= scale;
        }
    }
  }
  return desc;
}

/// Single-pass streaming HATS computation with shared memory units. Events
/// must be pushed in non-decreasing time order.
class HatsExtractor {
 public:
  HatsExtractor(SensorGeometry geometry, const HatsParams& params)
      : params_((params.validate(), params)),
        grid_(geometry, params.cell_size),
        hist_(grid_.cell_count() * params.surface.size(), 0.0),
        counts_(grid_.cell_count(), 0) {
    units_.reserve(grid_.cell_count());
    const auto rho = static_cast<std::uint32_t>(params_.surface.rho);
    for (std::size_t l = 0; l < grid_.cell_count(); ++l) {
      CellBounds b = grid_.bounds(l);
      if (params_.mode == MemoryMode::Exact) {
        b.x0 = b.x0 > rho ? b.x0 - rho : 0;
        b.y0 = b.y0 > rho ? b.y0 - rho : 0;
        b.x1 = std::min(geometry.width, b.x1 + rho);
        b.y1 = std::min(geometry.height, b.y1 + rho);
      }
      units_.emplace_back(b);
    }
  }

  const CellGrid& grid() const noexcept { return grid_; }
  const HatsParams& params() const noexcept { return params_; }
  const MemoryUnit& memory(std::size_t cell) const noexcept { return units_[cell]; }
  std::uint64_t events_seen() const noexcept { return events_seen_; }

  CellAccumulator accumulator(std::size_t cell) const noexcept {
    const std::size_t d = params_.surface.size();
    return {std::span<const double>(hist_).subspan(cell * d, d), counts_[cell]};
  }

  void push(const Event& e) {
    if (!grid_.geometry().contains(e.x, e.y))
      throw Error(ErrorCode::OutOfBoundsPixel, "event outside the grid", events_seen_);
    if (e.t < last_t_)
      throw Error(ErrorCode::NonMonotonicTimestamps, "event pushed out of time order", events_seen_);
    if (e.t < 0) throw Error(ErrorCode::NegativeTimestamp, "negative timestamp", events_seen_);
    last_t_ = e.t;
    ++events_seen_;

    const std::size_t l = grid_.cell_of(e.x, e.y);
    const std::size_t d = params_.surface.size();
    units_[l].accumulate_surface(e, params_.surface, std::span<double>(hist_).subspan(l * d, d));
    ++counts_[l];

    if (params_.mode == MemoryMode::Faithful) {
      units_[l].insert(e, params_.surface.delta_t);
      return;
    }
    const std::int64_t rho = params_.surface.rho;
    const std::int64_t k = grid_.cell_size();
    const std::int64_t c0 = std::max<std::int64_t>(0, (std::int64_t{e.x} - rho)) / k;
    const std::int64_t c1 = std::min<std::int64_t>(grid_.geometry().width - 1, std::int64_t{e.x} + rho) / k;
    const std::int64_t r0 = std::max<std::int64_t>(0, (std::int64_t{e.y} - rho)) / k;
    const std::int64_t r1 = std::min<std::int64_t>(grid_.geometry().height - 1, std::int64_t{e.y} + rho) / k;
    for (std::int64_t r = r0; r <= r1; ++r)
      for (std::int64_t c = c0; c <= c1; ++c)
        units_[static_cast<std::size_t>(r * grid_.cols() + c)].insert(e, params_.surface.delta_t);
  }

  /// Averaged, concatenated histograms (block-normalized when configured).
  HatsDescriptor descriptor() const {
    HatsDescriptor out;
    out.cells = grid_.cell_count();
    out.cell_dim = params_.surface.size();
    out.values.assign(hist_.size(), 0.0);
    out.fingerprint = params_.fingerprint();
    for (std::size_t l = 0; l < out.cells; ++l) {
      if (counts_[l] == 0) continue;
      const double n = static_cast<double>(counts_[l]);
      for (std::size_t i = l * out.cell_dim; i < (l + 1) * out.cell_dim; ++i) out.values[i] = hist_[i] / n;
    }
    if (params_.block_norm)
      out = block_normalize(std::move(out), grid_, params_.block_norm->cells, params_.block_norm->exponent);
    return out;
  }

  void reset() {
    for (auto& u : units_) u.clear();
    std::fill(hist_.begin(), hist_.end(), 0.0);
    std::fill(counts_.begin(), counts_.end(), 0);
    last_t_ = 0;
    events_seen_ = 0;
  }

 private:
  HatsParams params_;
  CellGrid grid_;
  std::vector<MemoryUnit> units_;
  std::vector<double> hist_;
  std::vector<std::uint64_t> counts_;
  Timestamp last_t_ = 0;
  std::uint64_t events_seen_ = 0;
};

/// HATS of any single-pass range of events (each element read once, in order).
template <std::ranges::input_range Events>
  requires std::convertible_to<std::ranges::range_reference_t<Events>, const Event&>
HatsDescriptor compute_hats(Events&& events, SensorGeometry geometry, const HatsParams& params) {
  HatsExtractor extractor(geometry, params);
  for (auto it = std::ranges::begin(events); it != std::ranges::end(events); ++it) {
    const Event& e = *it;
    extractor.push(e);
  }
  return extractor.descriptor();
}

inline HatsDescriptor compute_hats(const EventStream& stream, const HatsParams& params) {
  return compute_hats(stream.events(), stream.geometry(), params);
}

/// Literal evaluation by full-stream scan: every event's surface comes from
/// brute_force_surface. In faithful mode neighbours outside the event's own
/// cell are discarded. Quadratic in the event count.
inline HatsDescriptor hats_oracle(const EventStream& stream, const HatsParams& params) {
  params.validate();
  const CellGrid grid(stream.geometry(), params.cell_size);
  const std::size_t d = params.surface.size();
  std::vector<double> hist(grid.cell_count() * d, 0.0);
  std::vector<std::size_t> count(grid.cell_count(), 0);
  std::vector<Event> same_cell;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Event& e = stream[i];
    const std::size_t l = get_cell(e.x, e.y, grid);
    Surface s;
    if (params.mode == MemoryMode::Exact) {
      s = brute_force_surface(stream, i, params.surface);
    } else {
      same_cell.clear();
      for (std::size_t j = 0; j < i; ++j)
        if (get_cell(stream[j].x, stream[j].y, grid) == l) same_cell.push_back(stream[j]);
      s = local_memory_surface(e, same_cell, params.surface);
    }
    for (std::size_t k = 0; k < d; ++k) hist[l * d + k] += s.values()[k];
    ++count[l];
  }
  HatsDescriptor out;
  out.cells = grid.cell_count();
  out.cell_dim = d;
  out.fingerprint = params.fingerprint();
  out.values.assign(hist.size(), 0.0);
  for (std::size_t l = 0; l < out.cells; ++l)
    if (count[l] > 0)
      for (std::size_t k = 0; k < d; ++k) out.values[l * d + k] = hist[l * d + k] / static_cast<double>(count[l]);
  if (params.block_norm)
    out = block_normalize(std::move(out), grid, params.block_norm->cells, params.block_norm->exponent);
  return out;
}

/// Concatenation of HATS computed independently over W consecutive windows
/// of length delta_t anchored at the first event. Windows past the end of
/// the stream contribute zeros.
inline std::vector<double> stack_windows(const EventStream& stream, const HatsParams& params, int window_count) {
  if (window_count < 1) throw Error(ErrorCode::InvalidArgument, "window count must be >= 1");
  params.validate();
  const std::size_t dim = descriptor_dimension(stream.geometry(), params);
  std::vector<double> out;
  out.reserve(dim * static_cast<std::size_t>(window_count));
  HatsExtractor extractor(stream.geometry(), params);
  const Timestamp t0 = stream.first_time();
  const Timestamp dt = params.surface.delta_t;
  auto ev = stream.events();
  auto it = ev.begin();
  for (int w = 0; w < window_count; ++w) {
    const Timestamp end = t0 + dt * (w + 1);
    extractor.reset();
    for (; it != ev.end() && it->t < end; ++it) extractor.push(*it);
    const HatsDescriptor d = extractor.descriptor();
    out.insert(out.end(), d.values.begin(), d.values.end());
  }
  return out;
}

}  // namespace hats
