#pragma once

// Feature matrix file (little-endian):
//   "HATSFTR1" | u32 samples | u32 dimension | samples x dimension f64, row-major
// Sidecar label file: samples x u32 class id, nothing else.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hats/error.hpp"
#include "hats/event_io.hpp"

namespace hats {

class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }
  std::span<double> row(std::size_t i) noexcept { return std::span<double>(data_).subspan(i * cols_, cols_); }
  std::span<const double> data() const noexcept { return data_; }

  void append_row(std::span<const double> values) {
    if (rows_ == 0 && data_.empty()) cols_ = values.size();
    if (values.size() != cols_)
      throw Error(ErrorCode::DimensionMismatch,
                  "row of length " + std::to_string(values.size()) + " in a matrix of width " + std::to_string(cols_));
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  FeatureMatrix select(std::span<const std::size_t> indices) const {
    FeatureMatrix out(0, cols_);
    out.data_.reserve(indices.size() * cols_);
    for (std::size_t i : indices) out.append_row(row(i));
    return out;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr std::string_view kFeatureMagic = "HATSFTR1";

inline std::string encode_features(const FeatureMatrix& m) {
  std::string out(kFeatureMagic);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(out.size() + m.data().size() * 8);
  for (double v : m.data()) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline FeatureMatrix decode_features(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kFeatureMagic)
    throw Error(ErrorCode::MalformedHeader, "missing HATSFTR1 header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t rows = detail::get_le<std::uint32_t>(p + 8);
  const std::size_t cols = detail::get_le<std::uint32_t>(p + 12);
  if (bytes.size() - 16 != rows * cols * 8)
    throw Error(ErrorCode::TruncatedRecord, "feature payload does not match " + std::to_string(rows) + "x" +
                                                std::to_string(cols));
  FeatureMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = m.row(r);
    for (std::size_t c = 0; c < cols; ++c)
      dst[c] = std::bit_cast<double>(detail::get_le<std::uint64_t>(p + 16 + (r * cols + c) * 8));
  }
  return m;
}

inline std::string encode_labels(std::span<const std::uint32_t> labels) {
  std::string out;
  out.reserve(labels.size() * 4);
  for (std::uint32_t l : labels) detail::put_le<std::uint32_t>(out, l);
  return out;
}

inline std::vector<std::uint32_t> decode_labels(std::string_view bytes) {
  if (bytes.size() % 4 != 0) throw Error(ErrorCode::TruncatedRecord, "label file is not a multiple of 4 bytes");
  std::vector<std::uint32_t> out(bytes.size() / 4);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::get_le<std::uint32_t>(p + 4 * i);
  return out;
}

/// Sidecar path for a feature file: "<path>.labels".
inline std::filesystem::path label_path_for(const std::filesystem::path& features) {
  return std::filesystem::path(features.string() + ".labels");
}

inline void write_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_file(path, encode_features(m));
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return decode_features(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.message()), e.index());
  }
}

inline void write_labels(std::span<const std::uint32_t> labels, const std::filesystem::path& path) {
  detail::write_file(path, encode_labels(labels));
}

inline std::vector<std::uint32_t> read_labels(const std::filesystem::path& path) {
  return decode_labels(detail::read_file(path));
}

}  // namespace hats
