#pragma once

// Event file formats.
//
// canonical-binary (little-endian):
//   "HATSEVT1" | u16 width | u16 height | u64 count | count x 13-byte records
//   record: u16 x | u16 y | u64 t (us) | i8 p (+1 / -1)
//   A stored width or height of 0 means 65536.
// csv:
//   header line "x,y,t,p", then one decimal record per line.
// nmnist (read only):
//   5 bytes per event: x | y | p:1 t:23 (big-endian), p bit 1 -> ON.

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hats/error.hpp"
#include "hats/event.hpp"

namespace hats {

enum class EventFormat { CanonicalBinary, Csv, Nmnist };

inline EventFormat parse_event_format(std::string_view name) {
  if (name == "canonical" || name == "canonical-binary" || name == "binary" || name == "hev") return EventFormat::CanonicalBinary;
  if (name == "csv") return EventFormat::Csv;
  if (name == "nmnist") return EventFormat::Nmnist;
  throw Error(ErrorCode::InvalidArgument, "unknown event format '" + std::string(name) + "'");
}

inline std::string_view to_string(EventFormat f) {
  switch (f) {
    case EventFormat::CanonicalBinary: return "canonical-binary";
    case EventFormat::Csv: return "csv";
    case EventFormat::Nmnist: return "nmnist";
  }
  return "unknown";
}

inline constexpr std::string_view kEventMagic = "HATSEVT1";
inline constexpr std::size_t kEventHeaderBytes = 8 + 2 + 2 + 8;
inline constexpr std::size_t kEventRecordBytes = 13;
inline constexpr SensorGeometry kNmnistGeometry{34, 34};

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | p[i]);
  return static_cast<T>(u);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

inline std::int64_t parse_int(std::string_view field, std::size_t line) {
  if (field.empty())
    throw Error(ErrorCode::TruncatedRecord, "empty field on line " + std::to_string(line), line);
  std::int64_t value = 0;
  bool negative = false;
  std::size_t i = 0;
  if (field[0] == '-' || field[0] == '+') {
    negative = field[0] == '-';
    i = 1;
  }
  if (i == field.size())
    throw Error(ErrorCode::TruncatedRecord, "bad integer on line " + std::to_string(line), line);
  for (; i < field.size(); ++i) {
    const char c = field[i];
    if (c < '0' || c > '9')
      throw Error(ErrorCode::TruncatedRecord,
                  "bad integer '" + std::string(field) + "' on line " + std::to_string(line), line);
    value = value * 10 + (c - '0');
  }
  return negative ? -value : value;
}

}  // namespace detail

inline std::string encode_canonical(const EventStream& stream) {
  std::string out;
  out.reserve(kEventHeaderBytes + stream.size() * kEventRecordBytes);
  out.append(kEventMagic);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.geometry().width));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.geometry().height));
  detail::put_le<std::uint64_t>(out, stream.size());
  for (const Event& e : stream) {
    detail::put_le<std::uint16_t>(out, e.x);
    detail::put_le<std::uint16_t>(out, e.y);
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.t));
    out.push_back(static_cast<char>(static_cast<std::int8_t>(sign(e.p))));
  }
  return out;
}

inline EventStream decode_canonical(std::string_view bytes) {
  if (bytes.size() < kEventHeaderBytes || bytes.substr(0, 8) != kEventMagic)
    throw Error(ErrorCode::MalformedHeader, "missing HATSEVT1 header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t w = detail::get_le<std::uint16_t>(p + 8);
  const std::uint32_t h = detail::get_le<std::uint16_t>(p + 10);
  const std::uint64_t count = detail::get_le<std::uint64_t>(p + 12);
  const SensorGeometry geometry{w == 0 ? 65536u : w, h == 0 ? 65536u : h};
  const std::size_t payload = bytes.size() - kEventHeaderBytes;
  if (count > payload / kEventRecordBytes)
    throw Error(ErrorCode::TruncatedRecord,
                "header declares " + std::to_string(count) + " events, payload holds " +
                    std::to_string(payload / kEventRecordBytes),
                static_cast<std::size_t>(payload / kEventRecordBytes));
  if (payload != count * kEventRecordBytes)
    throw Error(ErrorCode::MalformedHeader, "trailing bytes after declared records");
  std::vector<RawEvent> raw(count);
  const unsigned char* rec = p + kEventHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i, rec += kEventRecordBytes) {
    const std::uint64_t t = detail::get_le<std::uint64_t>(rec + 4);
    raw[i] = RawEvent{detail::get_le<std::uint16_t>(rec), detail::get_le<std::uint16_t>(rec + 2),
                      t > static_cast<std::uint64_t>(kTimestampMax) ? -1 : static_cast<std::int64_t>(t),
                      static_cast<int>(static_cast<std::int8_t>(rec[12]))};
  }
  return validate_stream(std::span<const RawEvent>(raw), geometry);
}

inline std::string encode_csv(const EventStream& stream) {
  std::string out = "x,y,t,p\n";
  out.reserve(out.size() + stream.size() * 16);
  for (const Event& e : stream) {
    out += std::to_string(e.x);
    out += ',';
    out += std::to_string(e.y);
    out += ',';
    out += std::to_string(e.t);
    out += ',';
    out += std::to_string(sign(e.p));
    out += '\n';
  }
  return out;
}

/// CSV carries no geometry; when none is given it is inferred as the
/// bounding box (max x + 1, max y + 1).
inline EventStream decode_csv(std::string_view text,
                              std::optional<SensorGeometry> geometry = std::nullopt) {
  std::vector<RawEvent> raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != "x,y,t,p")
        throw Error(ErrorCode::MalformedHeader, "expected header 'x,y,t,p'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    std::array<std::string_view, 4> fields;
    std::size_t n = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      if (n == fields.size())
        throw Error(ErrorCode::TruncatedRecord, "too many fields on line " + std::to_string(line_no), line_no);
      fields[n++] = line.substr(0, comma);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (n != 4)
      throw Error(ErrorCode::TruncatedRecord, "expected 4 fields on line " + std::to_string(line_no), line_no);
    raw.push_back(RawEvent{detail::parse_int(fields[0], line_no), detail::parse_int(fields[1], line_no),
                           detail::parse_int(fields[2], line_no),
                           static_cast<int>(detail::parse_int(fields[3], line_no))});
  }
  if (!header_seen) throw Error(ErrorCode::MalformedHeader, "empty csv");
  if (!geometry) {
    std::int64_t w = 1, h = 1;
    for (const RawEvent& r : raw) {
      w = std::max(w, r.x + 1);
      h = std::max(h, r.y + 1);
    }
    geometry = SensorGeometry{static_cast<std::uint32_t>(std::clamp<std::int64_t>(w, 1, 65536)),
                              static_cast<std::uint32_t>(std::clamp<std::int64_t>(h, 1, 65536))};
  }
  return validate_stream(std::span<const RawEvent>(raw), *geometry);
}

inline RawEvent decode_nmnist_record(const unsigned char* rec) {
  const std::int64_t t = (std::int64_t{rec[2] & 0x7F} << 16) | (std::int64_t{rec[3]} << 8) | rec[4];
  return RawEvent{rec[0], rec[1], t, (rec[2] & 0x80) ? 1 : -1};
}

inline EventStream decode_nmnist(std::string_view bytes,
                                 SensorGeometry geometry = kNmnistGeometry) {
  if (bytes.size() % 5 != 0)
    throw Error(ErrorCode::TruncatedRecord, "N-MNIST payload is not a multiple of 5 bytes",
                bytes.size() / 5);
  std::vector<RawEvent> raw(bytes.size() / 5);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = decode_nmnist_record(p + 5 * i);
  return validate_stream(std::span<const RawEvent>(raw), geometry);
}

inline EventStream read_events(const std::filesystem::path& path, EventFormat format,
                               std::optional<SensorGeometry> geometry = std::nullopt) {
  const std::string bytes = detail::read_file(path);
  try {
    switch (format) {
      case EventFormat::CanonicalBinary: return decode_canonical(bytes);
      case EventFormat::Csv: return decode_csv(bytes, geometry);
      case EventFormat::Nmnist: return decode_nmnist(bytes, geometry.value_or(kNmnistGeometry));
    }
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.message()), e.index());
  }
  throw Error(ErrorCode::InvalidArgument, "unsupported format");
}

inline void write_events(const EventStream& stream, const std::filesystem::path& path,
                         EventFormat format) {
  switch (format) {
    case EventFormat::CanonicalBinary: detail::write_file(path, encode_canonical(stream)); return;
    case EventFormat::Csv: detail::write_file(path, encode_csv(stream)); return;
    case EventFormat::Nmnist: break;
  }
  throw Error(ErrorCode::InvalidArgument, "the nmnist format is read-only");
}

/// Guess the format from the file extension: .hev -> canonical, .csv -> csv,
/// .bin -> nmnist.
inline EventFormat format_from_extension(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".csv") return EventFormat::Csv;
  if (ext == ".bin") return EventFormat::Nmnist;
  return EventFormat::CanonicalBinary;
}

}  // namespace hats
