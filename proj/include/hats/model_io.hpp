#pragma once

// Linear model text file. One "key value..." record per line:
//
//   hats-linear-model 1
//   dimension <d>
//   classes <c0> <c1> ...
//   lambda <v>
//   epochs <n>
//   seed <n>
//   standardize 0|1
//   fingerprint <rest of line>
//   [mean <d values>]
//   [scale <d values>]
//   head <class> <bias> <d weights>      (one line per weight vector)
//
// Reals are written with 17 significant digits, so reading back yields the
// same 64-bit doubles.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hats/classifier.hpp"
#include "hats/error.hpp"
#include "hats/event_io.hpp"

namespace hats {

inline constexpr int kModelSchemaVersion = 1;

namespace detail {

inline void append_real(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += ' ';
  out += buf;
}

inline double parse_real(const std::string& token, std::size_t line) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw Error(ErrorCode::MalformedHeader, "bad number '" + token + "' on line " + std::to_string(line), line);
  return v;
}

inline std::vector<double> parse_reals(std::istringstream& in, std::size_t count, std::size_t line) {
  std::vector<double> out;
  out.reserve(count);
  std::string tok;
  while (out.size() < count && in >> tok) out.push_back(parse_real(tok, line));
  if (out.size() != count)
    throw Error(ErrorCode::TruncatedRecord, "expected " + std::to_string(count) + " values on line " +
                                                std::to_string(line), line);
  return out;
}

}  // namespace detail

inline std::string encode_model(const LinearModel& m) {
  std::string out = "hats-linear-model " + std::to_string(kModelSchemaVersion) + "\n";
  out += "dimension " + std::to_string(m.dimension) + "\n";
  out += "classes";
  for (auto c : m.classes) out += " " + std::to_string(c);
  out += "\nlambda";
  detail::append_real(out, m.hyper.lambda);
  out += "\nepochs " + std::to_string(m.hyper.epochs);
  out += "\nseed " + std::to_string(m.hyper.seed);
  out += "\nstandardize " + std::string(m.hyper.standardize ? "1" : "0");
  out += "\nfingerprint " + m.fingerprint + "\n";
  if (!m.mean.empty()) {
    out += "mean";
    for (double v : m.mean) detail::append_real(out, v);
    out += "\nscale";
    for (double v : m.scale) detail::append_real(out, v);
    out += "\n";
  }
  for (std::size_t h = 0; h < m.weights.size(); ++h) {
    out += "head " + std::to_string(m.binary() ? m.classes[1] : m.classes[h]);
    detail::append_real(out, m.bias[h]);
    for (double v : m.weights[h]) detail::append_real(out, v);
    out += "\n";
  }
  return out;
}

inline LinearModel decode_model(std::string_view text) {
  LinearModel m;
  std::istringstream lines{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = false, have_dim = false;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string key;
    in >> key;
    if (!header) {
      int version = 0;
      if (key != "hats-linear-model" || !(in >> version))
        throw Error(ErrorCode::MalformedHeader, "not a hats-linear-model file");
      if (version != kModelSchemaVersion)
        throw Error(ErrorCode::MalformedHeader, "unsupported model schema version " + std::to_string(version));
      header = true;
      continue;
    }
    if (key == "dimension") {
      if (!(in >> m.dimension)) throw Error(ErrorCode::MalformedHeader, "bad dimension", line_no);
      have_dim = true;
    } else if (key == "classes") {
      std::uint32_t c;
      while (in >> c) m.classes.push_back(c);
    } else if (key == "lambda") {
      std::string tok;
      in >> tok;
      m.hyper.lambda = detail::parse_real(tok, line_no);
    } else if (key == "epochs") {
      in >> m.hyper.epochs;
    } else if (key == "seed") {
      in >> m.hyper.seed;
    } else if (key == "standardize") {
      int s = 0;
      in >> s;
      m.hyper.standardize = s != 0;
    } else if (key == "fingerprint") {
      m.fingerprint = line.size() > 12 ? line.substr(12) : std::string{};
    } else if (key == "mean" || key == "scale") {
      if (!have_dim) throw Error(ErrorCode::MalformedHeader, "dimension must precede " + key, line_no);
      (key == "mean" ? m.mean : m.scale) = detail::parse_reals(in, m.dimension, line_no);
    } else if (key == "head") {
      if (!have_dim) throw Error(ErrorCode::MalformedHeader, "dimension must precede head", line_no);
      std::uint32_t cls;
      if (!(in >> cls)) throw Error(ErrorCode::MalformedHeader, "bad head line", line_no);
      auto values = detail::parse_reals(in, m.dimension + 1, line_no);
      m.bias.push_back(values[0]);
      m.weights.emplace_back(values.begin() + 1, values.end());
    } else {
      throw Error(ErrorCode::MalformedHeader, "unknown key '" + key + "' on line " + std::to_string(line_no), line_no);
    }
  }
  if (!header) throw Error(ErrorCode::MalformedHeader, "empty model file");
  if (m.classes.size() < 2) throw Error(ErrorCode::MalformedHeader, "model lists fewer than two classes");
  const std::size_t heads = m.classes.size() == 2 ? 1 : m.classes.size();
  if (m.weights.size() != heads)
    throw Error(ErrorCode::MalformedHeader, "expected " + std::to_string(heads) + " weight vectors");
  if (m.mean.size() != m.scale.size()) throw Error(ErrorCode::MalformedHeader, "mean/scale mismatch");
  return m;
}

inline void write_model(const LinearModel& m, const std::filesystem::path& path) {
  detail::write_file(path, encode_model(m));
}

inline LinearModel read_model(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return decode_model(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.message()), e.index());
  }
}

}  // namespace hats
