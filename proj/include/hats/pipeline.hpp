#pragma once

// Dataset-level plumbing shared by the CLI and the acceptance suite: dataset
// directories, parallel feature extraction, benchmarking, evaluation and the
// latency sweep.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hats/classifier.hpp"
#include "hats/error.hpp"
#include "hats/event.hpp"
#include "hats/event_io.hpp"
#include "hats/feature_io.hpp"
#include "hats/hats.hpp"

namespace hats {

// ---------------------------------------------------------------------------
// Dataset directories
//
// A dataset directory holds event files plus an optional "manifest.csv" with
// header "file,label" listing files relative to the directory. Without a
// manifest every event file below the directory is loaded (sorted by path)
// and its label is the name of its parent directory when that is a number,
// which matches the per-class folder layout of N-MNIST.

inline constexpr std::string_view kManifestName = "manifest.csv";

struct DatasetEntry {
  std::filesystem::path file;
  std::optional<std::uint32_t> label;
};

inline bool is_event_file(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  return ext == ".hev" || ext == ".csv" || ext == ".bin";
}

inline std::vector<DatasetEntry> list_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<DatasetEntry> out;
  const fs::path manifest = dir / kManifestName;
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no == 1) {
        if (line != "file,label") throw Error(ErrorCode::MalformedHeader, manifest.string() + ": expected 'file,label'");
        continue;
      }
      if (line.empty()) continue;
      const auto comma = line.rfind(',');
      if (comma == std::string::npos)
        throw Error(ErrorCode::TruncatedRecord, manifest.string() + ": line " + std::to_string(line_no), line_no);
      DatasetEntry e{dir / line.substr(0, comma), std::nullopt};
      const std::string lab = line.substr(comma + 1);
      if (!lab.empty()) e.label = static_cast<std::uint32_t>(std::stoul(lab));
      out.push_back(std::move(e));
    }
    return out;
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_event_file(entry.path())) continue;
    DatasetEntry e{entry.path(), std::nullopt};
    const std::string parent = entry.path().parent_path().filename().string();
    if (entry.path().parent_path() != dir && !parent.empty() &&
        std::all_of(parent.begin(), parent.end(), [](char c) { return c >= '0' && c <= '9'; }))
      e.label = static_cast<std::uint32_t>(std::stoul(parent));
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const DatasetEntry& a, const DatasetEntry& b) { return a.file < b.file; });
  return out;
}

/// `format` overrides the per-file extension guess when set.
inline std::vector<EventStream> load_dataset(const std::filesystem::path& dir,
                                             std::optional<EventFormat> format = std::nullopt,
                                             std::optional<SensorGeometry> geometry = std::nullopt) {
  std::vector<EventStream> out;
  for (const auto& entry : list_dataset(dir)) {
    const EventFormat f = format.value_or(format_from_extension(entry.file));
    out.push_back(read_events(entry.file, f, geometry).with_label(entry.label));
  }
  if (out.empty()) throw Error(ErrorCode::EmptyDataset, dir.string() + " contains no event files");
  return out;
}

inline void save_dataset(const std::filesystem::path& dir, const std::vector<EventStream>& samples,
                         EventFormat format = EventFormat::CanonicalBinary) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string ext = format == EventFormat::Csv ? ".csv" : ".hev";
  std::string manifest = "file,label\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%06zu", i);
    const std::string file = name + ext;
    write_events(samples[i], dir / file, format);
    manifest += file + "," + (samples[i].label() ? std::to_string(*samples[i].label()) : std::string{}) + "\n";
  }
  detail::write_file(dir / kManifestName, manifest);
}

// ---------------------------------------------------------------------------
// Feature extraction

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct ExtractOptions {
  HatsParams params{};
  int windows = 1;
  int threads = 1;
};

struct ExtractResult {
  FeatureMatrix features;
  std::vector<std::uint32_t> labels;  // empty when any sample is unlabeled
  std::uint64_t total_events = 0;
  double feature_seconds = 0.0;  // summed per-sample compute time
};

inline std::vector<double> sample_features(const EventStream& s, const ExtractOptions& opt) {
  if (opt.windows == 1) return compute_hats(s, opt.params).values;
  return stack_windows(s, opt.params, opt.windows);
}

/// Features for every sample. Only feature computation is timed.
inline ExtractResult extract_features(const std::vector<EventStream>& samples, const ExtractOptions& opt) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "no samples to extract");
  opt.params.validate();
  const SensorGeometry g = samples.front().geometry();
  for (const auto& s : samples)
    if (!(s.geometry() == g))
      throw Error(ErrorCode::DimensionMismatch, "samples of one dataset must share the sensor geometry");
  std::vector<std::vector<double>> rows(samples.size());
  std::vector<double> seconds(samples.size(), 0.0);
  parallel_for(samples.size(), opt.threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    rows[i] = sample_features(samples[i], opt);
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  ExtractResult out;
  out.features = FeatureMatrix(0, rows.front().size());
  bool all_labeled = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.features.append_row(rows[i]);
    out.total_events += samples[i].size();
    out.feature_seconds += seconds[i];
    all_labeled = all_labeled && samples[i].label().has_value();
  }
  if (all_labeled)
    for (const auto& s : samples) out.labels.push_back(*s.label());
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchRun {
  double seconds = 0.0;  // feature computation only
  std::uint64_t events = 0;
  std::size_t samples = 0;

  double ms_per_sample() const { return samples ? seconds * 1e3 / static_cast<double>(samples) : 0.0; }
  /// Thousands of events per second of feature computation.
  double kev_per_second() const { return seconds > 0.0 ? static_cast<double>(events) / seconds / 1000.0 : 0.0; }
};

struct BenchReport {
  std::vector<BenchRun> runs;
  int threads = 1;

  template <typename F>
  std::array<double, 3> summary(F metric) const {  // min, mean, max
    std::array<double, 3> s{metric(runs.front()), 0.0, metric(runs.front())};
    for (const auto& r : runs) {
      const double v = metric(r);
      s[0] = std::min(s[0], v);
      s[1] += v / static_cast<double>(runs.size());
      s[2] = std::max(s[2], v);
    }
    return s;
  }
};

/// Single-threaded runs time the whole dataset wall clock; parallel runs
/// report aggregate throughput (total events over wall time).
inline BenchReport bench(const std::vector<EventStream>& samples, const ExtractOptions& opt, int repeat) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "benchmark needs at least one sample");
  if (repeat < 1) throw Error(ErrorCode::InvalidArgument, "repeat must be >= 1");
  opt.params.validate();
  BenchReport report;
  report.threads = std::max(1, opt.threads);
  std::uint64_t events = 0;
  for (const auto& s : samples) events += s.size();
  std::vector<double> sink(samples.size());
  for (int r = 0; r < repeat; ++r) {
    const auto start = std::chrono::steady_clock::now();
    parallel_for(samples.size(), opt.threads, [&](std::size_t i) {
      const auto v = sample_features(samples[i], opt);
      sink[i] = v.empty() ? 0.0 : v.front();
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.runs.push_back({secs, events, samples.size()});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
  double accuracy = 0.0;
  std::optional<RocCurve> roc;  // two-class problems only
  std::size_t samples = 0;
};

inline EvalReport evaluate(const LinearModel& model, const FeatureMatrix& features,
                           std::span<const std::uint32_t> labels) {
  detail::check_matrix_labels(features, labels);
  EvalReport r;
  r.samples = labels.size();
  const auto pred = predict(model, features);
  r.accuracy = accuracy(pred, labels);
  if (model.binary()) {
    const bool both = std::any_of(labels.begin(), labels.end(), [&](auto l) { return l == model.classes[1]; }) &&
                      std::any_of(labels.begin(), labels.end(), [&](auto l) { return l != model.classes[1]; });
    if (both) r.roc = roc_auc(positive_scores(model, features), labels, model.classes[1]);
  }
  return r;
}

struct SplitEvaluation {
  EvalReport report;
  LinearModel model;
};

/// Stratified split, train on one part, evaluate on the other.
inline SplitEvaluation train_and_evaluate(const FeatureMatrix& features, std::span<const std::uint32_t> labels,
                                          const SvmHyper& hyper, double test_fraction, std::uint64_t split_seed) {
  const auto [train_idx, test_idx] = stratified_split(labels, test_fraction, split_seed);
  if (test_idx.empty()) throw Error(ErrorCode::EmptyInput, "test split is empty");
  std::vector<std::uint32_t> train_labels, test_labels;
  for (auto i : train_idx) train_labels.push_back(labels[i]);
  for (auto i : test_idx) test_labels.push_back(labels[i]);
  SplitEvaluation out;
  out.model = train_linear_svm(features.select(train_idx), train_labels, hyper);
  out.report = evaluate(out.model, features.select(test_idx), test_labels);
  return out;
}

// ---------------------------------------------------------------------------
// Latency sweep

struct SweepRow {
  Timestamp duration = 0;
  double accuracy = 0.0;
  double auc = 0.0;  // NaN for multiclass data
};

struct SweepOptions {
  ExtractOptions extract{};
  SvmHyper hyper{};
  double test_fraction = 0.3;
  std::uint64_t split_seed = 1;
  int repetitions = 5;
};

/// Each sample is cut to its first d microseconds (from its first event) and
/// the whole extract/train/evaluate chain is rerun. Repetition r uses split
/// seed split_seed + r and training seed hyper.seed + r; rows hold the means.
inline std::vector<SweepRow> sweep_latency(const std::vector<EventStream>& samples,
                                           std::span<const Timestamp> durations, const SweepOptions& opt) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "sweep needs samples");
  if (opt.repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] <= 0) throw Error(ErrorCode::InvalidArgument, "durations must be positive");
    if (i > 0 && durations[i] <= durations[i - 1])
      throw Error(ErrorCode::InvalidArgument, "durations must be strictly ascending");
  }
  std::vector<SweepRow> rows;
  for (Timestamp d : durations) {
    std::vector<EventStream> cut;
    cut.reserve(samples.size());
    for (const auto& s : samples) cut.push_back(slice_window(s, s.first_time(), s.first_time() + d));
    const ExtractResult fx = extract_features(cut, opt.extract);
    if (fx.labels.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs labeled samples");
    SweepRow row{d, 0.0, 0.0};
    for (int r = 0; r < opt.repetitions; ++r) {
      SvmHyper h = opt.hyper;
      h.seed = opt.hyper.seed + static_cast<std::uint64_t>(r);
      const auto ev = train_and_evaluate(fx.features, fx.labels, h, opt.test_fraction,
                                         opt.split_seed + static_cast<std::uint64_t>(r));
      row.accuracy += ev.report.accuracy / opt.repetitions;
      row.auc += (ev.report.roc ? ev.report.roc->auc : std::numeric_limits<double>::quiet_NaN()) / opt.repetitions;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "duration_us,accuracy,auc\n";
  for (const auto& r : rows) os << r.duration << ',' << r.accuracy << ',' << r.auc << '\n';
  return os.str();
}

}  // namespace hats
