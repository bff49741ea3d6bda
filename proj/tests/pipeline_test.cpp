#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hats/pipeline.hpp"
#include "hats/synth.hpp"

namespace hats {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hats_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Dataset, SaveLoadRoundTrip) {
  const auto dir = fresh_dir("roundtrip");
  const auto samples = two_class_dataset(3, {16, 16}, {2000.0, 1}, 5);
  save_dataset(dir, samples);
  EXPECT_EQ(load_dataset(dir), samples);
  fs::remove_all(dir);
}

TEST(Dataset, FolderLabelsWithoutManifest) {
  const auto dir = fresh_dir("folders");
  fs::create_directories(dir / "3");
  fs::create_directories(dir / "7");
  const std::string rec("\x05\x07\x80\x00\x64", 5);
  std::ofstream(dir / "3" / "a.bin", std::ios::binary) << rec;
  std::ofstream(dir / "7" / "b.bin", std::ios::binary) << rec;
  const auto ds = load_dataset(dir);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].label(), 3u);
  EXPECT_EQ(ds[1].label(), 7u);
  EXPECT_EQ(ds[0].geometry(), kNmnistGeometry);
  fs::remove_all(dir);
}

TEST(Dataset, EmptyDirectoryIsAnError) {
  const auto dir = fresh_dir("empty");
  try {
    load_dataset(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
  fs::remove_all(dir);
}

TEST(Extract, ParallelMatchesSerial) {
  const auto samples = two_class_dataset(4, {20, 20}, {2000.0, 1}, 8);
  ExtractOptions opt;
  opt.params.cell_size = 5;
  opt.params.surface = {2, 5e4, 100'000};
  const auto serial = extract_features(samples, opt);
  opt.threads = 3;
  const auto parallel = extract_features(samples, opt);
  EXPECT_EQ(serial.features, parallel.features);
  EXPECT_EQ(serial.labels, parallel.labels);
  EXPECT_EQ(serial.features.cols(), 16u * 50u);
  std::uint64_t events = 0;
  for (const auto& s : samples) events += s.size();
  EXPECT_EQ(serial.total_events, events);
}

TEST(Extract, WindowStackingDimension) {
  const auto samples = two_class_dataset(1, {20, 20}, {}, 8);
  ExtractOptions opt;
  opt.params.cell_size = 10;
  opt.params.surface = {3, 1e9, 25'000};
  opt.windows = 4;
  EXPECT_EQ(extract_features(samples, opt).features.cols(), 4u * 4u * 98u);
}

TEST(Bench, KevDefinitionAndRepeat) {
  BenchRun run{0.002, 1000, 1};
  EXPECT_DOUBLE_EQ(run.kev_per_second(), 500.0);
  EXPECT_DOUBLE_EQ(run.ms_per_sample(), 2.0);
  const auto samples = two_class_dataset(2, {16, 16}, {}, 1);
  ExtractOptions opt;
  opt.params.cell_size = 4;
  opt.params.surface.rho = 1;
  const auto report = bench(samples, opt, 5);
  ASSERT_EQ(report.runs.size(), 5u);
  const auto kev = report.summary([](const BenchRun& r) { return r.kev_per_second(); });
  EXPECT_LE(kev[0], kev[1] + 1e-9);
  EXPECT_LE(kev[1], kev[2] + 1e-9);
  EXPECT_THROW(bench({}, opt, 1), Error);
}

TEST(Sweep, OneRowPerDurationAndValidation) {
  const auto samples = two_class_dataset(10, {16, 16}, {1000.0, 1}, 2);
  SweepOptions opt;
  opt.extract.params.cell_size = 4;
  opt.extract.params.surface = {2, 5e4, 100'000};
  opt.hyper.epochs = 5;
  opt.repetitions = 2;
  const std::vector<Timestamp> durations{20'000, 50'000, 100'000};
  const auto rows = sweep_latency(samples, durations, opt);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].duration, durations[i]);
    EXPECT_GE(rows[i].accuracy, 0.0);
    EXPECT_LE(rows[i].accuracy, 1.0);
  }
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const std::vector<Timestamp> bad{50'000, 20'000};
  EXPECT_THROW(sweep_latency(samples, bad, opt), Error);
}

TEST(Sweep, FullDurationMatchesDirectEvaluation) {
  const auto samples = two_class_dataset(10, {16, 16}, {1000.0, 1}, 2);
  SweepOptions opt;
  opt.extract.params.cell_size = 4;
  opt.extract.params.surface = {2, 5e4, 100'000};
  opt.hyper.epochs = 5;
  opt.repetitions = 1;
  const std::vector<Timestamp> full{1'000'000};  // longer than any sample
  const auto rows = sweep_latency(samples, full, opt);
  const auto fx = extract_features(samples, opt.extract);
  const auto direct = train_and_evaluate(fx.features, fx.labels, opt.hyper, opt.test_fraction, opt.split_seed);
  EXPECT_EQ(rows[0].accuracy, direct.report.accuracy);
  EXPECT_EQ(rows[0].auc, direct.report.roc->auc);
}

}  // namespace
}  // namespace hats
