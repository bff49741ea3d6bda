// hats: command-line front end for synthesis, conversion, feature extraction,
// training, evaluation, benchmarking and the latency sweep.
//
// Every option can also come from a flat key=value file given with --config;
// flags on the command line win. Metrics are JSON and echo the resolved
// configuration. Exit status: 0 ok, 1 usage, 2 data, 3 internal.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hats/classifier.hpp"
#include "hats/event_io.hpp"
#include "hats/feature_io.hpp"
#include "hats/hats.hpp"
#include "hats/model_io.hpp"
#include "hats/pipeline.hpp"
#include "hats/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string config;
  // paths
  std::string in, out, features, model, metrics, labels;
  // hats
  int k = 10;
  int rho = 3;
  double tau = 1e9;
  double dt = 100'000;  // us; accepts 5e4 style values
  int windows = 1;
  std::string mode = "faithful";
  std::string block_norm = "off";
  // classifier
  double lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 1;
  bool standardize = false;
  double test_fraction = 0.3;
  std::uint64_t split_seed = 1;
  // execution
  int threads = 1;
  int repeat = 5;
  int repetitions = 5;
  std::string format;  // event file format; empty = by extension
  std::string to_format = "canonical";
  std::uint32_t width = 0, height = 0;
  // synth
  std::size_t per_class = 200;
  double noise_rate = 2000.0;
  double duration = 100'000;
  std::vector<double> durations;
};

std::optional<hats::SensorGeometry> geometry_override(const RunConfig& c) {
  if (c.width == 0 && c.height == 0) return std::nullopt;
  if (c.width == 0 || c.height == 0) throw UsageError("--width and --height must be given together");
  return hats::SensorGeometry{c.width, c.height};
}

std::optional<hats::EventFormat> format_override(const RunConfig& c) {
  if (c.format.empty()) return std::nullopt;
  return hats::parse_event_format(c.format);
}

// Microsecond values may be written as 5e4; they must still be whole numbers.
hats::Timestamp microseconds(double v, const char* flag) {
  if (!(v > 0.0) || v != std::floor(v) || v > 9.2e18)
    throw UsageError(std::string(flag) + " must be a positive whole number of microseconds");
  return static_cast<hats::Timestamp>(v);
}

hats::HatsParams hats_params(const RunConfig& c) {
  hats::HatsParams p;
  p.cell_size = c.k;
  p.surface = {c.rho, c.tau, microseconds(c.dt, "--dt")};
  p.mode = hats::parse_memory_mode(c.mode);
  if (c.block_norm != "off") {
    // l2:<cells>
    if (c.block_norm.rfind("l2:", 0) != 0) throw UsageError("--block-norm must be 'off' or 'l2:<cells>'");
    try {
      std::size_t used = 0;
      const int cells = std::stoi(c.block_norm.substr(3), &used);
      if (used != c.block_norm.size() - 3) throw std::invalid_argument("trailing");
      p.block_norm = hats::BlockNorm{cells, 2.0};
    } catch (const std::logic_error&) {
      throw UsageError("--block-norm must be 'off' or 'l2:<cells>'");
    }
  }
  p.validate();
  return p;
}

hats::ExtractOptions extract_options(const RunConfig& c) {
  if (c.windows < 1) throw UsageError("--windows must be >= 1");
  return {hats_params(c), c.windows, std::max(1, c.threads)};
}

hats::SvmHyper svm_hyper(const RunConfig& c) {
  if (!(c.lambda > 0.0)) throw UsageError("--lambda must be > 0");
  if (c.epochs < 1) throw UsageError("--epochs must be >= 1");
  return {c.lambda, c.epochs, c.seed, c.standardize};
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// ---------------------------------------------------------------------------
// config file and echo

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

// Options already given on the command line are left alone.
void apply_config(CLI::App& sub, const std::map<std::string, std::string>& cfg, const std::string& path) {
  for (const auto& [key, value] : cfg) {
    if (key == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError(path + ": unknown key '" + key + "' for " + sub.get_name());
    }
    if (opt->count() > 0) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1") opt->add_result(std::string("true"));
      else if (value == "false" || value == "0") opt->add_result(std::string("false"));
      else throw UsageError(path + ": '" + key + "' expects true or false");
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

json config_echo(const CLI::App& sub) {
  json c = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < r.size(); ++i) joined += (i ? "," : "") + r[i];
      c[name] = opt->get_expected_min() == 0 && joined.empty() ? "true" : joined;
    } else {
      c[name] = opt->get_default_str();
    }
  }
  return c;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void emit_metrics(const RunConfig& c, json report) {
  const std::string text = report.dump(2) + "\n";
  if (c.metrics.empty() || c.metrics == "-") {
    std::cout << text;
  } else {
    hats::detail::write_file(c.metrics, text);
  }
}

json roc_json(const hats::RocCurve& roc) {
  json pts = json::array();
  for (const auto& p : roc.points) pts.push_back({p.fpr, p.tpr});
  return {{"auc", roc.auc}, {"points", pts}};
}

// ---------------------------------------------------------------------------
// subcommands

json cmd_synth(const RunConfig& c) {
  require(c.out, "--out");
  if (c.width == 0 || c.height == 0) throw UsageError("synth needs --width and --height");
  hats::DatasetOptions options;
  options.duration = microseconds(c.duration, "--duration");
  const auto samples = hats::two_class_dataset(c.per_class, {c.width, c.height}, {c.noise_rate, c.seed}, c.seed,
                                               options);
  const auto fmt = c.format.empty() ? hats::EventFormat::CanonicalBinary : hats::parse_event_format(c.format);
  if (fmt == hats::EventFormat::Nmnist) throw UsageError("synth cannot write the nmnist format");
  hats::save_dataset(c.out, samples, fmt);
  std::uint64_t events = 0;
  for (const auto& s : samples) events += s.size();
  return {{"samples", samples.size()}, {"events", events}};
}

json cmd_convert(const RunConfig& c) {
  require(c.in, "--in");
  require(c.out, "--out");
  const auto from = format_override(c).value_or(hats::format_from_extension(c.in));
  const auto to = hats::parse_event_format(c.to_format);
  if (to == hats::EventFormat::Nmnist) throw UsageError("the nmnist format is read-only");
  const auto stream = hats::read_events(c.in, from, geometry_override(c));
  hats::write_events(stream, c.out, to);
  return {{"events", stream.size()},
          {"width", stream.geometry().width},
          {"height", stream.geometry().height},
          {"from", std::string(hats::to_string(from))},
          {"to", std::string(hats::to_string(to))}};
}

json cmd_extract(const RunConfig& c) {
  require(c.in, "--in");
  require(c.out, "--out");
  const auto opt = extract_options(c);
  const auto samples = hats::load_dataset(c.in, format_override(c), geometry_override(c));
  const auto fx = hats::extract_features(samples, opt);
  hats::write_features(fx.features, c.out);
  if (!fx.labels.empty()) hats::write_labels(fx.labels, hats::label_path_for(c.out));
  return {{"samples", fx.features.rows()},
          {"dimension", fx.features.cols()},
          {"labeled", !fx.labels.empty()},
          {"total_events", fx.total_events},
          {"feature_seconds", fx.feature_seconds},
          {"fingerprint", opt.params.fingerprint()}};
}

struct LabeledFeatures {
  hats::FeatureMatrix x;
  std::vector<std::uint32_t> y;
};

LabeledFeatures load_labeled(const RunConfig& c) {
  require(c.features, "--features");
  LabeledFeatures out{hats::read_features(c.features), {}};
  const fs::path lp = c.labels.empty() ? hats::label_path_for(c.features) : fs::path(c.labels);
  out.y = hats::read_labels(lp);
  if (out.y.size() != out.x.rows())
    throw hats::Error(hats::ErrorCode::LengthMismatch, lp.string() + " does not match the feature rows");
  return out;
}

// Rows used for training (first) and held out (second). A zero test fraction
// trains and evaluates on everything.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(const RunConfig& c,
                                                                         std::span<const std::uint32_t> y) {
  if (c.test_fraction < 0.0 || c.test_fraction >= 1.0) throw UsageError("--test-fraction must be in [0, 1)");
  if (c.test_fraction == 0.0) {
    std::vector<std::size_t> all(y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return {all, all};
  }
  return hats::stratified_split(y, c.test_fraction, c.split_seed);
}

std::vector<std::uint32_t> pick(std::span<const std::uint32_t> y, const std::vector<std::size_t>& idx) {
  std::vector<std::uint32_t> out;
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

json cmd_train(const RunConfig& c) {
  require(c.model, "--model");
  const auto data = load_labeled(c);
  const auto [train_idx, test_idx] = split_rows(c, data.y);
  auto model = hats::train_linear_svm(data.x.select(train_idx), pick(data.y, train_idx), svm_hyper(c));
  hats::write_model(model, c.model);
  const auto train_pred = hats::predict(model, data.x.select(train_idx));
  return {{"train_samples", train_idx.size()},
          {"held_out_samples", test_idx.size()},
          {"classes", model.classes},
          {"dimension", model.dimension},
          {"train_accuracy", hats::accuracy(train_pred, pick(data.y, train_idx))}};
}

json cmd_eval(const RunConfig& c) {
  require(c.model, "--model");
  const auto data = load_labeled(c);
  const auto model = hats::read_model(c.model);
  const auto test_idx = split_rows(c, data.y).second;
  const auto report = hats::evaluate(model, data.x.select(test_idx), pick(data.y, test_idx));
  json out = {{"samples", report.samples}, {"accuracy", report.accuracy}};
  if (report.roc) {
    const auto roc = roc_json(*report.roc);
    out["auc"] = roc["auc"];
    out["roc"] = roc["points"];
  }
  return out;
}

json cmd_bench(const RunConfig& c) {
  require(c.in, "--in");
  if (c.repeat < 1) throw UsageError("--repeat must be >= 1");
  const auto opt = extract_options(c);
  const auto samples = hats::load_dataset(c.in, format_override(c), geometry_override(c));
  const auto report = hats::bench(samples, opt, c.repeat);
  json runs = json::array();
  for (const auto& r : report.runs)
    runs.push_back({{"seconds", r.seconds},
                    {"events", r.events},
                    {"samples", r.samples},
                    {"ms_per_sample", r.ms_per_sample()},
                    {"kev_per_second", r.kev_per_second()}});
  auto triple = [](const std::array<double, 3>& s) { return json{{"min", s[0]}, {"mean", s[1]}, {"max", s[2]}}; };
  return {{"threads", report.threads},
          {"runs", runs},
          {"ms_per_sample", triple(report.summary([](const hats::BenchRun& r) { return r.ms_per_sample(); }))},
          {"kev_per_second", triple(report.summary([](const hats::BenchRun& r) { return r.kev_per_second(); }))}};
}

json cmd_sweep(const RunConfig& c) {
  require(c.in, "--in");
  if (c.durations.empty()) throw UsageError("--durations is required");
  if (c.test_fraction <= 0.0 || c.test_fraction >= 1.0) throw UsageError("--test-fraction must be in (0, 1)");
  const auto samples = hats::load_dataset(c.in, format_override(c), geometry_override(c));
  hats::SweepOptions opt;
  opt.extract = extract_options(c);
  opt.hyper = svm_hyper(c);
  opt.test_fraction = c.test_fraction;
  opt.split_seed = c.split_seed;
  opt.repetitions = c.repetitions;
  std::vector<hats::Timestamp> durations;
  for (double d : c.durations) durations.push_back(microseconds(d, "--durations"));
  const auto rows = hats::sweep_latency(samples, durations, opt);
  if (!c.out.empty()) hats::detail::write_file(c.out, hats::sweep_csv(rows));
  json table = json::array();
  for (const auto& r : rows) {
    json row = {{"duration_us", r.duration}, {"accuracy", r.accuracy}};
    row["auc"] = std::isnan(r.auc) ? json(nullptr) : json(r.auc);
    table.push_back(row);
  }
  return {{"rows", table}};
}

// ---------------------------------------------------------------------------
// option wiring

void add_hats_options(CLI::App& s, RunConfig& c) {
  s.add_option("--k", c.k, "cell size in pixels");
  s.add_option("--rho", c.rho, "neighbourhood radius");
  s.add_option("--tau", c.tau, "time constant (us)");
  s.add_option("--dt", c.dt, "memory window (us)");
  s.add_option("--windows", c.windows, "stacked time windows per sample");
  s.add_option("--mode", c.mode, "faithful or exact")->check(CLI::IsMember({"faithful", "exact"}));
  s.add_option("--block-norm", c.block_norm, "off or l2:<cells>");
  s.add_option("--threads", c.threads, "worker threads");
}

void add_input_options(CLI::App& s, RunConfig& c) {
  s.add_option("--in", c.in, "dataset directory");
  s.add_option("--format", c.format, "event format: canonical, csv or nmnist (default: by extension)");
  s.add_option("--width", c.width, "sensor width override");
  s.add_option("--height", c.height, "sensor height override");
}

void add_svm_options(CLI::App& s, RunConfig& c) {
  s.add_option("--lambda", c.lambda, "regularization strength");
  s.add_option("--epochs", c.epochs, "passes over the training set");
  s.add_option("--seed", c.seed, "training seed");
  s.add_flag("--standardize", c.standardize, "standardize features before training");
}

void add_split_options(CLI::App& s, RunConfig& c) {
  s.add_option("--test-fraction", c.test_fraction, "held-out fraction (0 = use all rows)");
  s.add_option("--split-seed", c.split_seed, "seed of the stratified split");
}

void add_common(CLI::App& s, RunConfig& c) {
  s.add_option("--config", c.config, "key=value file; flags take precedence");
  s.add_option("--metrics", c.metrics, "metrics JSON output (default: stdout)");
}

int run(int argc, char** argv) {
  CLI::App app{"HATS event-camera features, linear SVM and benchmarks"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  RunConfig c;

  auto* synth = app.add_subcommand("synth", "write the synthetic two-class dataset");
  synth->add_option("--out", c.out, "output directory");
  synth->add_option("--per-class", c.per_class, "samples per class");
  synth->add_option("--width", c.width, "sensor width");
  synth->add_option("--height", c.height, "sensor height");
  synth->add_option("--noise-rate", c.noise_rate, "background noise (events/s over the array)");
  synth->add_option("--duration", c.duration, "sample length (us)");
  synth->add_option("--seed", c.seed, "dataset seed");
  synth->add_option("--format", c.format, "canonical or csv");

  auto* convert = app.add_subcommand("convert", "convert one event file between formats");
  convert->add_option("--in", c.in, "input event file");
  convert->add_option("--out", c.out, "output event file");
  convert->add_option("--format", c.format, "input format (default: by extension)");
  convert->add_option("--to", c.to_format, "output format: canonical or csv");
  convert->add_option("--width", c.width, "sensor width override");
  convert->add_option("--height", c.height, "sensor height override");

  auto* extract = app.add_subcommand("extract", "compute HATS descriptors for a dataset");
  add_input_options(*extract, c);
  add_hats_options(*extract, c);
  extract->add_option("--out", c.out, "feature file; labels go to <out>.labels");

  auto* train = app.add_subcommand("train", "train a linear SVM on a feature file");
  train->add_option("--features", c.features, "feature file");
  train->add_option("--labels", c.labels, "label file (default: <features>.labels)");
  train->add_option("--model", c.model, "model output");
  add_svm_options(*train, c);
  add_split_options(*train, c);

  auto* eval = app.add_subcommand("eval", "evaluate a model on the held-out rows");
  eval->add_option("--features", c.features, "feature file");
  eval->add_option("--labels", c.labels, "label file (default: <features>.labels)");
  eval->add_option("--model", c.model, "model file");
  add_split_options(*eval, c);

  auto* bench = app.add_subcommand("bench", "time feature extraction");
  add_input_options(*bench, c);
  add_hats_options(*bench, c);
  bench->add_option("--repeat", c.repeat, "timed passes over the dataset");

  auto* sweep = app.add_subcommand("sweep-latency", "accuracy against observed duration");
  add_input_options(*sweep, c);
  add_hats_options(*sweep, c);
  add_svm_options(*sweep, c);
  add_split_options(*sweep, c);
  sweep->add_option("--durations", c.durations, "ascending durations (us), comma separated")->delimiter(',');
  sweep->add_option("--repetitions", c.repetitions, "repetitions averaged per duration");
  sweep->add_option("--out", c.out, "CSV table output");

  for (auto* s : {synth, convert, extract, train, eval, bench, sweep}) add_common(*s, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!c.config.empty()) apply_config(*sub, read_config_file(c.config), c.config);
  } catch (const CLI::Error& e) {
    throw UsageError(e.what());
  }

  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  json result;
  const std::string name = sub->get_name();
  if (sub == synth) result = cmd_synth(c);
  else if (sub == convert) result = cmd_convert(c);
  else if (sub == extract) result = cmd_extract(c);
  else if (sub == train) result = cmd_train(c);
  else if (sub == eval) result = cmd_eval(c);
  else if (sub == bench) result = cmd_bench(c);
  else result = cmd_sweep(c);

  json report = {{"command", name}, {"config", config_echo(*sub)}, {"metrics", result}};
  report["wall_clock"] = {
      {"started", started_at},
      {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()}};
  emit_metrics(c, std::move(report));
  return kOk;
}

std::string one_line(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return kUsage;
  } catch (const hats::Error& e) {
    // bad parameters are the caller's fault, everything else is the data's
    const bool usage = e.code() == hats::ErrorCode::InvalidArgument;
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return usage ? kUsage : kData;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return kInternal;
  }
}
