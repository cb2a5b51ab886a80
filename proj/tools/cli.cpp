#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "rishp/dataio.hpp"
#include "rishp/dlmdc.hpp"
#include "rishp/errors.hpp"
#include "rishp/optim.hpp"
#include "rishp/parallel.hpp"

namespace rishp::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::string dataset;
  std::string model_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<std::size_t> n;
  std::optional<std::size_t> k;
  std::size_t q = 20000;
  std::optional<double> snr_db;
  std::string snr_grid = "-10:5:15";
  bool oracle = false;
  double test_fraction = 0.2;
  double validation_fraction = 0.2;
  std::optional<std::size_t> ceo_iterations;
  std::optional<std::size_t> ceo_candidates;
  // training overrides
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> learning_rate;
  std::optional<double> keep;
  std::optional<double> threshold;
  std::optional<std::string> hidden;
  bool auto_adjust = false;
  // evaluation
  std::size_t test_limit = 0;
  std::string batches = "100,500,1000";
  std::size_t repetitions = 5;
  std::size_t threads = 0;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty list item in '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::size_t to_count(const std::string& s) {
  const double v = to_double(s);
  if (v < 0 || v != std::floor(v)) throw ConfigError("not a count: '" + s + "'");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  for (const std::string& s : split_list(text)) out.push_back(to_count(s));
  return out;
}

void apply_train_key(const std::string& key, const std::string& value, TrainConfig& t) {
  if (key == "learning_rate") t.learning_rate = to_double(value);
  else if (key == "batch_size") t.batch_size = to_count(value);
  else if (key == "epochs") t.epochs_max = to_count(value);
  else if (key == "dropout_keep") t.dropout_keep = to_double(value);
  else if (key == "stop_threshold") t.stop_threshold = to_double(value);
  else if (key == "marked_epoch_stride") t.marked_epoch_stride = to_count(value);
  else if (key == "hidden") t.hidden = parse_counts(value);
  else if (key == "auto_adjust") t.auto_adjust = value == "1" || value == "true";
  else if (key == "max_retries") t.max_retries = to_count(value);
  else if (key == "train_seed") t.seed = static_cast<std::uint64_t>(to_count(value));
  else throw ConfigError("unknown config key '" + key + "'");
}

struct Setup {
  DatasetConfig data;
  TrainConfig train;
};

void set_dimensions(SystemConfig& s, std::size_t n, std::size_t k) {
  const SystemConfig d = SystemConfig::for_users(n, k);
  s.N = d.N;
  s.K = d.K;
  s.M = d.M;
  s.Ns = d.Ns;
  s.Ns1 = d.Ns1;
  s.Ns2 = d.Ns2;
}

Setup build_setup(const Options& o) {
  Setup s;
  if (!o.config.empty()) {
    if (!fs::exists(o.config)) throw LoadError("config file not found: " + o.config);
    const KeyValues kv = read_key_values(o.config);
    for (const std::string& key : apply_key_values(kv, s.data)) apply_train_key(key, kv.at(key), s.train);
    // N and K alone imply the sub-surface layout.
    if ((kv.count("N") || kv.count("K")) && !kv.count("Ns")) set_dimensions(s.data.system, s.data.system.N, s.data.system.K);
  }
  if (o.model) s.data.model = channel_model_from_string(*o.model);
  if (o.n || o.k) set_dimensions(s.data.system, o.n.value_or(s.data.system.N), o.k.value_or(s.data.system.K));
  if (o.snr_db) s.data.system.set_snr_db(*o.snr_db);
  if (o.seed) {
    s.data.seed = *o.seed;
    s.train.seed = *o.seed;
  }
  if (o.ceo_iterations) s.data.ceo.iterations = *o.ceo_iterations;
  if (o.ceo_candidates) s.data.ceo.candidates = *o.ceo_candidates;
  if (o.epochs) s.train.epochs_max = *o.epochs;
  if (o.batch) s.train.batch_size = *o.batch;
  if (o.learning_rate) s.train.learning_rate = *o.learning_rate;
  if (o.keep) s.train.dropout_keep = *o.keep;
  if (o.threshold) s.train.stop_threshold = *o.threshold;
  if (o.hidden) s.train.hidden = parse_counts(*o.hidden);
  if (o.auto_adjust) s.train.auto_adjust = true;
  s.train.validation_fraction = o.validation_fraction;
  s.data.validate();
  s.train.validate();
  return s;
}

fs::path dataset_path(const Options& o) {
  return o.dataset.empty() ? fs::path(o.out_dir) / "dataset.bin" : fs::path(o.dataset);
}

fs::path model_path(const Options& o) {
  return o.model_file.empty() ? fs::path(o.out_dir) / "model.bin" : fs::path(o.model_file);
}

Dataset load_existing_dataset(const fs::path& p) {
  if (!fs::exists(p)) throw LoadError("dataset not found: " + p.string());
  Dataset ds = load_dataset(p);
  if (ds.split.test.empty()) throw LoadError("dataset has no test split: " + p.string());
  return ds;
}

void write_csv(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw LoadError("cannot write " + path.string());
    f << text;
    if (!f) throw LoadError("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------

int cmd_generate(const Options& o, std::ostream& out) {
  const Setup s = build_setup(o);
  Dataset ds = generate_dataset(o.q, s.data);
  split_dataset(ds, o.test_fraction, o.validation_fraction, s.data.seed);
  const fs::path path = dataset_path(o);
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  save_dataset(ds, path);
  fs::path meta = path;
  meta.replace_extension(".meta");
  save_metadata(ds, meta);
  double mean = 0.0;
  for (const DataSample& smp : ds.samples) mean += smp.rate_label;
  mean /= static_cast<double>(ds.samples.size());
  out << "samples " << ds.samples.size() << "\n";
  out << "mean_rate_label_bps_hz " << num(mean) << "\n";
  out << "dataset " << path.string() << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const Dataset ds = load_existing_dataset(dataset_path(o));
  Setup s = build_setup(o);
  if (!o.seed) s.train.seed = ds.config.seed;
  const FeatureSet train = features(ds, Split::kTrain);
  const FeatureSet val = features(ds, Split::kValidation);
  if (train.rows() == 0 || val.rows() == 0) throw LoadError("dataset has empty train or validation split");
  const TrainResult r = train_bank(train, val, s.train);
  const fs::path mpath = model_path(o);
  fs::create_directories(mpath.parent_path().empty() ? fs::path(".") : mpath.parent_path());
  save_model(r.bank, mpath);

  std::string csv = "epoch,classifier_index,train_mse,val_mse\n";
  for (const HistoryEntry& e : r.history) {
    csv += std::to_string(e.epoch) + "," + std::to_string(e.classifier) + "," + num(e.train_mse) + "," +
           num(e.val_mse) + "\n";
  }
  const auto mean = mean_history(r.history, r.bank.size());
  for (const HistoryEntry& e : mean) {
    csv += std::to_string(e.epoch) + ",mean," + num(e.train_mse) + "," + num(e.val_mse) + "\n";
  }
  write_csv(fs::path(o.out_dir) / "history.csv", csv);
  std::size_t converged = 0;
  for (const ClassifierReport& rep : r.reports) converged += rep.converged ? 1 : 0;
  out << "classifiers " << r.bank.size() << " converged " << converged << "\n";
  if (!mean.empty()) {
    out << "final_epoch " << mean.back().epoch << " mean_train_mse " << num(mean.back().train_mse)
        << " mean_val_mse " << num(mean.back().val_mse) << "\n";
  }
  out << "model " << mpath.string() << "\n";
  return kOk;
}

struct EvalContext {
  Dataset ds;
  ClassifierBank bank;
  std::vector<std::uint64_t> test;  // sample indices
  std::uint64_t seed = 0;
};

EvalContext load_context(const Options& o) {
  EvalContext c;
  c.ds = load_existing_dataset(dataset_path(o));
  if (o.oracle && c.ds.config.system.N > kExhaustiveMaxN) {
    throw RefusalError("--oracle needs N <= " + std::to_string(kExhaustiveMaxN) + ", dataset has N=" +
                       std::to_string(c.ds.config.system.N));
  }
  const fs::path mpath = model_path(o);
  if (!fs::exists(mpath)) throw LoadError("model not found: " + mpath.string());
  c.bank = load_model(mpath);
  const SystemConfig& sys = c.ds.config.system;
  if (c.bank.size() != sys.N) throw ShapeError("model has " + std::to_string(c.bank.size()) +
                                               " classifiers, dataset N=" + std::to_string(sys.N));
  for (const MlpClassifier& clf : c.bank.classifiers) {
    if (clf.input_size() != sys.K * sys.N) throw ShapeError("model input width differs from K*N");
  }
  c.test = c.ds.split.test;
  if (o.test_limit > 0 && c.test.size() > o.test_limit) c.test.resize(o.test_limit);
  c.seed = o.seed.value_or(c.ds.config.seed);
  return c;
}

CeoParams ceo_params(const Options& o, const Dataset& ds) {
  CeoParams p = ds.config.ceo;
  if (o.ceo_iterations) p.iterations = *o.ceo_iterations;
  if (o.ceo_candidates) p.candidates = *o.ceo_candidates;
  p.validate();
  return p;
}

enum Scheme : std::size_t { kDlmdc, kCeo, kMatched, kOracle, kSchemeCount };
constexpr const char* kSchemeNames[] = {"dlmdc", "ceo", "matched_filter", "exhaustive"};

// rates[scheme][snr][channel]
using RateTable = std::vector<std::vector<std::vector<double>>>;

RateTable rate_table(const EvalContext& c, const CeoParams& ceo, const std::vector<double>& snrs, bool oracle) {
  const std::size_t t = c.test.size();
  RateTable rates(kSchemeCount, std::vector<std::vector<double>>(snrs.size(), std::vector<double>(t, 0.0)));
  const DatasetConfig& dcfg = c.ds.config;
  parallel_for(t, [&](std::size_t i) {
    const DataSample& smp = c.ds.samples[c.test[i]];
    const FeederGains g = sample_feeder(dcfg, smp.sample_index);
    const AnalogBeamformer learned = predict_phi(c.bank, smp.H);
    for (std::size_t s = 0; s < snrs.size(); ++s) {
      SystemConfig sys = dcfg.system;
      sys.set_snr_db(snrs[s]);
      Rng rng(derive_seed(c.seed, {tag(StreamTag::kCeo), smp.sample_index, s + 1}));
      rates[kDlmdc][s][i] = zf_sum_rate(smp.H, learned, g, sys);
      rates[kCeo][s][i] = ceo_optimize(smp.H, g, sys, ceo, rng).rate;
      rates[kMatched][s][i] = matched_filter_baseline(smp.H, g, sys).rate;
      if (oracle) rates[kOracle][s][i] = exhaustive_search(smp.H, g, sys).rate;
    }
  });
  return rates;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string sumrate_csv(const RateTable& rates, const std::vector<double>& snrs, bool oracle) {
  std::string csv = "snr_db,dlmdc_bps_hz,ceo_bps_hz,matched_filter_bps_hz";
  if (oracle) csv += ",exhaustive_bps_hz";
  csv += ",dlmdc_over_ceo\n";
  for (std::size_t s = 0; s < snrs.size(); ++s) {
    const double d = mean_of(rates[kDlmdc][s]), c = mean_of(rates[kCeo][s]);
    csv += num(snrs[s]) + "," + num(d) + "," + num(c) + "," + num(mean_of(rates[kMatched][s]));
    if (oracle) csv += "," + num(mean_of(rates[kOracle][s]));
    csv += "," + num(c > 0.0 ? d / c : 0.0) + "\n";
  }
  return csv;
}

std::string cdf_csv(const RateTable& rates, std::size_t s, double snr, bool oracle) {
  std::string csv = "scheme,snr_db,rate_bps_hz,cumulative_fraction\n";
  for (std::size_t scheme = 0; scheme < kSchemeCount; ++scheme) {
    if (scheme == kOracle && !oracle) continue;
    std::vector<double> v = rates[scheme][s];
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double frac = static_cast<double>(i + 1) / static_cast<double>(v.size());
      csv += std::string(kSchemeNames[scheme]) + "," + num(snr) + "," + num(v[i]) + "," + num(frac) + "\n";
    }
  }
  return csv;
}

std::string accuracy_csv(const EvalContext& c, std::ostream& out) {
  FeatureSet fs;
  fs.width = c.ds.config.system.K * c.ds.config.system.N;
  fs.outputs = c.ds.config.system.N;
  for (std::uint64_t idx : c.test) fs.append(preprocess(c.ds.samples[idx].H, c.ds.samples[idx].phi_label));
  const std::vector<double> acc = accuracy_table(c.bank, fs);
  std::string csv = "element,accuracy\n";
  for (std::size_t n = 0; n < acc.size(); ++n) csv += std::to_string(n) + "," + num(acc[n]) + "\n";
  const double mean = mean_of(acc);
  csv += "mean," + num(mean) + "\n";
  out << "mean_accuracy " << num(mean) << " min_accuracy " << num(*std::min_element(acc.begin(), acc.end()))
      << "\n";
  return csv;
}

void report_rates(const RateTable& rates, const std::vector<double>& snrs, bool oracle, std::ostream& out) {
  for (std::size_t s = 0; s < snrs.size(); ++s) {
    out << "snr_db " << num(snrs[s]) << " dlmdc " << num(mean_of(rates[kDlmdc][s])) << " ceo "
        << num(mean_of(rates[kCeo][s])) << " matched_filter " << num(mean_of(rates[kMatched][s]));
    if (oracle) out << " exhaustive " << num(mean_of(rates[kOracle][s]));
    out << "\n";
  }
  if (oracle) {
    std::size_t violations = 0;
    for (std::size_t s = 0; s < snrs.size(); ++s)
      for (std::size_t i = 0; i < rates[kDlmdc][s].size(); ++i)
        violations += rates[kDlmdc][s][i] > rates[kOracle][s][i] + 1e-12 ? 1 : 0;
    out << "dlmdc_above_exhaustive " << violations << "\n";
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string runtime_csv(const Options& o, const EvalContext& c, const CeoParams& ceo, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  const DatasetConfig& dcfg = c.ds.config;
  std::string csv = "batch_size,dlmdc_seconds,ceo_seconds,speedup,ceo_evaluations\n";
  for (std::size_t batch : parse_counts(o.batches)) {
    if (batch == 0) throw ConfigError("batch size must be positive");
    // Channels cycle through the test split when the batch is larger.
    std::vector<const DataSample*> chans(batch);
    std::vector<FeederGains> gains(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      chans[b] = &c.ds.samples[c.test[b % c.test.size()]];
      gains[b] = sample_feeder(dcfg, chans[b]->sample_index);
    }
    std::vector<double> t_dl, t_ceo;
    std::uint64_t evals = 0;
    for (std::size_t rep = 0; rep < o.repetitions; ++rep) {
      [[maybe_unused]] volatile std::int8_t sink = 0;
      auto t0 = clock::now();
      for (std::size_t b = 0; b < batch; ++b) sink = predict_phi(c.bank, chans[b]->H)[0];
      auto t1 = clock::now();
      evals = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        Rng rng(derive_seed(c.seed, {tag(StreamTag::kCeo), chans[b]->sample_index, 0}));
        evals += ceo_optimize(chans[b]->H, gains[b], dcfg.system, ceo, rng).evaluations;
      }
      auto t2 = clock::now();
      t_dl.push_back(std::chrono::duration<double>(t1 - t0).count());
      t_ceo.push_back(std::chrono::duration<double>(t2 - t1).count());
    }
    const double dl = median(t_dl), cs = median(t_ceo);
    const double speedup = dl > 0.0 ? cs / dl : 0.0;
    csv += std::to_string(batch) + "," + num(dl) + "," + num(cs) + "," + num(speedup) + "," +
           std::to_string(evals) + "\n";
    out << "batch " << batch << " dlmdc_s " << num(dl) << " ceo_s " << num(cs) << " speedup " << num(speedup)
        << "\n";
  }
  return csv;
}

std::vector<double> grid_with(std::vector<double> grid, double extra, std::size_t& index) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - extra) < 1e-9) {
      index = i;
      return grid;
    }
  }
  grid.push_back(extra);
  index = grid.size() - 1;
  return grid;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const std::vector<double> grid = parse_snr_grid(o.snr_grid);
  const EvalContext c = load_context(o);
  const CeoParams ceo = ceo_params(o, c.ds);
  const fs::path dir(o.out_dir);
  write_csv(dir / "accuracy.csv", accuracy_csv(c, out));

  std::size_t ref = 0;
  const double ref_snr = c.ds.config.system.snr_db();
  const std::vector<double> snrs = grid_with(grid, ref_snr, ref);
  const RateTable rates = rate_table(c, ceo, snrs, o.oracle);
  write_csv(dir / "sumrate.csv", sumrate_csv(rates, grid, o.oracle));
  write_csv(dir / "cdf.csv", cdf_csv(rates, ref, ref_snr, o.oracle));
  report_rates(rates, grid, o.oracle, out);
  write_csv(dir / "runtime.csv", runtime_csv(o, c, ceo, out));
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const std::vector<double> grid = parse_snr_grid(o.snr_grid);
  const EvalContext c = load_context(o);
  const RateTable rates = rate_table(c, ceo_params(o, c.ds), grid, o.oracle);
  write_csv(fs::path(o.out_dir) / "sumrate.csv", sumrate_csv(rates, grid, o.oracle));
  report_rates(rates, grid, o.oracle, out);
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const EvalContext c = load_context(o);
  write_csv(fs::path(o.out_dir) / "runtime.csv", runtime_csv(o, c, ceo_params(o, c.ds), out));
  return kOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key=value config file");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  sub->add_option("--ceo-iterations", o.ceo_iterations, "CEO iterations I");
  sub->add_option("--ceo-candidates", o.ceo_candidates, "CEO candidates per iteration S");
}

void add_data_inputs(CLI::App* sub, Options& o) {
  sub->add_option("--dataset", o.dataset, "dataset file (default <out-dir>/dataset.bin)");
}

void add_eval_inputs(CLI::App* sub, Options& o) {
  add_data_inputs(sub, o);
  sub->add_option("--model-file", o.model_file, "model file (default <out-dir>/model.bin)");
  sub->add_option("--test-limit", o.test_limit, "use at most this many test channels (0 = all)");
}

}  // namespace

std::vector<double> parse_snr_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("SNR grid range must be start:step:stop");
    const double a = to_double(parts[0]), step = to_double(parts[1]), b = to_double(parts[2]);
    if (step <= 0.0 || b < a) throw ConfigError("SNR grid range must increase");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) grid.push_back(a + step * static_cast<double>(i));
  } else {
    for (const std::string& s : split_list(text)) grid.push_back(to_double(s));
  }
  if (grid.empty()) throw ConfigError("SNR grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("SNR grid must be strictly increasing");
  }
  return grid;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"RIS hybrid precoding: channel generation, CEO search and classifier-bank training"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "generate a labeled dataset");
  add_common(gen, o);
  add_data_inputs(gen, o);
  gen->add_option("--model", o.model, "channel model")->check(CLI::IsMember({"sv", "gpp"}));
  gen->add_option("--n", o.n, "RIS elements N");
  gen->add_option("--k", o.k, "users K (= RF chains M)");
  gen->add_option("--q", o.q, "number of samples")->capture_default_str();
  gen->add_option("--snr-db", o.snr_db, "labeling SNR rho/sigma2 in dB");
  gen->add_option("--test-fraction", o.test_fraction, "held-out test fraction")->capture_default_str();
  gen->add_option("--validation-fraction", o.validation_fraction, "validation fraction of the rest")
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "train the classifier bank");
  add_common(train, o);
  add_data_inputs(train, o);
  train->add_option("--model-file", o.model_file, "model output (default <out-dir>/model.bin)");
  train->add_option("--epochs", o.epochs, "maximum epochs");
  train->add_option("--batch", o.batch, "minibatch size");
  train->add_option("--lr", o.learning_rate, "learning rate");
  train->add_option("--keep", o.keep, "dropout keep probability");
  train->add_option("--threshold", o.threshold, "early-stop MSE threshold");
  train->add_option("--hidden", o.hidden, "hidden layer widths, comma separated");
  train->add_flag("--auto-adjust", o.auto_adjust, "retrain with adjusted batch size or dropout");

  auto* eval = app.add_subcommand("evaluate", "accuracy, sum-rate, CDF and runtime tables");
  auto* sweep = app.add_subcommand("sweep", "sum-rate versus SNR");
  for (auto* sub : {eval, sweep}) {
    add_common(sub, o);
    add_eval_inputs(sub, o);
    sub->add_option("--snr-grid", o.snr_grid, "SNR grid in dB: a,b,c or start:step:stop")->capture_default_str();
    sub->add_flag("--oracle", o.oracle, "also run exhaustive search (N <= 22)");
  }
  auto* bench = app.add_subcommand("bench", "DL-MDC versus CEO wall-clock");
  add_common(bench, o);
  add_eval_inputs(bench, o);
  for (auto* sub : {eval, bench}) {
    sub->add_option("--batches", o.batches, "batch sizes, comma separated")->capture_default_str();
    sub->add_option("--repetitions", o.repetitions, "timing repetitions (median reported)")
        ->capture_default_str();
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  const std::size_t saved_workers = parallel_workers();
  parallel_workers() = o.threads;
  int code = kOk;
  try {
    if (o.repetitions == 0) throw ConfigError("--repetitions must be positive");
    if (gen->parsed()) code = cmd_generate(o, out);
    else if (train->parsed()) code = cmd_train(o, out);
    else if (eval->parsed()) code = cmd_evaluate(o, out);
    else if (sweep->parsed()) code = cmd_sweep(o, out);
    else code = cmd_bench(o, out);
  } catch (const RefusalError& e) {
    err << "refused: " << e.what() << "\n";
    code = kRefused;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    code = kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    code = kDataError;
  }
  parallel_workers() = saved_workers;
  return code;
}

}  // namespace rishp::cli
