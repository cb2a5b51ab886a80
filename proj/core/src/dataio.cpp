#include "rishp/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "binary_io.hpp"
#include "rishp/errors.hpp"
#include "rishp/parallel.hpp"

namespace rishp {

void DatasetConfig::validate() const {
  system.validate();
  ceo.validate();
  if (model == ChannelModel::kSalehValenzuela) {
    sv.validate();
  } else {
    gpp.validate();
  }
}

ChannelMatrix sample_channel(const DatasetConfig& cfg, std::uint64_t q) {
  SystemConfig sys = cfg.system;
  sys.rng_seed = derive_seed(cfg.seed, {tag(StreamTag::kSample), q});
  return cfg.model == ChannelModel::kSalehValenzuela ? generate_sv_channel(sys, cfg.sv)
                                                     : generate_gpp_channel(sys, cfg.gpp);
}

FeederGains sample_feeder(const DatasetConfig& cfg, std::uint64_t q) {
  Rng rng(derive_seed(cfg.seed, {tag(StreamTag::kFeeder), q}));
  return feeder_gains(cfg.system, cfg.feeder, rng);
}

DataSample label_sample(const DatasetConfig& cfg, std::uint64_t q) {
  DataSample s;
  s.H = sample_channel(cfg, q);
  s.channel_model = cfg.model;
  s.sample_index = q;
  const FeederGains g = sample_feeder(cfg, q);
  Rng rng(derive_seed(cfg.seed, {tag(StreamTag::kCeo), q}));
  const OptimResult r = ceo_optimize(s.H, g, cfg.system, cfg.ceo, rng);
  s.phi_label = canonical_phi(r.phi, cfg.system.Ns);
  s.rate_label = zf_sum_rate(s.H, s.phi_label, g, cfg.system);
  return s;
}

Dataset generate_dataset(std::size_t q, const DatasetConfig& cfg) {
  if (q < 1) throw ConfigError("generate_dataset: need at least one sample");
  cfg.validate();
  Dataset ds;
  ds.config = cfg;
  ds.samples.resize(q);
  parallel_for(q, [&](std::size_t i) { ds.samples[i] = label_sample(cfg, i); });
  return ds;
}

void split_dataset(Dataset& ds, double test_fraction, double validation_fraction,
                   std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0) ||
      !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("split_dataset: fractions must lie in (0, 1)");
  }
  if (test_fraction + validation_fraction >= 1.0) {
    throw ConfigError("split_dataset: test and validation fractions sum to >= 1");
  }
  const std::size_t total = ds.samples.size();
  std::vector<std::uint64_t> perm(total);
  for (std::size_t i = 0; i < total; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, {tag(StreamTag::kSplit)}));
  for (std::size_t i = total; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * total));
  const std::size_t rest = total - n_test;
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * rest));

  DatasetSplit s;
  s.test.assign(perm.begin(), perm.begin() + n_test);
  s.validation.assign(perm.begin() + n_test, perm.begin() + n_test + n_val);
  s.train.assign(perm.begin() + n_test + n_val, perm.end());
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  ds.split = std::move(s);
}

FeatureSet features(const Dataset& ds, Split which) {
  const auto& idx = which == Split::kTrain        ? ds.split.train
                    : which == Split::kValidation ? ds.split.validation
                                                  : ds.split.test;
  FeatureSet fs;
  fs.width = ds.config.system.K * ds.config.system.N;
  fs.outputs = ds.config.system.N;
  for (std::uint64_t i : idx) {
    const auto& s = ds.samples.at(i);
    fs.append(preprocess(s.H, s.phi_label));
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Binary format

namespace {

constexpr binio::Magic kDatasetMagic{'R', 'I', 'S', 'H', 'P', 'D', 'A', 'T'};

std::uint32_t narrow32(std::size_t v) {
  if (v > UINT32_MAX) throw ConfigError("value does not fit the 32-bit file field");
  return static_cast<std::uint32_t>(v);
}

void write_config(binio::Writer& w, const DatasetConfig& c) {
  const SystemConfig& s = c.system;
  for (std::size_t v : {s.N, s.M, s.K, s.Ns, s.Ns1, s.Ns2}) w.u32(narrow32(v));
  for (double v : {s.d1, s.d2, s.rho, s.sigma2}) w.f64(v);
  w.u64(s.rng_seed);
  w.u8(static_cast<std::uint8_t>(c.model));
  w.u8(c.feeder == FeederMode::kAllOnes ? 0 : 1);
  w.u32(narrow32(c.sv.L));
  w.f64(c.sv.gain_variance);
  w.f64(c.gpp.K_R);
  w.u32(narrow32(c.gpp.P));
  w.u32(narrow32(c.gpp.J));
  w.u32(narrow32(c.gpp.cluster_powers.size()));
  for (double p : c.gpp.cluster_powers) w.f64(p);
  w.f64(c.gpp.angle_spread);
  w.f64(c.gpp.doppler);
  w.u32(narrow32(c.ceo.iterations));
  w.u32(narrow32(c.ceo.candidates));
  w.f64(c.ceo.elite_ratio);
  w.f64(c.ceo.smoothing);
  w.f64(c.ceo.p_floor);
  w.u64(c.seed);
}

ChannelModel model_from_byte(std::uint8_t b) {
  if (b > 1) throw FormatError("dataset: unknown channel model code " + std::to_string(b));
  return static_cast<ChannelModel>(b);
}

DatasetConfig read_config(binio::Reader& r) {
  DatasetConfig c;
  SystemConfig& s = c.system;
  s.N = r.u32();
  s.M = r.u32();
  s.K = r.u32();
  s.Ns = r.u32();
  s.Ns1 = r.u32();
  s.Ns2 = r.u32();
  s.d1 = r.f64();
  s.d2 = r.f64();
  s.rho = r.f64();
  s.sigma2 = r.f64();
  s.rng_seed = r.u64();
  c.model = model_from_byte(r.u8());
  const std::uint8_t feeder = r.u8();
  if (feeder > 1) throw FormatError("dataset: unknown feeder mode code");
  c.feeder = feeder == 0 ? FeederMode::kAllOnes : FeederMode::kRandomPhase;
  c.sv.L = r.u32();
  c.sv.gain_variance = r.f64();
  c.gpp.K_R = r.f64();
  c.gpp.P = r.u32();
  c.gpp.J = r.u32();
  const std::uint32_t n_powers = r.u32();
  if (n_powers > r.remaining() / 8) throw TruncationError("dataset: cluster power list truncated");
  c.gpp.cluster_powers.resize(n_powers);
  for (double& p : c.gpp.cluster_powers) p = r.f64();
  c.gpp.angle_spread = r.f64();
  c.gpp.doppler = r.f64();
  c.ceo.iterations = r.u32();
  c.ceo.candidates = r.u32();
  c.ceo.elite_ratio = r.f64();
  c.ceo.smoothing = r.f64();
  c.ceo.p_floor = r.f64();
  c.seed = r.u64();
  return c;
}

void write_indices(binio::Writer& w, const std::vector<std::uint64_t>& v) {
  for (std::uint64_t i : v) w.u64(i);
}

std::vector<std::uint64_t> read_indices(binio::Reader& r, std::uint64_t count) {
  if (count > r.remaining() / 8) throw TruncationError("dataset: split index list truncated");
  std::vector<std::uint64_t> v(count);
  for (auto& i : v) i = r.u64();
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  binio::Writer w;
  write_config(w, ds.config);
  const std::size_t k = ds.config.system.K;
  const std::size_t n = ds.config.system.N;
  w.u64(ds.samples.size());
  for (const auto& s : ds.samples) {
    if (s.H.H.rows() != k || s.H.H.cols() != n || s.phi_label.size() != n) {
      throw ShapeError("encode_dataset: sample shape differs from the configuration");
    }
    w.u64(s.sample_index);
    w.u8(static_cast<std::uint8_t>(s.channel_model));
    w.f64(s.rate_label);
    for (const cdouble& z : s.H.H.entries()) {
      w.f64(z.real());
      w.f64(z.imag());
    }
    for (std::int8_t x : s.phi_label.signs()) w.i8(x);
  }
  w.u64(ds.split.train.size());
  w.u64(ds.split.validation.size());
  w.u64(ds.split.test.size());
  write_indices(w, ds.split.train);
  write_indices(w, ds.split.validation);
  write_indices(w, ds.split.test);
  return binio::wrap(kDatasetMagic, kDatasetFormatVersion, w.bytes());
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  binio::Reader r(binio::unwrap(kDatasetMagic, kDatasetFormatVersion, bytes, "dataset"));
  Dataset ds;
  ds.config = read_config(r);
  try {
    ds.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("dataset: stored configuration is invalid: ") + e.what());
  }
  const std::size_t k = ds.config.system.K;
  const std::size_t n = ds.config.system.N;
  const std::uint64_t count = r.u64();
  const std::size_t per_sample = 8 + 1 + 8 + 16 * k * n + n;
  if (count > r.remaining() / per_sample) throw TruncationError("dataset: sample block truncated");
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.sample_index = r.u64();
    s.channel_model = model_from_byte(r.u8());
    s.rate_label = r.f64();
    ComplexMatrix h(k, n);
    for (cdouble& z : h.entries()) {
      const double re = r.f64();
      const double im = r.f64();
      z = {re, im};
    }
    s.H = {std::move(h)};
    std::vector<std::int8_t> phi(n);
    for (auto& x : phi) x = r.i8();
    try {
      s.phi_label = AnalogBeamformer(std::move(phi));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("dataset: ") + e.what());
    }
    if (!(s.rate_label >= 0.0)) throw FormatError("dataset: negative rate label");
  }
  const std::uint64_t n_train = r.u64();
  const std::uint64_t n_val = r.u64();
  const std::uint64_t n_test = r.u64();
  ds.split.train = read_indices(r, n_train);
  ds.split.validation = read_indices(r, n_val);
  ds.split.test = read_indices(r, n_test);
  if (r.remaining() != 0) throw FormatError("dataset: unexpected bytes after split block");

  std::vector<bool> seen(count, false);
  for (const auto* v : {&ds.split.train, &ds.split.validation, &ds.split.test}) {
    for (std::uint64_t i : *v) {
      if (i >= count || seen[i]) throw FormatError("dataset: split indices overlap or overflow");
      seen[i] = true;
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  binio::write_file_atomic(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(binio::read_file(path));
}

// ---------------------------------------------------------------------------
// key = value

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  return parse_key_values(std::string(bytes.begin(), bytes.end()));
}

KeyValues to_key_values(const DatasetConfig& c) {
  KeyValues kv;
  kv["N"] = std::to_string(c.system.N);
  kv["M"] = std::to_string(c.system.M);
  kv["K"] = std::to_string(c.system.K);
  kv["Ns"] = std::to_string(c.system.Ns);
  kv["Ns1"] = std::to_string(c.system.Ns1);
  kv["Ns2"] = std::to_string(c.system.Ns2);
  kv["d1"] = fmt_double(c.system.d1);
  kv["d2"] = fmt_double(c.system.d2);
  kv["rho"] = fmt_double(c.system.rho);
  kv["sigma2"] = fmt_double(c.system.sigma2);
  kv["model"] = to_string(c.model);
  kv["feeder"] = c.feeder == FeederMode::kAllOnes ? "all_ones" : "random_phase";
  kv["L"] = std::to_string(c.sv.L);
  kv["gain_variance"] = fmt_double(c.sv.gain_variance);
  kv["K_R"] = fmt_double(c.gpp.K_R);
  kv["P"] = std::to_string(c.gpp.P);
  kv["J"] = std::to_string(c.gpp.J);
  std::string powers;
  for (std::size_t i = 0; i < c.gpp.cluster_powers.size(); ++i) {
    if (i > 0) powers += ",";
    powers += fmt_double(c.gpp.cluster_powers[i]);
  }
  kv["cluster_powers"] = powers;
  kv["angle_spread"] = fmt_double(c.gpp.angle_spread);
  kv["ceo_iterations"] = std::to_string(c.ceo.iterations);
  kv["ceo_candidates"] = std::to_string(c.ceo.candidates);
  kv["ceo_elite_ratio"] = fmt_double(c.ceo.elite_ratio);
  kv["ceo_smoothing"] = fmt_double(c.ceo.smoothing);
  kv["ceo_p_floor"] = fmt_double(c.ceo.p_floor);
  kv["seed"] = std::to_string(c.seed);
  return kv;
}

std::vector<std::string> apply_key_values(const KeyValues& kv, DatasetConfig& c) {
  std::vector<std::string> unknown;
  for (const auto& [key, v] : kv) {
    if (key == "N") c.system.N = parse_u64(key, v);
    else if (key == "M") c.system.M = parse_u64(key, v);
    else if (key == "K") c.system.K = parse_u64(key, v);
    else if (key == "Ns") c.system.Ns = parse_u64(key, v);
    else if (key == "Ns1") c.system.Ns1 = parse_u64(key, v);
    else if (key == "Ns2") c.system.Ns2 = parse_u64(key, v);
    else if (key == "d1") c.system.d1 = parse_double(key, v);
    else if (key == "d2") c.system.d2 = parse_double(key, v);
    else if (key == "rho") c.system.rho = parse_double(key, v);
    else if (key == "sigma2") c.system.sigma2 = parse_double(key, v);
    else if (key == "snr_db") c.system.set_snr_db(parse_double(key, v));
    else if (key == "model") c.model = channel_model_from_string(v);
    else if (key == "feeder") {
      if (v == "all_ones") c.feeder = FeederMode::kAllOnes;
      else if (v == "random_phase") c.feeder = FeederMode::kRandomPhase;
      else throw ConfigError("config: feeder must be all_ones or random_phase");
    }
    else if (key == "L") c.sv.L = parse_u64(key, v);
    else if (key == "gain_variance") c.sv.gain_variance = parse_double(key, v);
    else if (key == "K_R") c.gpp.K_R = parse_double(key, v);
    else if (key == "P") c.gpp.P = parse_u64(key, v);
    else if (key == "J") c.gpp.J = parse_u64(key, v);
    else if (key == "cluster_powers") {
      c.gpp.cluster_powers.clear();
      std::istringstream in(v);
      std::string item;
      while (std::getline(in, item, ',')) c.gpp.cluster_powers.push_back(parse_double(key, trim(item)));
    }
    else if (key == "angle_spread") c.gpp.angle_spread = parse_double(key, v);
    else if (key == "ceo_iterations") c.ceo.iterations = parse_u64(key, v);
    else if (key == "ceo_candidates") c.ceo.candidates = parse_u64(key, v);
    else if (key == "ceo_elite_ratio") c.ceo.elite_ratio = parse_double(key, v);
    else if (key == "ceo_smoothing") c.ceo.smoothing = parse_double(key, v);
    else if (key == "ceo_p_floor") c.ceo.p_floor = parse_double(key, v);
    else if (key == "seed") c.seed = parse_u64(key, v);
    else unknown.push_back(key);
  }
  return unknown;
}

std::string dataset_metadata(const Dataset& ds, const std::string& created) {
  KeyValues kv = to_key_values(ds.config);
  kv["samples"] = std::to_string(ds.samples.size());
  kv["train_count"] = std::to_string(ds.split.train.size());
  kv["validation_count"] = std::to_string(ds.split.validation.size());
  kv["test_count"] = std::to_string(ds.split.test.size());
  kv["format_version"] = std::to_string(kDatasetFormatVersion);
  kv["created"] = created;
  return format_key_values(kv);
}

void save_metadata(const Dataset& ds, const std::filesystem::path& path) {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  binio::write_text_atomic(path, dataset_metadata(ds, buf));
}

}  // namespace rishp
