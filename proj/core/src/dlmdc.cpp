#include "rishp/dlmdc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "rishp/errors.hpp"
#include "rishp/parallel.hpp"

namespace rishp {

// ---------------------------------------------------------------------------
// Preprocessing

std::vector<double> channel_phases(const ChannelMatrix& ch) {
  std::vector<double> theta;
  theta.reserve(ch.H.size());
  for (const cdouble& z : ch.H.entries()) theta.push_back(std::arg(z));
  return theta;
}

Preprocessed preprocess(const ChannelMatrix& ch, const AnalogBeamformer& phi_label) {
  if (phi_label.size() != ch.H.cols()) throw ShapeError("preprocess: phi length differs from N");
  Preprocessed out;
  out.theta = channel_phases(ch);
  out.labels.resize(phi_label.size());
  for (std::size_t n = 0; n < phi_label.size(); ++n) {
    out.labels[n] = static_cast<std::uint8_t>((phi_label[n] + 1) / 2);
  }
  return out;
}

AnalogBeamformer labels_to_phi(std::span<const std::uint8_t> labels) {
  std::vector<std::int8_t> phi(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] > 1) throw ConfigError("labels_to_phi: label is not 0 or 1");
    phi[n] = static_cast<std::int8_t>(2 * labels[n] - 1);
  }
  return AnalogBeamformer(std::move(phi));
}

// ---------------------------------------------------------------------------
// Classifier

MlpClassifier::MlpClassifier(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("MlpClassifier: need at least input and output sizes");
  if (sizes_.back() != 1) throw ConfigError("MlpClassifier: output layer must have one unit");
  for (std::size_t s : sizes_)
    if (s == 0) throw ConfigError("MlpClassifier: empty layer");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

MlpClassifier MlpClassifier::truncated_normal(std::vector<std::size_t> layer_sizes, Rng& rng,
                                              double stddev) {
  MlpClassifier clf(std::move(layer_sizes));
  for (std::size_t l = 0; l < clf.layer_count(); ++l) {
    const std::size_t count = clf.sizes_[l] * clf.sizes_[l + 1];
    double* w = clf.params_.data() + clf.weight_offset(l);
    for (std::size_t i = 0; i < count; ++i) {
      double z;
      do {
        z = rng.normal();
      } while (std::abs(z) > 2.0);
      w[i] = stddev * z;
    }
  }
  return clf;
}

double& MlpClassifier::weight(std::size_t layer, std::size_t out, std::size_t in) {
  return params_.at(offsets_.at(layer) + out * sizes_[layer] + in);
}
double MlpClassifier::weight(std::size_t layer, std::size_t out, std::size_t in) const {
  return params_.at(offsets_.at(layer) + out * sizes_[layer] + in);
}
double& MlpClassifier::bias(std::size_t layer, std::size_t out) {
  return params_.at(bias_offset(layer) + out);
}
double MlpClassifier::bias(std::size_t layer, std::size_t out) const {
  return params_.at(bias_offset(layer) + out);
}

namespace {

double logistic(double z) {
  const double y = 1.0 / (1.0 + std::exp(-z));
  // Keep the posterior strictly inside (0, 1) even when exp saturates.
  return std::clamp(y, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

// Per-thread buffers for one forward/backward pass.
struct Workspace {
  std::vector<std::vector<double>> act;   // act[l] = output of layer l (post-activation)
  std::vector<std::vector<double>> gate;  // d act / d preactivation for hidden layers
  std::vector<std::vector<double>> delta;

  explicit Workspace(const std::vector<std::size_t>& sizes) {
    const std::size_t layers = sizes.size() - 1;
    act.resize(layers);
    gate.resize(layers);
    delta.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      act[l].resize(sizes[l + 1]);
      gate[l].resize(sizes[l + 1]);
      delta[l].resize(sizes[l + 1]);
    }
  }
};

struct Dropout {
  Rng* rng = nullptr;  // null disables dropout
  double keep = 1.0;
};

// Forward pass; fills ws and returns the posterior.
double forward_pass(const MlpClassifier& clf, std::span<const double> x, Workspace& ws,
                    Dropout dropout) {
  const auto& sizes = clf.layer_sizes();
  const std::size_t layers = clf.layer_count();
  const double* p = clf.params().data();
  std::span<const double> in = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = sizes[l];
    const std::size_t n_out = sizes[l + 1];
    const double* w = p + clf.weight_offset(l);
    const double* b = p + clf.bias_offset(l);
    double* out = ws.act[l].data();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* wr = w + o * n_in;
      double z = b[o];
      for (std::size_t i = 0; i < n_in; ++i) z += wr[i] * in[i];
      out[o] = z;
    }
    if (l + 1 == layers) {
      out[0] = logistic(out[0]);
    } else {
      double* g = ws.gate[l].data();
      for (std::size_t o = 0; o < n_out; ++o) {
        double scale = 1.0;
        if (dropout.rng != nullptr) scale = dropout.rng->bernoulli(dropout.keep) ? 1.0 / dropout.keep : 0.0;
        g[o] = out[o] > 0.0 ? scale : 0.0;
        out[o] = out[o] > 0.0 ? out[o] * scale : 0.0;
      }
    }
    in = ws.act[l];
  }
  return ws.act[layers - 1][0];
}

// Adds d(y - label)^2 / d params into grad, using activations left in ws.
void backward_pass(const MlpClassifier& clf, std::span<const double> x, double label,
                   Workspace& ws, std::span<double> grad) {
  const auto& sizes = clf.layer_sizes();
  const std::size_t layers = clf.layer_count();
  const double* p = clf.params().data();
  const double y = ws.act[layers - 1][0];
  ws.delta[layers - 1][0] = 2.0 * (y - label) * y * (1.0 - y);

  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t n_in = sizes[l];
    const std::size_t n_out = sizes[l + 1];
    std::span<const double> in = l == 0 ? x : std::span<const double>(ws.act[l - 1]);
    double* gw = grad.data() + clf.weight_offset(l);
    double* gb = grad.data() + clf.bias_offset(l);
    const double* d = ws.delta[l].data();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double dv = d[o];
      gb[o] += dv;
      if (dv == 0.0) continue;
      double* gr = gw + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) gr[i] += dv * in[i];
    }
    if (l == 0) break;
    const double* w = p + clf.weight_offset(l);
    double* dprev = ws.delta[l - 1].data();
    const double* gate = ws.gate[l - 1].data();
    std::fill(dprev, dprev + n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double dv = d[o];
      if (dv == 0.0) continue;
      const double* wr = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) dprev[i] += wr[i] * dv;
    }
    for (std::size_t i = 0; i < n_in; ++i) dprev[i] *= gate[i];
  }
}

void check_input(const MlpClassifier& clf, std::span<const double> theta) {
  if (theta.size() != clf.input_size()) {
    throw ShapeError("MlpClassifier: input has " + std::to_string(theta.size()) +
                     " entries, expected " + std::to_string(clf.input_size()));
  }
}

}  // namespace

double forward(const MlpClassifier& clf, std::span<const double> theta) {
  check_input(clf, theta);
  Workspace ws(clf.layer_sizes());
  return forward_pass(clf, theta, ws, {});
}

std::vector<double> backward(const MlpClassifier& clf, std::span<const double> theta,
                             double label) {
  check_input(clf, theta);
  Workspace ws(clf.layer_sizes());
  forward_pass(clf, theta, ws, {});
  std::vector<double> grad(clf.params().size(), 0.0);
  backward_pass(clf, theta, label, ws, grad);
  return grad;
}

double mse_loss(std::span<const double> posteriors, std::span<const double> labels) {
  if (posteriors.size() != labels.size()) throw ShapeError("mse_loss: length mismatch");
  if (posteriors.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const double e = posteriors[i] - labels[i];
    acc += e * e;
  }
  return acc / static_cast<double>(posteriors.size());
}

void rmsprop_step(std::span<double> params, std::span<const double> grads, RmsPropState& state,
                  double learning_rate, double decay, double epsilon) {
  if (grads.size() != params.size()) throw ShapeError("rmsprop_step: gradient shape mismatch");
  if (state.mean_square.empty()) state.mean_square.assign(params.size(), 0.0);
  if (state.mean_square.size() != params.size()) throw ShapeError("rmsprop_step: state shape mismatch");
  double* v = state.mean_square.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    v[i] = decay * v[i] + (1.0 - decay) * g * g;
    params[i] -= learning_rate * g / (std::sqrt(v[i]) + epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("TrainConfig: ") + what);
  };
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs_max >= 1, "epochs_max must be >= 1");
  require(rmsprop_decay > 0.0 && rmsprop_decay < 1.0, "rmsprop_decay must be in (0, 1)");
  require(rmsprop_epsilon > 0.0, "rmsprop_epsilon must be > 0");
  require(dropout_keep > 0.0 && dropout_keep <= 1.0, "dropout_keep must be in (0, 1]");
  require(validation_fraction > 0.0 && validation_fraction < 1.0,
          "validation_fraction must be in (0, 1)");
  require(stop_threshold > 0.0, "stop_threshold must be > 0");
  require(marked_epoch_stride >= 1, "marked_epoch_stride must be >= 1");
  for (std::size_t h : hidden) require(h >= 1, "hidden layers must be nonempty");
}

void FeatureSet::append(const Preprocessed& p) {
  if (width == 0 && features.empty()) {
    width = p.theta.size();
    outputs = p.labels.size();
  }
  if (p.theta.size() != width || p.labels.size() != outputs) {
    throw ShapeError("FeatureSet: sample shape differs from earlier samples");
  }
  features.insert(features.end(), p.theta.begin(), p.theta.end());
  labels.insert(labels.end(), p.labels.begin(), p.labels.end());
}

namespace {

double set_mse(const MlpClassifier& clf, const FeatureSet& data, std::size_t n, Workspace& ws) {
  double acc = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const double e = forward_pass(clf, data.row(r), ws, {}) - data.label(r, n);
    acc += e * e;
  }
  return data.rows() == 0 ? 0.0 : acc / static_cast<double>(data.rows());
}

bool overfitting(const std::vector<HistoryEntry>& h) {
  // Validation MSE rose at three consecutive marked epochs.
  for (std::size_t i = 3; i < h.size(); ++i) {
    if (h[i - 3].val_mse < h[i - 2].val_mse && h[i - 2].val_mse < h[i - 1].val_mse &&
        h[i - 1].val_mse < h[i].val_mse) {
      return true;
    }
  }
  return false;
}

bool underfitting(const std::vector<HistoryEntry>& h, const TrainConfig& cfg) {
  const std::size_t half = cfg.epochs_max / 2;
  for (const auto& e : h) {
    if (e.epoch >= half) {
      return e.train_mse > 5.0 * cfg.stop_threshold && e.val_mse > 5.0 * cfg.stop_threshold;
    }
  }
  return false;
}

struct RunResult {
  MlpClassifier clf;
  std::vector<HistoryEntry> history;
  bool converged = false;
};

RunResult run_training(std::size_t n, const FeatureSet& train, const FeatureSet& val,
                       const TrainConfig& cfg) {
  std::vector<std::size_t> sizes{train.width};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);

  Rng init_rng(derive_seed(cfg.seed, {tag(StreamTag::kInit), n}));
  Rng shuffle_rng(derive_seed(cfg.seed, {tag(StreamTag::kShuffle), n}));
  Rng dropout_rng(derive_seed(cfg.seed, {tag(StreamTag::kDropout), n}));

  RunResult out{MlpClassifier::truncated_normal(sizes, init_rng), {}, false};
  MlpClassifier& clf = out.clf;
  Workspace ws(sizes);
  RmsPropState state;
  std::vector<double> grad(clf.params().size());
  std::vector<std::size_t> order(train.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto mark = [&](std::size_t epoch) {
    HistoryEntry e{epoch, n, set_mse(clf, train, n, ws), set_mse(clf, val, n, ws)};
    out.history.push_back(e);
    return e.train_mse <= cfg.stop_threshold && e.val_mse <= cfg.stop_threshold;
  };

  if (mark(0)) {
    out.converged = true;
    return out;
  }
  const Dropout dropout{&dropout_rng, cfg.dropout_keep};
  for (std::size_t epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t r = order[b];
        forward_pass(clf, train.row(r), ws, dropout);
        backward_pass(clf, train.row(r), train.label(r, n), ws, grad);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (double& g : grad) g *= inv;
      rmsprop_step(clf.params(), grad, state, cfg.learning_rate, cfg.rmsprop_decay,
                   cfg.rmsprop_epsilon);
    }
    if (epoch % cfg.marked_epoch_stride == 0 && mark(epoch)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

void check_sets(const FeatureSet& train, const FeatureSet& val) {
  if (train.rows() == 0) throw ConfigError("train_bank: empty training set");
  if (val.rows() == 0) throw ConfigError("train_bank: empty validation set");
  if (val.width != train.width || val.outputs != train.outputs) {
    throw ConfigError("train_bank: training and validation shapes differ");
  }
}

}  // namespace

SingleResult train_classifier(std::size_t n, const FeatureSet& train, const FeatureSet& validation,
                              const TrainConfig& tcfg) {
  tcfg.validate();
  check_sets(train, validation);
  if (n >= train.outputs) throw ConfigError("train_classifier: output index out of range");

  TrainConfig cfg = tcfg;
  const std::size_t attempts = cfg.auto_adjust ? cfg.max_retries + 1 : 1;
  SingleResult result;
  for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
    RunResult run = run_training(n, train, validation, cfg);
    result.classifier = std::move(run.clf);
    result.history = std::move(run.history);
    result.report = {attempt + 1, cfg.batch_size, cfg.dropout_keep, run.converged};
    if (run.converged || attempt + 1 == attempts) break;
    if (overfitting(result.history)) {
      cfg.batch_size *= 2;
    } else if (underfitting(result.history, cfg)) {
      cfg.dropout_keep = std::min(1.0, cfg.dropout_keep + 0.05);
    } else {
      break;
    }
  }
  return result;
}

TrainResult train_bank(const FeatureSet& train, const FeatureSet& validation,
                       const TrainConfig& tcfg) {
  tcfg.validate();
  check_sets(train, validation);
  const std::size_t outputs = train.outputs;
  std::vector<SingleResult> parts(outputs);
  parallel_for(outputs, [&](std::size_t n) { parts[n] = train_classifier(n, train, validation, tcfg); });

  TrainResult out;
  out.bank.seed = tcfg.seed;
  for (auto& p : parts) {
    out.bank.classifiers.push_back(std::move(p.classifier));
    out.history.insert(out.history.end(), p.history.begin(), p.history.end());
    out.reports.push_back(p.report);
  }
  return out;
}

std::vector<HistoryEntry> mean_history(const std::vector<HistoryEntry>& history,
                                       std::size_t classifiers) {
  std::vector<std::size_t> epochs;
  for (const auto& e : history) epochs.push_back(e.epoch);
  std::sort(epochs.begin(), epochs.end());
  epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());

  std::vector<std::vector<const HistoryEntry*>> per(classifiers);
  for (const auto& e : history) {
    if (e.classifier < classifiers) per[e.classifier].push_back(&e);
  }
  for (auto& v : per) {
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->epoch < b->epoch; });
  }

  std::vector<HistoryEntry> out;
  for (std::size_t epoch : epochs) {
    HistoryEntry m{epoch, static_cast<std::size_t>(-1), 0.0, 0.0};
    std::size_t count = 0;
    for (const auto& v : per) {
      const HistoryEntry* last = nullptr;
      for (auto* e : v) {
        if (e->epoch > epoch) break;
        last = e;
      }
      if (last == nullptr) continue;
      m.train_mse += last->train_mse;
      m.val_mse += last->val_mse;
      ++count;
    }
    if (count == 0) continue;
    m.train_mse /= static_cast<double>(count);
    m.val_mse /= static_cast<double>(count);
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference

AnalogBeamformer predict_from_features(const ClassifierBank& bank, std::span<const double> theta) {
  std::vector<std::int8_t> phi(bank.size());
  if (bank.size() == 0) return AnalogBeamformer(std::move(phi));
  check_input(bank.classifiers.front(), theta);
  Workspace ws(bank.classifiers.front().layer_sizes());
  for (std::size_t n = 0; n < bank.size(); ++n) {
    const double y = forward_pass(bank.classifiers[n], theta, ws, {});
    phi[n] = y >= kDecisionThreshold ? 1 : -1;
  }
  return AnalogBeamformer(std::move(phi));
}

AnalogBeamformer predict_phi(const ClassifierBank& bank, const ChannelMatrix& ch) {
  return predict_from_features(bank, channel_phases(ch));
}

std::vector<double> accuracy_table(const ClassifierBank& bank, const FeatureSet& testset) {
  if (testset.outputs != bank.size()) throw ShapeError("accuracy_table: bank size differs from N");
  std::vector<double> acc(bank.size(), 0.0);
  if (testset.rows() == 0) return acc;
  for (std::size_t r = 0; r < testset.rows(); ++r) {
    const AnalogBeamformer phi = predict_from_features(bank, testset.row(r));
    for (std::size_t n = 0; n < bank.size(); ++n) {
      const std::uint8_t predicted = phi[n] > 0 ? 1 : 0;
      if (predicted == testset.labels[r * testset.outputs + n]) acc[n] += 1.0;
    }
  }
  for (double& a : acc) a /= static_cast<double>(testset.rows());
  return acc;
}

// ---------------------------------------------------------------------------
// Model files

namespace {
constexpr binio::Magic kModelMagic{'R', 'I', 'S', 'H', 'P', 'M', 'D', 'L'};
}

std::vector<std::uint8_t> encode_model(const ClassifierBank& bank) {
  binio::Writer w;
  w.u64(bank.seed);
  w.u32(static_cast<std::uint32_t>(bank.size()));
  const std::vector<std::size_t> sizes =
      bank.size() == 0 ? std::vector<std::size_t>{} : bank.classifiers.front().layer_sizes();
  w.u32(static_cast<std::uint32_t>(sizes.size()));
  for (std::size_t s : sizes) w.u32(static_cast<std::uint32_t>(s));
  for (const auto& clf : bank.classifiers) {
    if (clf.layer_sizes() != sizes) throw ShapeError("encode_model: classifiers differ in shape");
    for (double v : clf.params()) w.f64(v);
  }
  return binio::wrap(kModelMagic, kModelFormatVersion, w.bytes());
}

ClassifierBank decode_model(std::span<const std::uint8_t> bytes) {
  binio::Reader r(binio::unwrap(kModelMagic, kModelFormatVersion, bytes, "model"));
  ClassifierBank bank;
  bank.seed = r.u64();
  const std::uint32_t count = r.u32();
  const std::uint32_t n_sizes = r.u32();
  if (count > 0 && n_sizes < 2) throw FormatError("model: fewer than two layer sizes");
  std::vector<std::size_t> sizes(n_sizes);
  for (auto& s : sizes) s = r.u32();
  for (std::uint32_t c = 0; c < count; ++c) {
    MlpClassifier clf;
    try {
      clf = MlpClassifier(sizes);
    } catch (const ConfigError& e) {
      throw FormatError(std::string("model: ") + e.what());
    }
    for (double& v : clf.params()) v = r.f64();
    bank.classifiers.push_back(std::move(clf));
  }
  if (r.remaining() != 0) throw FormatError("model: unexpected bytes after parameters");
  return bank;
}

void save_model(const ClassifierBank& bank, const std::filesystem::path& path) {
  binio::write_file_atomic(path, encode_model(bank));
}

ClassifierBank load_model(const std::filesystem::path& path) {
  return decode_model(binio::read_file(path));
}

}  // namespace rishp
