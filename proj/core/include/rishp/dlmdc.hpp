#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rishp/channel.hpp"
#include "rishp/precoding.hpp"
#include "rishp/random.hpp"

namespace rishp {

// ---------------------------------------------------------------------------
// Preprocessing

/// Phase features and 0/1 labels for one sample.
struct Preprocessed {
  std::vector<double> theta;          // K*N phases in (-pi, pi], index k*N + n
  std::vector<std::uint8_t> labels;   // N labels, (phi_n + 1) / 2
};

/// Phases of H, row-major. Magnitudes are discarded.
std::vector<double> channel_phases(const ChannelMatrix& ch);

Preprocessed preprocess(const ChannelMatrix& ch, const AnalogBeamformer& phi_label);

/// Inverse of the label mapping.
AnalogBeamformer labels_to_phi(std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// Classifier

/// Fully connected net: rectifier hidden layers, one logistic output.
/// Parameters live in one flat vector, layer by layer: weights (out x in,
/// row-major) then biases (out).
class MlpClassifier {
 public:
  MlpClassifier() = default;
  /// Zero-initialized. layer_sizes must start at the input width and end at 1.
  explicit MlpClassifier(std::vector<std::size_t> layer_sizes);

  /// Truncated normal weights (std `stddev`, cut at +-2 std), zero biases.
  static MlpClassifier truncated_normal(std::vector<std::size_t> layer_sizes, Rng& rng,
                                        double stddev = 0.1);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_size() const noexcept { return sizes_.front(); }
  std::size_t layer_count() const noexcept { return sizes_.size() - 1; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  double& weight(std::size_t layer, std::size_t out, std::size_t in);
  double weight(std::size_t layer, std::size_t out, std::size_t in) const;
  double& bias(std::size_t layer, std::size_t out);
  double bias(std::size_t layer, std::size_t out) const;

  /// Offset of layer l's weight block inside params(); its biases follow.
  std::size_t weight_offset(std::size_t layer) const noexcept { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const noexcept {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  friend bool operator==(const MlpClassifier&, const MlpClassifier&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Inference pass (no dropout). Throws ShapeError on input width mismatch.
double forward(const MlpClassifier& clf, std::span<const double> theta);

/// Gradient of (forward(theta) - label)^2 with respect to every parameter,
/// laid out like MlpClassifier::params().
std::vector<double> backward(const MlpClassifier& clf, std::span<const double> theta,
                             double label);

double mse_loss(std::span<const double> posteriors, std::span<const double> labels);

struct RmsPropState {
  std::vector<double> mean_square;  // running average of g^2
};

/// v <- decay v + (1 - decay) g^2;  w <- w - lr g / (sqrt(v) + eps).
void rmsprop_step(std::span<double> params, std::span<const double> grads, RmsPropState& state,
                  double learning_rate, double decay, double epsilon);

// ---------------------------------------------------------------------------
// Bank

struct ClassifierBank {
  std::vector<MlpClassifier> classifiers;  // index n <-> RIS element n
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return classifiers.size(); }
  friend bool operator==(const ClassifierBank&, const ClassifierBank&) = default;
};

/// Hidden layer presets.
namespace arch {
inline const std::vector<std::size_t> kDesk{64, 32};
inline const std::vector<std::size_t> kLargeSv{256, 80, 80};
inline const std::vector<std::size_t> kLargeGpp{512, 256, 128};
}  // namespace arch

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs_max = 500;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double dropout_keep = 0.9;
  double validation_fraction = 0.2;
  double stop_threshold = 0.01;
  std::size_t marked_epoch_stride = 10;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden = arch::kDesk;
  // Mechanized retraining loop: double batch size on overfit, raise
  // dropout_keep on underfit, at most max_retries extra runs.
  bool auto_adjust = false;
  std::size_t max_retries = 3;

  void validate() const;
};

/// Row-major features (rows x width) with N labels per row.
struct FeatureSet {
  std::size_t width = 0;
  std::size_t outputs = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> labels;

  std::size_t rows() const noexcept { return width == 0 ? 0 : features.size() / width; }
  std::span<const double> row(std::size_t r) const { return {features.data() + r * width, width}; }
  double label(std::size_t r, std::size_t n) const { return labels[r * outputs + n]; }
  void append(const Preprocessed& p);
};

struct HistoryEntry {
  std::size_t epoch = 0;
  std::size_t classifier = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct ClassifierReport {
  std::size_t attempts = 1;
  std::size_t final_batch_size = 0;
  double final_dropout_keep = 0.0;
  bool converged = false;  // both MSEs reached stop_threshold
};

struct TrainResult {
  ClassifierBank bank;
  std::vector<HistoryEntry> history;   // sorted by (classifier, epoch)
  std::vector<ClassifierReport> reports;
};

/// Trains one classifier per output column. Classifier n only touches its own
/// parameters and its own substreams (seed, n), so the result does not depend on
/// scheduling. Throws ConfigError on empty or mismatched data.
TrainResult train_bank(const FeatureSet& train, const FeatureSet& validation,
                       const TrainConfig& tcfg);

/// Trains the single classifier for output n; train_bank is this, for every n.
struct SingleResult {
  MlpClassifier classifier;
  std::vector<HistoryEntry> history;
  ClassifierReport report;
};
SingleResult train_classifier(std::size_t n, const FeatureSet& train, const FeatureSet& validation,
                              const TrainConfig& tcfg);

/// Per marked epoch, mean over classifiers; a classifier that stopped early
/// contributes its last recorded value. classifier field is set to SIZE_MAX.
std::vector<HistoryEntry> mean_history(const std::vector<HistoryEntry>& history,
                                       std::size_t classifiers);

inline constexpr double kDecisionThreshold = 0.5;

/// phi_n = +1 iff posterior_n >= 0.5.
AnalogBeamformer predict_phi(const ClassifierBank& bank, const ChannelMatrix& ch);
AnalogBeamformer predict_from_features(const ClassifierBank& bank, std::span<const double> theta);

/// Fraction of rows where the thresholded prediction of classifier n matches label n.
std::vector<double> accuracy_table(const ClassifierBank& bank, const FeatureSet& testset);

// ---------------------------------------------------------------------------
// Model files

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const ClassifierBank& bank, const std::filesystem::path& path);
ClassifierBank load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_model(const ClassifierBank& bank);
ClassifierBank decode_model(std::span<const std::uint8_t> bytes);

}  // namespace rishp
