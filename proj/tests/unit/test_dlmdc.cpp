#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "rishp/dlmdc.hpp"
#include "rishp/errors.hpp"
#include "rishp/parallel.hpp"

namespace rishp {
namespace {

constexpr double kPi = std::numbers::pi;

// Straightforward per-layer loops; no shared code with the library.
double reference_forward(const MlpClassifier& clf, std::vector<double> a) {
  for (std::size_t l = 0; l < clf.layer_count(); ++l) {
    const std::size_t out = clf.layer_sizes()[l + 1];
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = clf.bias(l, o);
      for (std::size_t i = 0; i < a.size(); ++i) s += clf.weight(l, o, i) * a[i];
      z[o] = s;
    }
    if (l + 1 < clf.layer_count()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    a = std::move(z);
  }
  return 1.0 / (1.0 + std::exp(-a[0]));
}

std::vector<double> random_input(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  std::vector<double> x(n);
  for (double& v : x) v = u(gen);
  return x;
}

TEST(Preprocess, PhasesAndLabels) {
  const ComplexMatrix h{{cdouble(1, 0), cdouble(0, 1)}, {cdouble(-1, 0), cdouble(0, -2)}};
  const Preprocessed p = preprocess({h}, AnalogBeamformer({1, -1}));
  ASSERT_EQ(p.theta.size(), 4U);
  EXPECT_DOUBLE_EQ(p.theta[0], 0.0);
  EXPECT_DOUBLE_EQ(p.theta[1], kPi / 2);
  EXPECT_DOUBLE_EQ(p.theta[2], kPi);
  EXPECT_DOUBLE_EQ(p.theta[3], -kPi / 2);
  EXPECT_EQ(p.labels, (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(labels_to_phi(p.labels), AnalogBeamformer({1, -1}));
}

TEST(Preprocess, MagnitudeIsDiscarded) {
  const ComplexMatrix h{{cdouble(0.3, 0.4), cdouble(-2, 1)}};
  const ComplexMatrix h5 = cdouble(5.0) * h;
  const auto a = channel_phases({h}), b = channel_phases({h5});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(Preprocess, RejectsLengthMismatch) {
  EXPECT_THROW(preprocess({ComplexMatrix(1, 3)}, AnalogBeamformer({1})), ShapeError);
  const std::vector<std::uint8_t> bad{2};
  EXPECT_THROW(labels_to_phi(bad), ConfigError);
}

TEST(Mlp, ZeroWeightsGiveOneHalf) {
  const MlpClassifier clf({6, 5, 3, 1});
  std::mt19937_64 gen(1);
  EXPECT_DOUBLE_EQ(forward(clf, random_input(gen, 6)), 0.5);
}

TEST(Mlp, LargeOutputBiasSaturatesBelowOne) {
  MlpClassifier clf({3, 4, 1});
  clf.bias(1, 0) = 10.0;
  const std::vector<double> x{0.1, 0.2, 0.3};
  const double y = forward(clf, x);
  EXPECT_NEAR(y, 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
  EXPECT_LT(y, 1.0);
  clf.bias(1, 0) = 1000.0;
  EXPECT_LT(forward(clf, x), 1.0);
  clf.bias(1, 0) = -1000.0;
  EXPECT_GT(forward(clf, x), 0.0);
}

TEST(Mlp, ForwardMatchesReference) {
  std::mt19937_64 gen(2);
  Rng rng(3);
  const MlpClassifier clf = MlpClassifier::truncated_normal({8, 16, 8, 1}, rng, 0.5);
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> x = random_input(gen, 8);
    EXPECT_NEAR(forward(clf, x), reference_forward(clf, x), 1e-12);
  }
}

TEST(Mlp, TruncatedNormalInit) {
  Rng rng(4);
  const MlpClassifier clf = MlpClassifier::truncated_normal({32, 64, 1}, rng, 0.1);
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t l = 0; l < clf.layer_count(); ++l) {
    const std::size_t in = clf.layer_sizes()[l], out = clf.layer_sizes()[l + 1];
    for (std::size_t o = 0; o < out; ++o) {
      EXPECT_EQ(clf.bias(l, o), 0.0);
      for (std::size_t i = 0; i < in; ++i) {
        const double w = clf.weight(l, o, i);
        EXPECT_LE(std::abs(w), 0.2);
        sq += w * w;
        ++count;
      }
    }
  }
  // Variance of N(0, s^2) truncated at 2s is about 0.774 s^2.
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(count)), 0.1 * std::sqrt(0.774), 0.005);
}

TEST(Mlp, RejectsBadShapes) {
  EXPECT_THROW(MlpClassifier({4}), ConfigError);
  EXPECT_THROW(MlpClassifier({4, 2}), ConfigError);
  const MlpClassifier clf({4, 1});
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(forward(clf, x), ShapeError);
}

TEST(Loss, MeanSquaredError) {
  EXPECT_DOUBLE_EQ(mse_loss(std::vector<double>{1, 0, 1}, std::vector<double>{1, 0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0, 1}), 0.25);
  EXPECT_NEAR(mse_loss(std::vector<double>{0.8}, std::vector<double>{1}), 0.04, 1e-15);
}

void check_gradient(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Rng rng(seed);
  MlpClassifier clf = MlpClassifier::truncated_normal(sizes, rng, 0.5);
  // Nonzero biases so rectifier kinks are unlikely to sit within a step of the inputs.
  for (std::size_t l = 0; l < clf.layer_count(); ++l)
    for (std::size_t o = 0; o < sizes[l + 1]; ++o) clf.bias(l, o) = 0.1 * static_cast<double>(o % 3) + 0.05;
  const std::vector<double> x = random_input(gen, sizes.front());
  for (double label : {0.0, 1.0}) {
    const std::vector<double> g = backward(clf, x, label);
    ASSERT_EQ(g.size(), clf.params().size());
    const double h = 1e-5;
    for (std::size_t p = 0; p < g.size(); ++p) {
      MlpClassifier plus = clf, minus = clf;
      plus.params()[p] += h;
      minus.params()[p] -= h;
      const double lp = std::pow(forward(plus, x) - label, 2);
      const double lm = std::pow(forward(minus, x) - label, 2);
      const double fd = (lp - lm) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g[p]), 1e-8});
      EXPECT_LT(std::abs(fd - g[p]) / denom, 1e-4) << "param " << p;
    }
  }
}

TEST(Backward, MatchesFiniteDifferencesSmall) { check_gradient({4, 8, 1}, 11); }
TEST(Backward, MatchesFiniteDifferencesDeep) { check_gradient({8, 16, 8, 1}, 12); }

TEST(Backward, DeadRectifierPassesNoGradient) {
  MlpClassifier clf({2, 2, 1});
  clf.weight(0, 0, 0) = 1.0;
  clf.bias(0, 1) = -100.0;  // unit 1 never fires
  clf.weight(1, 0, 0) = 1.0;
  clf.weight(1, 0, 1) = 1.0;
  const std::vector<double> x{0.5, 0.5};
  const std::vector<double> g = backward(clf, x, 1.0);
  EXPECT_EQ(g[clf.weight_offset(0) + 1 * 2 + 0], 0.0);
  EXPECT_EQ(g[clf.weight_offset(0) + 1 * 2 + 1], 0.0);
  EXPECT_EQ(g[clf.bias_offset(0) + 1], 0.0);
  EXPECT_EQ(g[clf.weight_offset(1) + 1], 0.0);
  EXPECT_NE(g[clf.weight_offset(0)], 0.0);
}

TEST(Backward, GradientAtPerfectPredictionIsZero) {
  MlpClassifier clf({3, 1});
  clf.bias(0, 0) = 0.0;
  const std::vector<double> x{1.0, -1.0, 0.5};
  for (double v : backward(clf, x, 0.5)) EXPECT_EQ(v, 0.0);
}

TEST(RmsProp, FirstStepAndAccumulation) {
  std::vector<double> w{1.0, -2.0, 0.0};
  const std::vector<double> g{0.5, -1.0, 0.0};
  RmsPropState st;
  rmsprop_step(w, g, st, 0.01, 0.9, 1e-8);
  ASSERT_EQ(st.mean_square.size(), 3U);
  EXPECT_NEAR(st.mean_square[0], 0.1 * 0.25, 1e-15);
  EXPECT_NEAR(w[0], 1.0 - 0.01 * 0.5 / (std::sqrt(0.025) + 1e-8), 1e-14);
  EXPECT_NEAR(w[1], -2.0 + 0.01 * 1.0 / (std::sqrt(0.1) + 1e-8), 1e-14);
  EXPECT_EQ(w[2], 0.0);
  rmsprop_step(w, g, st, 0.01, 0.9, 1e-8);
  EXPECT_NEAR(st.mean_square[0], 0.9 * 0.025 + 0.025, 1e-15);
}

FeatureSet separable_set(std::uint64_t seed, std::size_t rows, std::size_t width, std::size_t outputs) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.3, kPi);
  std::bernoulli_distribution coin(0.5);
  FeatureSet fs;
  fs.width = width;
  fs.outputs = outputs;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < width; ++i) fs.features.push_back(coin(gen) ? u(gen) : -u(gen));
    for (std::size_t n = 0; n < outputs; ++n)
      fs.labels.push_back(fs.features[r * width + n] > 0.0 ? 1 : 0);
  }
  return fs;
}

TrainConfig small_config() {
  TrainConfig t;
  t.learning_rate = 1e-2;
  t.batch_size = 32;
  t.epochs_max = 100;
  t.hidden = {16};
  t.seed = 21;
  return t;
}

TEST(Training, LearnsSeparableTask) {
  const FeatureSet train = separable_set(1, 400, 4, 2);
  const FeatureSet val = separable_set(2, 100, 4, 2);
  const TrainResult r = train_bank(train, val, small_config());
  ASSERT_EQ(r.bank.size(), 2U);
  for (const ClassifierReport& rep : r.reports) EXPECT_TRUE(rep.converged);
  for (std::size_t n = 0; n < 2; ++n) {
    double last = 1.0;
    for (const HistoryEntry& e : r.history)
      if (e.classifier == n) last = e.val_mse;
    EXPECT_LE(last, 0.01);
  }
  for (double a : accuracy_table(r.bank, val)) EXPECT_GE(a, 0.99);
}

TEST(Training, HistoryAtMarkedEpochs) {
  const FeatureSet train = separable_set(3, 200, 4, 2);
  const FeatureSet val = separable_set(4, 50, 4, 2);
  TrainConfig t = small_config();
  t.epochs_max = 30;
  t.stop_threshold = 1e-300;  // never stop early
  const TrainResult r = train_bank(train, val, t);
  std::vector<std::size_t> epochs;
  for (const HistoryEntry& e : r.history)
    if (e.classifier == 0) epochs.push_back(e.epoch);
  EXPECT_EQ(epochs, (std::vector<std::size_t>{0, 10, 20, 30}));
  const auto mean = mean_history(r.history, 2);
  ASSERT_EQ(mean.size(), 4U);
  EXPECT_EQ(mean[0].classifier, SIZE_MAX);
  EXPECT_LT(mean.back().val_mse, mean.front().val_mse);
}

TEST(Training, MeanHistoryCarriesLastValueForward) {
  const std::vector<HistoryEntry> h{{0, 0, 0.4, 0.5}, {10, 0, 0.1, 0.2},
                                    {0, 1, 0.2, 0.3}};
  const auto mean = mean_history(h, 2);
  ASSERT_EQ(mean.size(), 2U);
  EXPECT_DOUBLE_EQ(mean[0].val_mse, 0.4);
  EXPECT_DOUBLE_EQ(mean[1].val_mse, 0.25);
  EXPECT_DOUBLE_EQ(mean[1].train_mse, 0.15);
}

TEST(Training, ClassifierIndependentOfBank) {
  const FeatureSet train = separable_set(5, 100, 4, 3);
  const FeatureSet val = separable_set(6, 40, 4, 3);
  TrainConfig t = small_config();
  t.epochs_max = 10;
  const TrainResult bank = train_bank(train, val, t);
  const SingleResult single = train_classifier(2, train, val, t);
  EXPECT_EQ(single.classifier, bank.bank.classifiers[2]);
  const std::size_t saved = parallel_workers();
  parallel_workers() = 1;
  const TrainResult serial = train_bank(train, val, t);
  parallel_workers() = saved;
  EXPECT_EQ(serial.bank, bank.bank);
  EXPECT_EQ(serial.history, bank.history);
}

TEST(Training, RejectsEmptyData) {
  FeatureSet empty;
  empty.width = 4;
  empty.outputs = 2;
  EXPECT_THROW(train_bank(empty, separable_set(1, 10, 4, 2), small_config()), ConfigError);
}

ClassifierBank sign_bank(std::size_t width, std::size_t outputs, double gain) {
  ClassifierBank bank;
  for (std::size_t n = 0; n < outputs; ++n) {
    MlpClassifier c({width, 1});
    c.weight(0, 0, n) = gain;
    bank.classifiers.push_back(c);
  }
  return bank;
}

TEST(Inference, TieResolvesToPlus) {
  const ClassifierBank bank = sign_bank(3, 3, 0.0);
  const std::vector<double> x{1.0, -1.0, 0.2};
  EXPECT_EQ(predict_from_features(bank, x), AnalogBeamformer::all(3, 1));
}

TEST(Inference, PhaseOnlyInput) {
  const ClassifierBank bank = sign_bank(4, 2, 3.0);
  const ComplexMatrix h{{cdouble(0, 1), cdouble(0, -1)}, {cdouble(1, 1), cdouble(-1, 0.1)}};
  const AnalogBeamformer a = predict_phi(bank, {h});
  EXPECT_EQ(a, AnalogBeamformer({1, -1}));
  EXPECT_EQ(predict_phi(bank, {cdouble(7.0) * h}), a);
}

TEST(Inference, AccuracyTable) {
  const FeatureSet fs = separable_set(9, 2000, 4, 2);
  for (double a : accuracy_table(sign_bank(4, 2, 5.0), fs)) EXPECT_DOUBLE_EQ(a, 1.0);
  // Always predicts +1: accuracy is the fraction of positive labels.
  for (double a : accuracy_table(sign_bank(4, 2, 0.0), fs))
    EXPECT_NEAR(a, 0.5, 3.0 * std::sqrt(0.25 / 2000.0));
}

TEST(ModelFile, RoundTripAndCorruption) {
  Rng rng(17);
  ClassifierBank bank;
  bank.seed = 99;
  for (int n = 0; n < 3; ++n) bank.classifiers.push_back(MlpClassifier::truncated_normal({6, 5, 1}, rng));
  const auto bytes = encode_model(bank);
  EXPECT_EQ(decode_model(bytes), bank);

  const auto path = std::filesystem::temp_directory_path() / "rishp_model_test.bin";
  save_model(bank, path);
  EXPECT_EQ(load_model(path), bank);
  std::filesystem::remove(path);

  auto flipped = bytes;
  flipped[bytes.size() - 3] ^= 0x10;
  EXPECT_THROW(decode_model(flipped), ChecksumError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  EXPECT_THROW(decode_model(truncated), TruncationError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_model(magic), FormatError);
  auto version = bytes;
  version[8] = static_cast<std::uint8_t>(kModelFormatVersion + 1);
  EXPECT_THROW(decode_model(version), VersionError);
}

}  // namespace
}  // namespace rishp
