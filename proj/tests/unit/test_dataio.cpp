#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "rishp/dataio.hpp"
#include "rishp/errors.hpp"
#include "rishp/parallel.hpp"

namespace rishp {
namespace {

DatasetConfig small_config() {
  DatasetConfig cfg;
  cfg.system = SystemConfig::for_users(8, 2);
  cfg.ceo.iterations = 5;
  cfg.ceo.candidates = 40;
  cfg.seed = 123;
  return cfg;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Generate, SingleSampleMatchesComponents) {
  const DatasetConfig cfg = small_config();
  const Dataset ds = generate_dataset(1, cfg);
  ASSERT_EQ(ds.samples.size(), 1U);
  const DataSample& s = ds.samples[0];

  SystemConfig sys = cfg.system;
  sys.rng_seed = derive_seed(cfg.seed, {tag(StreamTag::kSample), 0});
  EXPECT_EQ(s.H.H, generate_sv_channel(sys, cfg.sv).H);

  const FeederGains g = sample_feeder(cfg, 0);
  Rng rng(derive_seed(cfg.seed, {tag(StreamTag::kCeo), 0}));
  const OptimResult ceo = ceo_optimize(s.H, g, cfg.system, cfg.ceo, rng);
  EXPECT_EQ(s.phi_label, canonical_phi(ceo.phi, cfg.system.Ns));
  EXPECT_DOUBLE_EQ(s.rate_label, zf_sum_rate(s.H, s.phi_label, g, cfg.system));
  EXPECT_NEAR(s.rate_label, ceo.rate, 1e-12);
  EXPECT_EQ(s.phi_label[0], 1);
  EXPECT_EQ(s.phi_label[4], 1);
  EXPECT_EQ(s.channel_model, ChannelModel::kSalehValenzuela);
}

TEST(Generate, GppSamplesCarryTheirModel) {
  DatasetConfig cfg = small_config();
  cfg.model = ChannelModel::kGpp;
  const Dataset ds = generate_dataset(3, cfg);
  for (const DataSample& s : ds.samples) {
    EXPECT_EQ(s.channel_model, ChannelModel::kGpp);
    EXPECT_TRUE(s.H.H.all_finite());
  }
}

TEST(Generate, SameSeedSameBytesAnyThreadCount) {
  const DatasetConfig cfg = small_config();
  Dataset a = generate_dataset(12, cfg);
  const std::size_t saved = parallel_workers();
  parallel_workers() = 1;
  Dataset b = generate_dataset(12, cfg);
  parallel_workers() = 3;
  Dataset c = generate_dataset(12, cfg);
  parallel_workers() = saved;
  split_dataset(a, 0.2, 0.2, 5);
  split_dataset(b, 0.2, 0.2, 5);
  split_dataset(c, 0.2, 0.2, 5);
  EXPECT_EQ(encode_dataset(a), encode_dataset(b));
  EXPECT_EQ(encode_dataset(a), encode_dataset(c));

  DatasetConfig other = cfg;
  other.seed = 124;
  EXPECT_NE(generate_dataset(12, other).samples[0].H.H, a.samples[0].H.H);
}

TEST(Generate, RejectsEmpty) { EXPECT_THROW(generate_dataset(0, small_config()), ConfigError); }

Dataset blank_dataset(std::size_t q) {
  Dataset ds;
  ds.config = small_config();
  for (std::size_t i = 0; i < q; ++i) {
    DataSample s;
    s.H.H = ComplexMatrix(2, 8);
    s.phi_label = AnalogBeamformer::all(8, 1);
    s.sample_index = i;
    ds.samples.push_back(s);
  }
  return ds;
}

TEST(Split, CountsAndDisjointness) {
  Dataset ds = blank_dataset(100);
  split_dataset(ds, 0.2, 0.2, 7);
  EXPECT_EQ(ds.split.train.size(), 64U);
  EXPECT_EQ(ds.split.validation.size(), 16U);
  EXPECT_EQ(ds.split.test.size(), 20U);
  std::set<std::uint64_t> all;
  for (const auto* part : {&ds.split.train, &ds.split.validation, &ds.split.test}) {
    EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
    all.insert(part->begin(), part->end());
  }
  EXPECT_EQ(all.size(), 100U);
  EXPECT_EQ(*all.rbegin(), 99U);

  Dataset again = blank_dataset(100);
  split_dataset(again, 0.2, 0.2, 7);
  EXPECT_EQ(again.split, ds.split);

  Dataset reseeded = blank_dataset(100);
  split_dataset(reseeded, 0.2, 0.2, 8);
  EXPECT_EQ(reseeded.split.test.size(), 20U);
  EXPECT_NE(reseeded.split.test, ds.split.test);
}

TEST(Split, RejectsBadFractions) {
  Dataset ds = blank_dataset(10);
  EXPECT_THROW(split_dataset(ds, 0.0, 0.2, 1), ConfigError);
  EXPECT_THROW(split_dataset(ds, 0.6, 1.0, 1), ConfigError);
  EXPECT_THROW(split_dataset(ds, 1.2, 0.2, 1), ConfigError);
}

TEST(Features, RowsFollowSplit) {
  Dataset ds = generate_dataset(10, small_config());
  split_dataset(ds, 0.2, 0.25, 3);
  const FeatureSet test = features(ds, Split::kTest);
  EXPECT_EQ(test.rows(), 2U);
  EXPECT_EQ(test.width, 16U);
  EXPECT_EQ(test.outputs, 8U);
  const Preprocessed p = preprocess(ds.samples[ds.split.test[1]].H, ds.samples[ds.split.test[1]].phi_label);
  EXPECT_TRUE(std::equal(p.theta.begin(), p.theta.end(), test.row(1).begin()));
  for (std::size_t n = 0; n < 8; ++n) EXPECT_EQ(test.label(1, n), p.labels[n]);
}

TEST(DatasetFile, RoundTripIsByteExact) {
  Dataset ds = generate_dataset(6, small_config());
  split_dataset(ds, 0.2, 0.2, 2);
  const auto path = temp_file("rishp_dataset_roundtrip.bin");
  save_dataset(ds, path);
  const Dataset loaded = load_dataset(path);
  EXPECT_EQ(loaded.samples, ds.samples);
  EXPECT_EQ(loaded.split, ds.split);
  const auto path2 = temp_file("rishp_dataset_roundtrip2.bin");
  save_dataset(loaded, path2);
  EXPECT_EQ(file_bytes(path), file_bytes(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST(DatasetFile, DetectsDamage) {
  const Dataset ds = generate_dataset(2, small_config());
  const auto bytes = encode_dataset(ds);
  for (std::size_t pos : {bytes.size() / 2, bytes.size() - 1, std::size_t{30}}) {
    auto bad = bytes;
    bad[pos] ^= 0x01;
    EXPECT_THROW(decode_dataset(bad), ChecksumError) << pos;
  }
  auto newer = bytes;
  newer[8] = static_cast<std::uint8_t>(kDatasetFormatVersion + 1);
  EXPECT_THROW(decode_dataset(newer), VersionError);
  auto cut = bytes;
  cut.resize(bytes.size() - 1);
  EXPECT_THROW(decode_dataset(cut), TruncationError);
  cut.resize(4);
  EXPECT_THROW(decode_dataset(cut), TruncationError);
  auto magic = bytes;
  magic[1] ^= 0xff;
  EXPECT_THROW(decode_dataset(magic), FormatError);
  EXPECT_THROW(load_dataset(temp_file("rishp_does_not_exist.bin")), LoadError);
}

TEST(KeyValues, ParseAndFormat) {
  const KeyValues kv = parse_key_values("# comment\nN = 16\n\nmodel=gpp  \n snr_db = 10\n");
  EXPECT_EQ(kv.at("N"), "16");
  EXPECT_EQ(kv.at("model"), "gpp");
  EXPECT_EQ(kv.at("snr_db"), "10");
  EXPECT_EQ(parse_key_values(format_key_values(kv)), kv);
  EXPECT_THROW(parse_key_values("no equals sign\n"), ConfigError);
}

TEST(KeyValues, ConfigRoundTrip) {
  DatasetConfig cfg = small_config();
  cfg.model = ChannelModel::kGpp;
  cfg.gpp.cluster_powers = {0.5, 0.25, 0.25};
  cfg.gpp.P = 3;
  cfg.system.set_snr_db(10.0);
  DatasetConfig back;
  EXPECT_TRUE(apply_key_values(to_key_values(cfg), back).empty());
  EXPECT_EQ(to_key_values(back), to_key_values(cfg));
  EXPECT_EQ(back.system.sigma2, cfg.system.sigma2);
  EXPECT_EQ(back.gpp.cluster_powers, cfg.gpp.cluster_powers);

  const auto unknown = apply_key_values({{"bogus", "1"}, {"K", "2"}}, back);
  EXPECT_EQ(unknown, std::vector<std::string>{"bogus"});
  EXPECT_THROW(apply_key_values({{"N", "sixteen"}}, back), ConfigError);
  EXPECT_THROW(apply_key_values({{"model", "rayleigh"}}, back), ConfigError);
}

TEST(Metadata, ListsCountsAndConfig) {
  Dataset ds = blank_dataset(10);
  split_dataset(ds, 0.2, 0.25, 1);
  const KeyValues kv = parse_key_values(dataset_metadata(ds, "2026-01-01T00:00:00Z"));
  EXPECT_EQ(kv.at("samples"), "10");
  EXPECT_EQ(kv.at("test_count"), "2");
  EXPECT_EQ(kv.at("validation_count"), "2");
  EXPECT_EQ(kv.at("train_count"), "6");
  EXPECT_EQ(kv.at("created"), "2026-01-01T00:00:00Z");
  EXPECT_EQ(kv.at("N"), "8");
}

}  // namespace
}  // namespace rishp
