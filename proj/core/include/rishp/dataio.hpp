#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rishp/channel.hpp"
#include "rishp/dlmdc.hpp"
#include "rishp/optim.hpp"
#include "rishp/precoding.hpp"

namespace rishp {

struct DataSample {
  ChannelMatrix H;
  AnalogBeamformer phi_label;
  double rate_label = 0.0;  // ZF sum-rate of phi_label at the dataset's sigma2
  ChannelModel channel_model = ChannelModel::kSalehValenzuela;
  std::uint64_t sample_index = 0;

  friend bool operator==(const DataSample& a, const DataSample& b) {
    return a.H.H == b.H.H && a.phi_label == b.phi_label && a.rate_label == b.rate_label &&
           a.channel_model == b.channel_model && a.sample_index == b.sample_index;
  }
};

/// Everything needed to regenerate a dataset.
struct DatasetConfig {
  SystemConfig system;
  ChannelModel model = ChannelModel::kSalehValenzuela;
  SVChannelConfig sv;
  GppChannelConfig gpp;
  CeoParams ceo;
  FeederMode feeder = FeederMode::kAllOnes;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DatasetSplit {
  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> validation;
  std::vector<std::uint64_t> test;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct Dataset {
  DatasetConfig config;
  std::vector<DataSample> samples;
  DatasetSplit split;  // empty until split_dataset runs
};

/// Channel realization and feeder gains for sample q, from substreams of (seed, q).
ChannelMatrix sample_channel(const DatasetConfig& cfg, std::uint64_t q);
FeederGains sample_feeder(const DatasetConfig& cfg, std::uint64_t q);

/// CEO labeler for one channel. The CEO vector is mapped to its canonical
/// representative (first element of each sub-surface +1), which has the same rate.
DataSample label_sample(const DatasetConfig& cfg, std::uint64_t q);

/// Q labeled samples. Deterministic under cfg.seed regardless of thread count.
Dataset generate_dataset(std::size_t q, const DatasetConfig& cfg);

/// Carves test_fraction first, then splits the rest by validation_fraction.
/// Throws ConfigError if a fraction is outside (0, 1) or they sum to >= 1.
void split_dataset(Dataset& ds, double test_fraction, double validation_fraction,
                   std::uint64_t seed);

enum class Split { kTrain, kValidation, kTest };
FeatureSet features(const Dataset& ds, Split which);

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

/// Atomic write of the binary file (write temp, rename).
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// key = value text (sidecar metadata and CLI config files)

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
std::string format_key_values(const KeyValues& kv);
KeyValues read_key_values(const std::filesystem::path& path);

KeyValues to_key_values(const DatasetConfig& cfg);

/// Applies every recognised key to cfg and returns the keys it did not recognise.
/// Throws ConfigError on malformed values.
std::vector<std::string> apply_key_values(const KeyValues& kv, DatasetConfig& cfg);

/// Sidecar text: the config keys plus sample count and a creation timestamp.
std::string dataset_metadata(const Dataset& ds, const std::string& created);
void save_metadata(const Dataset& ds, const std::filesystem::path& path);

}  // namespace rishp
