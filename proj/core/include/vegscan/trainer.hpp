// Copyright 2026 The vegscan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vegscan/checkpoint.hpp"
#include "vegscan/featurestack.hpp"
#include "vegscan/manifest.hpp"
#include "vegscan/nn.hpp"
#include "vegscan/optim.hpp"

namespace vegscan {

// ---------------------------------------------------------------------------
// Splitting and augmentation

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;

  void validate() const;
};

/// Stratified split of the unflipped records. Each class is shuffled with
/// \p seed and cut so that per-class counts are within one of their quota
/// and the overall split sizes follow the largest-remainder rounding of the
/// total. Flipped records already present inherit their original's split.
/// Throws InvalidArgument when a class has one or two samples.
Manifest split_dataset(const Manifest& manifest, const SplitRatios& ratios, std::uint64_t seed);

/// Append a mirrored copy of every unflipped record that lacks one. Copies
/// share the split and label of their original.
Manifest add_flipped_copies(const Manifest& manifest);

/// Records of one split in manifest order.
Manifest select_split(const Manifest& manifest, Split split);

/// Per-class counts of a record set.
std::array<std::size_t, kNumClasses> class_counts(const Manifest& records);

// ---------------------------------------------------------------------------
// Feature sources

/// Supplies the 5-channel stack for a record.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual Tensor load(const SampleRecord& rec) const = 0;
};

/// Reads stacks written by write_feature_cache().
class CachedFeatures final : public FeatureSource {
 public:
  explicit CachedFeatures(std::filesystem::path dir) : dir_(std::move(dir)) {}
  Tensor load(const SampleRecord& rec) const override;

 private:
  std::filesystem::path dir_;
};

/// Stacks held in memory, keyed by record id.
class InMemoryFeatures final : public FeatureSource {
 public:
  void add(std::string id, Tensor stack) { stacks_.insert_or_assign(std::move(id), std::move(stack)); }
  Tensor load(const SampleRecord& rec) const override;
  std::size_t size() const noexcept { return stacks_.size(); }

 private:
  std::map<std::string, Tensor, std::less<>> stacks_;
};

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::string preset = "smallnet";
  std::size_t batch_size = 16;
  double alpha0 = 1e-3;
  double tau_max = 30;
  double tau_start = 10;
  double weight_decay = 1e-4;
  /// Number of epochs to run; 0 means tau_max.
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  double risk_multiplier = 2.0;
  int risk_class = 2;
  optim::AdamConfig adam;  // weight_decay is taken from the field above
  /// Train every layer at the full rate instead of the fine-tuning policy.
  bool full_rate = false;
  /// Where epoch_NNNN.gsck files go; empty disables checkpointing.
  std::filesystem::path checkpoint_dir;
  bool save_optimizer_state = false;
  /// Keep only the newest N checkpoints (0 keeps all).
  std::size_t keep_checkpoints = 0;
  /// Append one JSON line per epoch; empty disables the log.
  std::filesystem::path metrics_path;

  /// Hyperparameters of a named row: alexnet-like, resnet-like, vgg-like,
  /// smallnet. Throws InvalidArgument for an unknown name.
  static TrainConfig from_preset(std::string_view name);
  static const std::vector<std::string>& preset_names();

  std::size_t total_epochs() const;
  optim::LrSchedule schedule() const;
  void validate() const;
  /// Overlay keys present in \p j onto this config.
  void merge_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct EpochRecord {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double dev_accuracy = 0.0;
  double learning_rate = 0.0;
  /// Relative to the metrics log directory when a log is written.
  std::string checkpoint;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

nlohmann::json to_json(const EpochRecord& r);
EpochRecord epoch_record_from_json(const nlohmann::json& j);
std::vector<EpochRecord> read_metrics(const std::filesystem::path& path);

struct TrainResult {
  std::vector<EpochRecord> epochs;
  nn::Parameters<float> params;       // after the final epoch
  nn::Parameters<float> best_params;  // highest dev accuracy, earliest on ties
  std::uint32_t best_epoch = 0;
  std::vector<double> class_weights;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Train on the train split of \p manifest, reporting dev accuracy on the
/// dev split after every epoch. Deterministic for a given seed. Throws
/// NumericalError (listing the batch ids) on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const nn::NetworkSpec& spec, const Manifest& manifest,
                  const FeatureSource& features, const nn::Parameters<float>* init = nullptr,
                  const EpochCallback& on_epoch = {});

/// Class predicted by a single model for a batch of stacks.
std::vector<int> predict(const nn::NetworkSpec& spec, const nn::Parameters<float>& params, const Manifest& records,
                         const FeatureSource& features, std::size_t batch_size = 16);

// ---------------------------------------------------------------------------
// Ensembles

struct TopKSelection {
  std::vector<EpochRecord> selected;
  /// Non-empty when fewer than k records could be selected.
  std::string warning;
};

/// Greedy selection by dev accuracy (earlier epoch first on ties) keeping
/// accepted epochs at least \p min_gap apart. Throws on an empty list.
TopKSelection select_top_k(std::span<const EpochRecord> records, std::size_t k = 10, std::uint32_t min_gap = 5);

/// Plurality of class votes; ties go to the highest tied class index.
/// Throws on an empty vote list or a vote outside [0, kNumClasses).
int ensemble_vote(std::span<const int> votes);

struct Model {
  nn::NetworkSpec spec;
  nn::Parameters<float> params;
  std::string name;
};

struct EnsemblePrediction {
  int predicted = 0;
  std::array<int, kNumClasses> votes{};
  std::array<double, kNumClasses> confidence{};  // mean softmax over models
};

EnsemblePrediction ensemble_predict(std::span<const Model> models, const Tensor& stack);

// ---------------------------------------------------------------------------
// Evaluation

class ConfusionMatrix {
 public:
  void add(int truth, int predicted);
  std::size_t at(int truth, int predicted) const;
  std::size_t total() const noexcept;
  std::size_t row_sum(int truth) const;
  /// Diagonal over row sum; nullopt for an empty row.
  std::optional<double> class_accuracy(int truth) const;
  double overall_accuracy() const;
  nlohmann::json to_json() const;

 private:
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts_{};
};

struct FlaggedEntry {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::string path;
  int label = 0;
  int predicted = 2;
  std::array<double, kNumClasses> confidence{};
  std::array<int, kNumClasses> votes{};
};

nlohmann::json to_json(const FlaggedEntry& f);
FlaggedEntry flagged_from_json(const nlohmann::json& j);

struct EvaluationReport {
  ConfusionMatrix confusion;
  std::vector<FlaggedEntry> flagged;  // predicted class 2
  std::vector<std::string> models;

  nlohmann::json to_json() const;
};

/// Run every record through the ensemble (a single model is an ensemble of
/// one) and tally the results. Throws on an empty record set.
EvaluationReport evaluate(std::span<const Model> models, const Manifest& records, const FeatureSource& features);

}  // namespace vegscan
