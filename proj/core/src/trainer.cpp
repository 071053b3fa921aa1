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

#include "vegscan/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace vegscan {
namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::array<Split, 3> kSplits = {Split::train, Split::dev, Split::test};

// Distribute the per-class leftovers so that split totals hit their targets,
// preferring the cells with the largest fractional quota. Exhaustive over
// the (tiny) space of per-class choices.
struct LeftoverSearch {
  std::vector<std::array<double, 3>> frac;
  std::vector<int> need;  // leftover units per class
  std::array<int, 3> column_need{};
  std::vector<std::array<int, 3>> best;
  std::vector<std::array<int, 3>> current;
  double best_score = -1.0;

  void run(std::size_t c, std::array<int, 3> cols, double score) {
    if (c == frac.size()) {
      if (cols == column_need && score > best_score + 1e-12) {
        best_score = score;
        best = current;
      }
      return;
    }
    for (int mask = 0; mask < 8; ++mask) {
      if (std::popcount(static_cast<unsigned>(mask)) != need[c]) continue;
      std::array<int, 3> next = cols;
      double s = score;
      bool ok = true;
      for (int k = 0; k < 3; ++k) {
        current[c][static_cast<std::size_t>(k)] = (mask >> k) & 1;
        if ((mask >> k) & 1) {
          next[static_cast<std::size_t>(k)] += 1;
          s += frac[c][static_cast<std::size_t>(k)];
          if (next[static_cast<std::size_t>(k)] > column_need[static_cast<std::size_t>(k)]) ok = false;
        }
      }
      if (ok) run(c + 1, next, s);
    }
  }
};

// Largest-remainder apportionment of n into the three ratios.
std::array<int, 3> apportion(std::size_t n, const std::array<double, 3>& r) {
  std::array<int, 3> out{};
  std::array<double, 3> frac{};
  int used = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double q = static_cast<double>(n) * r[k];
    out[k] = static_cast<int>(std::floor(q + 1e-9));
    frac[k] = q - out[k];
    used += out[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t i = 0; used < static_cast<int>(n); ++i, ++used) out[order[i % 3]] += 1;
  return out;
}

Tensor make_batch(const Manifest& records, std::span<const std::size_t> idx, const FeatureSource& features,
                  const Shape& input_shape, std::vector<int>* labels) {
  Shape shape{idx.size()};
  shape.insert(shape.end(), input_shape.begin(), input_shape.end());
  Tensor batch(shape);
  if (labels) labels->clear();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const SampleRecord& rec = records[idx[b]];
    const Tensor stack = features.load(rec);
    if (stack.shape() != input_shape) {
      throw InvalidArgument("feature stack for " + rec.id + " has shape " + shape_to_string(stack.shape()) +
                            ", network expects " + shape_to_string(input_shape));
    }
    std::copy(stack.data().begin(), stack.data().end(), batch.slice(b).begin());
    if (labels) labels->push_back(rec.label);
  }
  return batch;
}

int argmax_row(const Tensor& scores, std::size_t b) {
  int best = 0;
  for (std::size_t j = 1; j < scores.dim(1); ++j) {
    if (scores(b, j) > scores(b, static_cast<std::size_t>(best))) best = static_cast<int>(j);
  }
  return best;
}

std::string epoch_file(std::uint32_t epoch) {
  std::ostringstream os;
  os << "epoch_" << std::setw(4) << std::setfill('0') << epoch << ".gsck";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

void SplitRatios::validate() const {
  for (const double r : {train, dev, test}) {
    if (!(r >= 0.0)) throw InvalidArgument("split ratios must be non-negative");
  }
  if (std::fabs(train + dev + test - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
}

Manifest split_dataset(const Manifest& manifest, const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  const std::array<double, 3> r{ratios.train, ratios.dev, ratios.test};
  std::array<std::vector<std::size_t>, kNumClasses> members;
  std::size_t n = 0;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const SampleRecord& rec = manifest[i];
    if (rec.label < 0 || rec.label >= kNumClasses) {
      throw InvalidArgument("record " + rec.id + " has label " + std::to_string(rec.label));
    }
    if (rec.flipped) continue;
    members[static_cast<std::size_t>(rec.label)].push_back(i);
    ++n;
  }
  for (int c = 0; c < kNumClasses; ++c) {
    const std::size_t count = members[static_cast<std::size_t>(c)].size();
    if (count > 0 && count < 3) {
      throw InvalidArgument("class " + std::to_string(c) + " has only " + std::to_string(count) +
                            " sample(s); a stratified split needs at least 3 (consider merging it into another class)");
    }
  }

  const std::array<int, 3> target = apportion(n, r);
  std::vector<std::array<int, 3>> quota(kNumClasses);
  LeftoverSearch search;
  search.frac.resize(kNumClasses);
  search.need.resize(kNumClasses);
  search.current.resize(kNumClasses);
  std::array<int, 3> floors_total{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double count = static_cast<double>(members[c].size());
    int used = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double q = count * r[k];
      quota[c][k] = static_cast<int>(std::floor(q + 1e-9));
      search.frac[c][k] = std::max(0.0, q - quota[c][k]);
      used += quota[c][k];
      floors_total[k] += quota[c][k];
    }
    search.need[c] = static_cast<int>(members[c].size()) - used;
  }
  for (std::size_t k = 0; k < 3; ++k) search.column_need[k] = target[k] - floors_total[k];
  search.run(0, {0, 0, 0}, 0.0);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (search.best_score >= 0.0) {
      for (std::size_t k = 0; k < 3; ++k) quota[c][k] += search.best[c][k];
    } else {
      quota[c] = apportion(members[c].size(), r);
    }
  }

  Manifest out = manifest;
  std::unordered_map<std::string, Split> assigned;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<std::size_t> idx = members[c];
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return manifest[a].id < manifest[b].id; });
    std::mt19937_64 rng(mix_seed(seed, c));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (int j = 0; j < quota[c][k]; ++j, ++pos) {
        out[idx[pos]].split = kSplits[k];
        assigned[manifest[idx[pos]].id] = kSplits[k];
      }
    }
  }
  for (SampleRecord& rec : out) {
    if (!rec.flipped) continue;
    const auto it = assigned.find(original_id(rec));
    rec.split = it == assigned.end() ? Split::unassigned : it->second;
  }
  return out;
}

Manifest add_flipped_copies(const Manifest& manifest) {
  std::set<std::string> present;
  for (const SampleRecord& rec : manifest) present.insert(rec.id);
  Manifest out = manifest;
  for (const SampleRecord& rec : manifest) {
    if (rec.flipped) continue;
    SampleRecord m = rec;
    m.id = mirror_id(rec.id);
    m.flipped = true;
    if (present.insert(m.id).second) out.push_back(std::move(m));
  }
  return out;
}

Manifest select_split(const Manifest& manifest, Split split) {
  Manifest out;
  std::copy_if(manifest.begin(), manifest.end(), std::back_inserter(out),
               [&](const SampleRecord& r) { return r.split == split; });
  return out;
}

std::array<std::size_t, kNumClasses> class_counts(const Manifest& records) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const SampleRecord& rec : records) {
    if (rec.label < 0 || rec.label >= kNumClasses) throw InvalidArgument("record " + rec.id + " has a bad label");
    ++counts[static_cast<std::size_t>(rec.label)];
  }
  return counts;
}

// ---------------------------------------------------------------------------

Tensor CachedFeatures::load(const SampleRecord& rec) const { return read_feature_cache(dir_, rec.id); }

Tensor InMemoryFeatures::load(const SampleRecord& rec) const {
  const auto it = stacks_.find(rec.id);
  if (it == stacks_.end()) throw RuntimeError("no feature stack for record " + rec.id);
  return it->second;
}

// ---------------------------------------------------------------------------

TrainConfig TrainConfig::from_preset(std::string_view name) {
  TrainConfig c;
  c.preset = std::string(name);
  if (name == "alexnet-like") {
    c.batch_size = 64;
    c.alpha0 = 2e-5;
    c.tau_max = 70;
    c.tau_start = 30;
    c.weight_decay = 1e-4;
  } else if (name == "resnet-like") {
    c.batch_size = 96;
    c.alpha0 = 8e-4;
    c.tau_max = 150;
    c.tau_start = 50;
    c.weight_decay = 5e-4;
  } else if (name == "vgg-like") {
    c.batch_size = 32;
    c.alpha0 = 1e-4;
    c.tau_max = 11;
    c.tau_start = 5;
    c.weight_decay = 1e-3;
  } else if (name == "smallnet") {
    c.batch_size = 16;
    c.alpha0 = 1e-3;
    c.tau_max = 30;
    c.tau_start = 10;
    c.weight_decay = 1e-4;
  } else {
    throw InvalidArgument("unknown preset '" + std::string(name) +
                          "' (expected alexnet-like, resnet-like, vgg-like or smallnet)");
  }
  return c;
}

const std::vector<std::string>& TrainConfig::preset_names() {
  static const std::vector<std::string> names{"alexnet-like", "resnet-like", "vgg-like", "smallnet"};
  return names;
}

std::size_t TrainConfig::total_epochs() const {
  return epochs > 0 ? epochs : static_cast<std::size_t>(std::ceil(tau_max));
}

optim::LrSchedule TrainConfig::schedule() const { return {alpha0, tau_start, tau_max}; }

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  schedule().validate();
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(risk_multiplier > 0.0)) throw InvalidArgument("risk_multiplier must be positive");
  if (risk_class < 0 || risk_class >= kNumClasses) throw InvalidArgument("risk_class out of range");
  optim::AdamConfig a = adam;
  a.weight_decay = weight_decay;
  a.validate();
}

void TrainConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("training config must be a JSON object");
  if (j.contains("preset")) *this = from_preset(j.at("preset").get<std::string>());
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    take("batch_size", batch_size);
    take("alpha0", alpha0);
    take("tau_max", tau_max);
    take("tau_start", tau_start);
    take("weight_decay", weight_decay);
    take("epochs", epochs);
    take("seed", seed);
    take("risk_multiplier", risk_multiplier);
    take("risk_class", risk_class);
    take("full_rate", full_rate);
    take("save_optimizer_state", save_optimizer_state);
    take("keep_checkpoints", keep_checkpoints);
    if (j.contains("checkpoint_dir")) checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    if (j.contains("metrics_path")) metrics_path = j.at("metrics_path").get<std::string>();
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      if (a.contains("beta1")) adam.beta1 = a.at("beta1").get<double>();
      if (a.contains("beta2")) adam.beta2 = a.at("beta2").get<double>();
      if (a.contains("epsilon")) adam.epsilon = a.at("epsilon").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("training config: ") + e.what());
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"preset", preset},
          {"batch_size", batch_size},
          {"alpha0", alpha0},
          {"tau_max", tau_max},
          {"tau_start", tau_start},
          {"weight_decay", weight_decay},
          {"epochs", total_epochs()},
          {"seed", seed},
          {"risk_multiplier", risk_multiplier},
          {"risk_class", risk_class},
          {"full_rate", full_rate},
          {"adam", {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}}},
          {"checkpoint_dir", checkpoint_dir.string()},
          {"save_optimizer_state", save_optimizer_state},
          {"keep_checkpoints", keep_checkpoints},
          {"metrics_path", metrics_path.string()}};
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"train_accuracy", r.train_accuracy},
          {"dev_accuracy", r.dev_accuracy},
          {"learning_rate", r.learning_rate},
          {"checkpoint", r.checkpoint}};
}

EpochRecord epoch_record_from_json(const nlohmann::json& j) {
  try {
    EpochRecord r;
    r.epoch = j.at("epoch").get<std::uint32_t>();
    r.train_loss = j.value("train_loss", 0.0);
    r.train_accuracy = j.value("train_accuracy", 0.0);
    r.dev_accuracy = j.at("dev_accuracy").get<double>();
    r.learning_rate = j.value("learning_rate", 0.0);
    r.checkpoint = j.value("checkpoint", std::string());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad epoch record: ") + e.what());
  }
}

std::vector<EpochRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open metrics log " + path.string());
  std::vector<EpochRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(epoch_record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

TrainResult train(const TrainConfig& cfg, const nn::NetworkSpec& spec_in, const Manifest& manifest,
                  const FeatureSource& features, const nn::Parameters<float>* init, const EpochCallback& on_epoch) {
  cfg.validate();
  nn::NetworkSpec spec = spec_in;
  spec.validate();
  if (cfg.full_rate) {
    for (auto& l : spec.layers) {
      l.trainable = true;
      l.lr_multiplier = 1.0;
    }
  }
  const Manifest train_set = select_split(manifest, Split::train);
  const Manifest dev_set = select_split(manifest, Split::dev);
  if (train_set.empty()) throw InvalidArgument("training split is empty");

  // Class weights from the training split; a missing class keeps weight 1.
  const auto counts = class_counts(train_set);
  std::vector<std::size_t> safe(counts.begin(), counts.end());
  const std::size_t max_count = *std::max_element(safe.begin(), safe.end());
  for (auto& c : safe) {
    if (c == 0) c = max_count;
  }
  nn::LossSpec loss;
  loss.class_weights = optim::class_weights(safe, cfg.risk_multiplier, cfg.risk_class);

  TrainResult result;
  result.class_weights = loss.class_weights;
  result.params = init ? *init : nn::init_params<float>(spec, cfg.seed);
  optim::AdamState<float> state = optim::AdamState<float>::zeros_like(result.params);
  optim::AdamConfig adam = cfg.adam;
  adam.weight_decay = cfg.weight_decay;

  std::ofstream metrics;
  if (!cfg.metrics_path.empty()) {
    if (cfg.metrics_path.has_parent_path()) std::filesystem::create_directories(cfg.metrics_path.parent_path());
    metrics.open(cfg.metrics_path, std::ios::trunc);
    if (!metrics) throw RuntimeError("cannot write metrics log " + cfg.metrics_path.string());
  }
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  const std::size_t epochs = cfg.total_epochs();
  std::vector<std::size_t> order(train_set.size());
  std::vector<int> labels;
  double best_dev = -1.0;
  std::vector<std::filesystem::path> written;
  for (std::uint32_t epoch = 1; epoch <= epochs; ++epoch) {
    const double lr = optim::lr_at(cfg.schedule(), epoch);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch_no = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor batch = make_batch(train_set, idx, features, spec.input_shape, &labels);
      nn::ForwardCache<float> cache;
      const Tensor scores = nn::forward(spec, result.params, batch, nn::Mode::train,
                                        mix_seed(mix_seed(cfg.seed, epoch), batch_no), &cache);
      Tensor grad;
      const double batch_loss = nn::weighted_cross_entropy(scores, labels, loss, &grad);
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "non-finite loss in epoch " << epoch << ", batch " << batch_no << " (ids:";
        for (const std::size_t i : idx) os << ' ' << train_set[i].id;
        os << ")";
        throw NumericalError(os.str());
      }
      loss_sum += batch_loss * static_cast<double>(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) {
        if (argmax_row(scores, b) == labels[b]) ++correct;
      }
      const nn::Gradients<float> grads = nn::backward(spec, result.params, cache, grad);
      try {
        optim::adam_step(spec, result.params, grads, state, adam, lr);
      } catch (const NumericalError& e) {
        std::ostringstream os;
        os << e.what() << " in epoch " << epoch << ", batch " << batch_no << " (ids:";
        for (const std::size_t i : idx) os << ' ' << train_set[i].id;
        os << ")";
        throw NumericalError(os.str());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    rec.learning_rate = lr;
    if (!dev_set.empty()) {
      const std::vector<int> pred = predict(spec, result.params, dev_set, features, cfg.batch_size);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < dev_set.size(); ++i) hits += pred[i] == dev_set[i].label ? 1 : 0;
      rec.dev_accuracy = static_cast<double>(hits) / static_cast<double>(dev_set.size());
    }
    if (!cfg.checkpoint_dir.empty()) {
      const std::filesystem::path path = cfg.checkpoint_dir / epoch_file(epoch);
      Checkpoint ck;
      ck.params = result.params;
      if (cfg.save_optimizer_state) ck.optimizer = state;
      ck.epoch = epoch;
      ck.dev_accuracy = rec.dev_accuracy;
      write_checkpoint(path, spec, ck);
      rec.checkpoint = path.string();
      if (!cfg.metrics_path.empty()) {
        // Relative to the metrics log so runs can be moved or compared.
        const auto base = cfg.metrics_path.has_parent_path() ? cfg.metrics_path.parent_path() : ".";
        const auto rel = path.lexically_relative(base);
        if (!rel.empty()) rec.checkpoint = rel.string();
      }
      written.push_back(path);
      if (cfg.keep_checkpoints > 0 && written.size() > cfg.keep_checkpoints) {
        std::filesystem::remove(written.front());
        written.erase(written.begin());
      }
    }
    if (rec.dev_accuracy > best_dev) {
      best_dev = rec.dev_accuracy;
      result.best_params = result.params;
      result.best_epoch = epoch;
    }
    if (metrics.is_open()) {
      metrics << to_json(rec).dump() << '\n';
      metrics.flush();
    }
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::vector<int> predict(const nn::NetworkSpec& spec, const nn::Parameters<float>& params, const Manifest& records,
                         const FeatureSource& features, std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  std::vector<int> out;
  out.reserve(records.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t end = std::min(records.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor batch = make_batch(records, idx, features, spec.input_shape, nullptr);
    const Tensor scores = nn::forward(spec, params, batch, nn::Mode::eval);
    for (std::size_t b = 0; b < idx.size(); ++b) out.push_back(argmax_row(scores, b));
  }
  return out;
}

// ---------------------------------------------------------------------------

TopKSelection select_top_k(std::span<const EpochRecord> records, std::size_t k, std::uint32_t min_gap) {
  if (records.empty()) throw InvalidArgument("select_top_k: no epoch records");
  std::vector<const EpochRecord*> sorted;
  for (const EpochRecord& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const EpochRecord* a, const EpochRecord* b) {
    if (a->dev_accuracy != b->dev_accuracy) return a->dev_accuracy > b->dev_accuracy;
    return a->epoch < b->epoch;
  });
  TopKSelection sel;
  for (const EpochRecord* r : sorted) {
    if (sel.selected.size() >= k) break;
    const bool far = std::all_of(sel.selected.begin(), sel.selected.end(), [&](const EpochRecord& s) {
      const std::uint32_t gap = s.epoch > r->epoch ? s.epoch - r->epoch : r->epoch - s.epoch;
      return gap >= min_gap;
    });
    if (far) sel.selected.push_back(*r);
  }
  if (sel.selected.size() < k) {
    sel.warning = "only " + std::to_string(sel.selected.size()) + " of " + std::to_string(k) +
                  " requested checkpoints satisfy the " + std::to_string(min_gap) + "-epoch gap";
  }
  return sel;
}

int ensemble_vote(std::span<const int> votes) {
  if (votes.empty()) throw InvalidArgument("ensemble_vote: no votes");
  std::array<int, kNumClasses> tally{};
  for (const int v : votes) {
    if (v < 0 || v >= kNumClasses) throw InvalidArgument("ensemble_vote: vote " + std::to_string(v) + " out of range");
    ++tally[static_cast<std::size_t>(v)];
  }
  int best = kNumClasses - 1;
  for (int c = kNumClasses - 1; c >= 0; --c) {
    if (tally[static_cast<std::size_t>(c)] > tally[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

EnsemblePrediction ensemble_predict(std::span<const Model> models, const Tensor& stack) {
  if (models.empty()) throw InvalidArgument("ensemble_predict: no models");
  EnsemblePrediction out;
  std::vector<int> votes;
  for (const Model& m : models) {
    Tensor batch = stack;
    Shape shape{1};
    shape.insert(shape.end(), stack.shape().begin(), stack.shape().end());
    batch.reshape(shape);
    const Tensor scores = nn::forward(m.spec, m.params, batch, nn::Mode::eval);
    if (scores.dim(1) != static_cast<std::size_t>(kNumClasses)) {
      throw InvalidArgument("ensemble_predict: model " + m.name + " does not output three classes");
    }
    const Tensor p = nn::softmax(scores);
    for (std::size_t c = 0; c < kNumClasses; ++c) out.confidence[c] += p(0, c);
    const int v = argmax_row(scores, 0);
    votes.push_back(v);
    ++out.votes[static_cast<std::size_t>(v)];
  }
  for (double& c : out.confidence) c /= static_cast<double>(models.size());
  out.predicted = ensemble_vote(votes);
  return out;
}

// ---------------------------------------------------------------------------

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || truth >= kNumClasses || predicted < 0 || predicted >= kNumClasses) {
    throw InvalidArgument("confusion matrix: class out of range");
  }
  ++counts_[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
}

std::size_t ConfusionMatrix::at(int truth, int predicted) const {
  return counts_.at(static_cast<std::size_t>(truth)).at(static_cast<std::size_t>(predicted));
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts_) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return t;
}

std::size_t ConfusionMatrix::row_sum(int truth) const {
  const auto& row = counts_.at(static_cast<std::size_t>(truth));
  return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::optional<double> ConfusionMatrix::class_accuracy(int truth) const {
  const std::size_t n = row_sum(truth);
  if (n == 0) return std::nullopt;
  return static_cast<double>(at(truth, truth)) / static_cast<double>(n);
}

double ConfusionMatrix::overall_accuracy() const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  std::size_t diag = 0;
  for (int c = 0; c < kNumClasses; ++c) diag += at(c, c);
  return static_cast<double>(diag) / static_cast<double>(n);
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : counts_) rows.push_back(row);
  return rows;
}

nlohmann::json to_json(const FlaggedEntry& f) {
  return {{"id", f.id},       {"lat", f.lat},
          {"lon", f.lon},     {"path", f.path},
          {"label", f.label}, {"predicted", f.predicted},
          {"confidence", f.confidence}, {"votes", f.votes}};
}

FlaggedEntry flagged_from_json(const nlohmann::json& j) {
  try {
    FlaggedEntry f;
    f.id = j.at("id").get<std::string>();
    f.lat = j.at("lat").get<double>();
    f.lon = j.at("lon").get<double>();
    f.path = j.value("path", std::string());
    f.label = j.value("label", 0);
    f.predicted = j.value("predicted", 2);
    f.confidence = j.at("confidence").get<std::array<double, kNumClasses>>();
    f.votes = j.value("votes", std::array<int, kNumClasses>{});
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad flagged entry: ") + e.what());
  }
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto acc = confusion.class_accuracy(c);
    per_class.push_back(acc ? nlohmann::json(*acc) : nlohmann::json(nullptr));
  }
  nlohmann::json flagged_json = nlohmann::json::array();
  for (const FlaggedEntry& f : flagged) flagged_json.push_back(vegscan::to_json(f));
  return {{"confusion", confusion.to_json()},
          {"per_class_accuracy", per_class},
          {"overall", confusion.overall_accuracy()},
          {"total", confusion.total()},
          {"models", models},
          {"flagged", flagged_json}};
}

EvaluationReport evaluate(std::span<const Model> models, const Manifest& records, const FeatureSource& features) {
  if (records.empty()) throw InvalidArgument("evaluate: no records to evaluate");
  if (models.empty()) throw InvalidArgument("evaluate: no models");
  EvaluationReport report;
  for (const Model& m : models) report.models.push_back(m.name);
  for (const SampleRecord& rec : records) {
    const EnsemblePrediction p = ensemble_predict(models, features.load(rec));
    report.confusion.add(rec.label, p.predicted);
    if (p.predicted == 2) {
      FlaggedEntry f;
      f.id = rec.id;
      f.lat = rec.lat;
      f.lon = rec.lon;
      f.path = rec.path;
      f.label = rec.label;
      f.predicted = p.predicted;
      f.confidence = p.confidence;
      f.votes = p.votes;
      report.flagged.push_back(std::move(f));
    }
  }
  return report;
}

}  // namespace vegscan
