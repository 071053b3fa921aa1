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

#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vegscan/checkpoint.hpp"
#include "vegscan/featurestack.hpp"
#include "vegscan/geodata.hpp"
#include "vegscan/image_io.hpp"
#include "vegscan/manifest.hpp"
#include "vegscan/nn.hpp"
#include "vegscan/trainer.hpp"
#include "vegscan/triage_server.hpp"

namespace vegscan::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Missing or inconsistent arguments discovered after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string preset = "smallnet";
  std::string out;
  std::size_t jobs = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* preset_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  json section = json::object();  // config file section for the subcommand
  json root = json::object();

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    seed_opt = app->add_option("--seed", seed, "Random seed");
    preset_opt = app->add_option("--preset", preset, "Hyperparameter preset")
                     ->check(CLI::IsMember(TrainConfig::preset_names()));
    out_opt = app->add_option("--out", out, "Output directory");
    jobs_opt = app->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  }

  void load(const std::string& name) {
    if (config.empty()) return;
    std::ifstream in(config);
    try {
      root = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(config + ": " + e.what());
    }
    if (!root.is_object()) throw UsageError(config + ": expected a JSON object");
    if (root.contains(name)) section = root.at(name);
    if (!section.is_object()) throw UsageError(config + ": section '" + name + "' must be an object");
    if (!seed_opt->count()) seed = lookup<std::uint64_t>("seed").value_or(seed);
    if (!preset_opt->count()) preset = lookup<std::string>("preset").value_or(preset);
    if (!out_opt->count()) out = lookup<std::string>("out").value_or(out);
    if (!jobs_opt->count()) jobs = lookup<std::size_t>("jobs").value_or(jobs);
  }

  /// Section value, then top-level value.
  template <typename T>
  std::optional<T> lookup(const char* key) const {
    try {
      if (section.contains(key)) return section.at(key).get<T>();
      if (root.contains(key)) return root.at(key).get<T>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("config key '") + key + "': " + e.what());
    }
    return std::nullopt;
  }

  /// Flag value if given, else config, else fallback.
  template <typename T>
  T pick(const CLI::Option* opt, const T& flag_value, const char* key, const T& fallback) const {
    if (opt && opt->count()) return flag_value;
    return lookup<T>(key).value_or(fallback);
  }

  std::string require(const CLI::Option* opt, const std::string& flag_value, const char* key,
                      const std::string& flag_name) const {
    const std::string v = pick<std::string>(opt, flag_value, key, "");
    if (v.empty()) throw UsageError(flag_name + " is required (or set '" + key + "' in the config file)");
    return v;
  }

  std::size_t workers() const {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw RuntimeError(what + " not found: " + p.string());
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const std::string text = j.dump(2) + "\n";
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Split parse_split_arg(const std::string& s) {
  try {
    return parse_split(s);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

fs::path resolve_checkpoint(const EpochRecord& r, const fs::path& metrics) {
  fs::path p = r.checkpoint;
  if (p.empty()) throw RuntimeError("epoch " + std::to_string(r.epoch) + " has no checkpoint");
  if (p.is_relative() && metrics.has_parent_path()) p = metrics.parent_path() / p;
  return p;
}

Model load_model(const fs::path& path) {
  Model m;
  m.spec = nn::NetworkSpec::small_net();
  require_file(path, "checkpoint");
  m.params = read_checkpoint(path, m.spec).params;
  m.name = path.filename().string();
  return m;
}

// ---------------------------------------------------------------------------

struct FetchCmd {
  Common c;
  std::string streets, provider = "fixture", fixtures, base_url, api_key_env = "VEGSCAN_API_KEY", heading = "along_street";
  double fixed_heading = 0.0;
  CLI::Option *streets_o, *provider_o, *fixtures_o, *base_o, *key_o, *heading_o, *fixed_o;

  void attach(CLI::App* app) {
    c.attach(app);
    streets_o = app->add_option("--streets", streets, "JSON array of streets");
    provider_o = app->add_option("--provider", provider, "fixture or http")->check(CLI::IsMember({"fixture", "http"}));
    fixtures_o = app->add_option("--fixtures", fixtures, "Directory of canned images for the fixture provider");
    base_o = app->add_option("--base-url", base_url, "Imagery endpoint for the http provider");
    key_o = app->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
    heading_o = app->add_option("--heading-mode", heading, "along_street or fixed")
                    ->check(CLI::IsMember({"along_street", "fixed"}));
    fixed_o = app->add_option("--fixed-heading", fixed_heading, "Heading in degrees for --heading-mode fixed");
  }

  int run(std::ostream& out, std::ostream& err) {
    c.load("fetch");
    const fs::path streets_path = c.require(streets_o, streets, "streets", "--streets");
    const std::string prov = c.pick(provider_o, provider, "provider", provider);
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", "data");
    require_file(streets_path, "street list");

    std::unique_ptr<geo::ImageProvider> p;
    if (prov == "fixture") {
      p = std::make_unique<geo::FixtureProvider>(c.require(fixtures_o, fixtures, "fixtures", "--fixtures"));
    } else if (prov == "http") {
      geo::HttpProviderConfig hc;
      hc.base_url = c.require(base_o, base_url, "base_url", "--base-url");
      hc.api_key_env = c.pick(key_o, api_key_env, "api_key_env", api_key_env);
      p = std::make_unique<geo::HttpProvider>(hc);
    } else {
      throw UsageError("unknown provider '" + prov + "'");
    }
    geo::InterpolationOptions opts;
    const std::string mode = c.pick(heading_o, heading, "heading_mode", heading);
    if (mode != "along_street" && mode != "fixed") throw UsageError("heading_mode must be along_street or fixed");
    opts.heading_mode = mode == "fixed" ? geo::HeadingMode::fixed : geo::HeadingMode::along_street;
    opts.fixed_heading = c.pick(fixed_o, fixed_heading, "fixed_heading", fixed_heading);

    std::vector<geo::ImageRequest> requests;
    for (const auto& s : geo::read_streets(streets_path)) {
      const auto pts = geo::interpolate_street(s, opts);
      requests.insert(requests.end(), pts.begin(), pts.end());
    }
    geo::FetchOptions fo;
    fo.max_concurrency = c.jobs_opt->count() || c.jobs > 0 ? c.workers() : 4;
    const geo::FetchResult result = geo::fetch_images(*p, requests, out_dir / "images", fo);
    write_manifest(out_dir / "manifest.jsonl", result.records);
    write_json(out_dir / "fetch_report.json", result.failure_report());
    out << "fetched " << result.records.size() << " image(s), " << result.failures.size() << " failure(s); manifest "
        << (out_dir / "manifest.jsonl").string() << "\n";
    for (const auto& f : result.failures) err << "  failed " << f.request_id << ": " << f.message << "\n";
    return kExitOk;
  }
};

struct FeaturizeCmd {
  Common c;
  std::string manifest;
  bool no_flip = false;
  CLI::Option *manifest_o, *noflip_o;

  void attach(CLI::App* app) {
    c.attach(app);
    manifest_o = app->add_option("--manifest", manifest, "Input manifest (JSON Lines)");
    noflip_o = app->add_flag("--no-flip", no_flip, "Skip mirrored copies");
  }

  int run(std::ostream& out, std::ostream& err) {
    c.load("featurize");
    const fs::path in = c.require(manifest_o, manifest, "manifest", "--manifest");
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", "features");
    require_file(in, "manifest");
    Manifest m = read_manifest(in);
    if (m.empty()) throw RuntimeError("manifest " + in.string() + " has no records");
    const bool needs_split = std::any_of(m.begin(), m.end(), [](const SampleRecord& r) {
      return !r.flipped && r.split == Split::unassigned;
    });
    if (needs_split) m = split_dataset(m, SplitRatios{}, c.seed);
    if (!c.pick(noflip_o, no_flip, "no_flip", false)) m = add_flipped_copies(m);
    fs::create_directories(out_dir);
    write_manifest(out_dir / "manifest.jsonl", m);

    FeatureConfig fc;
    const bool have_train = std::any_of(m.begin(), m.end(), [](const SampleRecord& r) { return r.split == Split::train; });
    const ChannelStats stats = have_train ? compute_channel_stats(m, fc, Split::train) : ChannelStats::identity();
    write_stats(out_dir / "stats.json", stats);

    std::atomic<std::size_t> done{0};
    std::mutex log_mu;
    parallel_for(m.size(), c.workers(), [&](std::size_t i) {
      const FeatureStack s = featurize_record(m[i], fc, stats);
      write_feature_cache(out_dir, m[i].id, s);
      const std::size_t n = ++done;
      if (n % 100 == 0) {
        std::lock_guard lock(log_mu);
        err << "  featurized " << n << "/" << m.size() << "\n";
      }
    });
    out << "featurized " << m.size() << " record(s) into " << out_dir.string() << " (stats " << stats.id() << ")\n";
    return kExitOk;
  }
};

struct TrainCmd {
  Common c;
  std::string manifest, features;
  std::size_t epochs = 0;
  bool full_rate = false;
  CLI::Option *manifest_o, *features_o, *epochs_o, *full_o;

  void attach(CLI::App* app) {
    c.attach(app);
    manifest_o = app->add_option("--manifest", manifest, "Split manifest (default: <features>/manifest.jsonl)");
    features_o = app->add_option("--features", features, "Feature cache directory");
    epochs_o = app->add_option("--epochs", epochs, "Override the number of epochs");
    full_o = app->add_flag("--full-rate", full_rate, "Train every layer at the full learning rate");
  }

  int run(std::ostream& out, std::ostream& err) {
    c.load("train");
    const fs::path feat = c.require(features_o, features, "features", "--features");
    const fs::path man = c.pick<std::string>(manifest_o, manifest, "manifest", (feat / "manifest.jsonl").string());
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", "runs/train");
    require_file(man, "manifest");
    require_file(feat, "feature directory");

    TrainConfig cfg = TrainConfig::from_preset(c.preset);
    if (c.section.is_object()) {
      json overlay = c.section;
      overlay.erase("preset");
      cfg.merge_json(overlay);
    }
    cfg.seed = c.seed;
    if (epochs_o->count()) cfg.epochs = epochs;
    if (full_o->count()) cfg.full_rate = full_rate;
    cfg.checkpoint_dir = out_dir;
    cfg.metrics_path = out_dir / "metrics.jsonl";
    fs::create_directories(out_dir);
    write_json(out_dir / "train_config.json", cfg.to_json());

    const Manifest m = read_manifest(man);
    const CachedFeatures source(feat);
    const auto spec = nn::NetworkSpec::small_net();
    const TrainResult r = train(cfg, spec, m, source, nullptr, [&](const EpochRecord& e) {
      err << "epoch " << e.epoch << "/" << cfg.total_epochs() << "  loss " << e.train_loss << "  train "
          << e.train_accuracy << "  dev " << e.dev_accuracy << "  lr " << e.learning_rate << "\n";
    });
    out << "trained " << r.epochs.size() << " epoch(s); best dev epoch " << r.best_epoch << "; metrics "
        << cfg.metrics_path.string() << "\n";
    return kExitOk;
  }
};

struct EvaluateCmd {
  Common c;
  std::string manifest, features, metrics, split = "test";
  std::vector<std::string> checkpoints;
  CLI::Option *manifest_o, *features_o, *metrics_o, *split_o, *ckpt_o;

  void attach(CLI::App* app) {
    c.attach(app);
    manifest_o = app->add_option("--manifest", manifest, "Split manifest (default: <features>/manifest.jsonl)");
    features_o = app->add_option("--features", features, "Feature cache directory");
    ckpt_o = app->add_option("--checkpoint", checkpoints, "Checkpoint(s) to evaluate as an ensemble");
    metrics_o = app->add_option("--metrics", metrics, "Metrics log; evaluates the best dev epoch");
    split_o = app->add_option("--split", split, "train, dev or test");
  }

  int run(std::ostream& out, std::ostream&) {
    c.load("evaluate");
    const fs::path feat = c.require(features_o, features, "features", "--features");
    const fs::path man = c.pick<std::string>(manifest_o, manifest, "manifest", (feat / "manifest.jsonl").string());
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", "runs/eval");
    const Split sp = parse_split_arg(c.pick(split_o, split, "split", split));
    std::vector<std::string> ckpts = ckpt_o->count() ? checkpoints
                                                     : c.lookup<std::vector<std::string>>("checkpoints").value_or(
                                                           std::vector<std::string>{});
    const std::string met = c.pick(metrics_o, metrics, "metrics", std::string());
    if (ckpts.empty() && met.empty()) throw UsageError("evaluate needs --checkpoint or --metrics");
    require_file(man, "manifest");
    if (ckpts.empty()) {
      require_file(met, "metrics log");
      const auto records = read_metrics(met);
      if (records.empty()) throw RuntimeError("metrics log " + met + " is empty");
      const auto best = select_top_k(records, 1, 1).selected.front();
      ckpts.push_back(resolve_checkpoint(best, met).string());
    }
    std::vector<Model> models;
    for (const auto& p : ckpts) models.push_back(load_model(p));
    const Manifest records = select_split(read_manifest(man), sp);
    if (records.empty()) throw RuntimeError("split '" + std::string(to_string(sp)) + "' is empty in " + man.string());
    const EvaluationReport report = evaluate(models, records, CachedFeatures(feat));
    json j = report.to_json();
    j["split"] = to_string(sp);
    write_json(out_dir / "report.json", j);
    out << "evaluated " << report.confusion.total() << " record(s); accuracy " << report.confusion.overall_accuracy()
        << "; report " << (out_dir / "report.json").string() << "\n";
    return kExitOk;
  }
};

struct EnsembleCmd {
  Common c;
  std::string manifest, features, metrics, split = "test";
  std::size_t k = 10;
  std::uint32_t min_gap = 5;
  CLI::Option *manifest_o, *features_o, *metrics_o, *split_o, *k_o, *gap_o;

  void attach(CLI::App* app) {
    c.attach(app);
    metrics_o = app->add_option("--metrics", metrics, "Metrics log written by train");
    manifest_o = app->add_option("--manifest", manifest, "Split manifest (default: <features>/manifest.jsonl)");
    features_o = app->add_option("--features", features, "Feature cache directory");
    split_o = app->add_option("--split", split, "train, dev or test");
    k_o = app->add_option("-k,--top-k", k, "Number of checkpoints")->check(CLI::PositiveNumber);
    gap_o = app->add_option("--min-gap", min_gap, "Minimum epoch distance between members");
  }

  int run(std::ostream& out, std::ostream& err) {
    c.load("ensemble");
    const fs::path met = c.require(metrics_o, metrics, "metrics", "--metrics");
    const fs::path feat = c.require(features_o, features, "features", "--features");
    const fs::path man = c.pick<std::string>(manifest_o, manifest, "manifest", (feat / "manifest.jsonl").string());
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", "runs/ensemble");
    const Split sp = parse_split_arg(c.pick(split_o, split, "split", split));
    require_file(met, "metrics log");
    require_file(man, "manifest");
    const auto records = read_metrics(met);
    const TopKSelection sel = select_top_k(records, c.pick(k_o, k, "k", k), c.pick(gap_o, min_gap, "min_gap", min_gap));
    if (!sel.warning.empty()) err << "warning: " << sel.warning << "\n";
    std::vector<Model> models;
    json members = json::array();
    for (const auto& r : sel.selected) {
      models.push_back(load_model(resolve_checkpoint(r, met)));
      members.push_back(to_json(r));
    }
    const Manifest rows = select_split(read_manifest(man), sp);
    if (rows.empty()) throw RuntimeError("split '" + std::string(to_string(sp)) + "' is empty in " + man.string());
    const EvaluationReport report = evaluate(models, rows, CachedFeatures(feat));
    json j = report.to_json();
    j["split"] = to_string(sp);
    j["members"] = members;
    if (!sel.warning.empty()) j["warning"] = sel.warning;
    write_json(out_dir / "report.json", j);
    out << "ensemble of " << models.size() << " checkpoint(s) on " << rows.size() << " record(s); accuracy "
        << report.confusion.overall_accuracy() << "; report " << (out_dir / "report.json").string() << "\n";
    return kExitOk;
  }
};

struct SalienceCmd {
  Common c;
  std::string checkpoint, image, stats;
  int cls = 2;
  CLI::Option *ckpt_o, *image_o, *stats_o, *cls_o;

  void attach(CLI::App* app) {
    c.attach(app);
    ckpt_o = app->add_option("--checkpoint", checkpoint, "Trained checkpoint");
    image_o = app->add_option("--image", image, "PNG or JPEG image");
    stats_o = app->add_option("--stats", stats, "Channel statistics (stats.json from featurize)");
    cls_o = app->add_option("--class", cls, "Class whose score is explained")->check(CLI::Range(0, 2));
  }

  int run(std::ostream& out, std::ostream&) {
    c.load("salience");
    const fs::path ck = c.require(ckpt_o, checkpoint, "checkpoint", "--checkpoint");
    const fs::path img_path = c.require(image_o, image, "image", "--image");
    const std::string st = c.pick(stats_o, stats, "stats", std::string());
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", ".");
    const int k = c.pick(cls_o, cls, "class", cls);
    if (k < 0 || k > 2) throw UsageError("class must be 0, 1 or 2");
    require_file(img_path, "image");
    const Model m = load_model(ck);
    std::optional<ChannelStats> cs;
    if (!st.empty()) {
      require_file(st, "stats file");
      cs = read_stats(st);
    }
    const FeatureStack s = featurize(read_image(img_path), FeatureConfig{}, cs);
    const Tensor map = nn::salience_map(m.spec, m.params, s.tensor, k);
    fs::create_directories(out_dir);
    const fs::path target = out_dir / (img_path.stem().string() + "_salience.png");
    write_unit_png(target, map);
    out << "wrote " << target.string() << "\n";
    return kExitOk;
  }
};

struct DumpFeaturesCmd {
  Common c;
  std::string image;
  CLI::Option* image_o;

  void attach(CLI::App* app) {
    c.attach(app);
    image_o = app->add_option("--image", image, "PNG or JPEG image");
  }

  int run(std::ostream& out, std::ostream&) {
    c.load("dump-features");
    const fs::path img_path = c.require(image_o, image, "image", "--image");
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", ".");
    require_file(img_path, "image");
    const FeatureConfig fc;
    const GrayImage gray = to_grayscale(resize_bilinear(read_image(img_path), fc.size, fc.size));
    fs::create_directories(out_dir);
    const std::string stem = img_path.stem().string();
    write_unit_png(out_dir / (stem + "_hog.png"), hog_channel(gray, fc.hog));
    write_unit_png(out_dir / (stem + "_hough.png"), hough_channel(gray, fc.canny, fc.hough));
    const EdgeMap edges = canny(gray, fc.canny);
    Tensor e({edges.height, edges.width});
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = edges.values[i] ? 1.0f : 0.0f;
    write_unit_png(out_dir / (stem + "_edges.png"), e);
    out << "wrote " << stem << "_{hog,hough,edges}.png to " << out_dir.string() << "\n";
    return kExitOk;
  }
};

std::atomic<triage::TriageServer*> g_server{nullptr};

extern "C" void handle_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

struct ServeCmd {
  Common c;
  std::string report, manifest, log, host = "127.0.0.1", checkpoint, stats, static_dir;
  int port = 8080;
  CLI::Option *report_o, *manifest_o, *log_o, *host_o, *port_o, *ckpt_o, *stats_o, *static_o;

  void attach(CLI::App* app) {
    c.attach(app);
    report_o = app->add_option("--report", report, "Evaluation report JSON");
    manifest_o = app->add_option("--manifest", manifest, "Manifest used for export and image lookup");
    log_o = app->add_option("--log", log, "Review log (default: <out>/reviews.jsonl)");
    host_o = app->add_option("--host", host, "Bind address");
    port_o = app->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    ckpt_o = app->add_option("--checkpoint", checkpoint, "Checkpoint for salience overlays");
    stats_o = app->add_option("--stats", stats, "Channel statistics for salience overlays");
    static_o = app->add_option("--static-dir", static_dir, "UI bundle served at /");
  }

  int run(std::ostream& out, std::ostream&) {
    c.load("serve");
    triage::ServerConfig sc;
    sc.merge_json(c.section);
    if (report_o->count()) sc.report_path = report;
    if (manifest_o->count()) sc.manifest_path = manifest;
    if (log_o->count()) sc.log_path = log;
    if (host_o->count()) sc.host = host;
    if (port_o->count()) sc.port = port;
    if (ckpt_o->count()) sc.checkpoint = checkpoint;
    if (stats_o->count()) sc.stats_path = stats;
    if (static_o->count()) sc.static_dir = static_dir;
    const fs::path out_dir = c.pick<std::string>(c.out_opt, c.out, "out", "triage");
    if (sc.report_path.empty()) throw UsageError("--report is required (or set 'report' in the config file)");
    require_file(sc.report_path, "evaluation report");
    if (sc.log_path.empty()) sc.log_path = out_dir / "reviews.jsonl";
    if (sc.export_dir.empty()) sc.export_dir = out_dir;
    triage::TriageServer server(sc);
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    out << "serving on http://" << sc.host << ":" << sc.port << " (Ctrl-C to stop)\n" << std::flush;
    server.run();
    g_server = nullptr;
    return kExitOk;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"vegscan: street-level utility and vegetation risk classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vegscan 0.1.0");

  FetchCmd fetch;
  FeaturizeCmd featurize_cmd;
  TrainCmd train_cmd;
  EvaluateCmd evaluate_cmd;
  EnsembleCmd ensemble_cmd;
  SalienceCmd salience_cmd;
  DumpFeaturesCmd dump_cmd;
  ServeCmd serve_cmd;

  auto* s_fetch = app.add_subcommand("fetch", "Interpolate streets and download images into a manifest");
  auto* s_feat = app.add_subcommand("featurize", "Split, augment and cache 5-channel feature stacks");
  auto* s_train = app.add_subcommand("train", "Train the classifier and write per-epoch checkpoints");
  auto* s_eval = app.add_subcommand("evaluate", "Evaluate checkpoints on a split and write a report");
  auto* s_ens = app.add_subcommand("ensemble", "Select top-k epochs and evaluate their vote");
  auto* s_sal = app.add_subcommand("salience", "Write a salience heatmap PNG for one image");
  auto* s_dump = app.add_subcommand("dump-features", "Write the HOG and Hough channels of an image as PNGs");
  auto* s_serve = app.add_subcommand("serve", "Start the triage HTTP service");
  fetch.attach(s_fetch);
  featurize_cmd.attach(s_feat);
  train_cmd.attach(s_train);
  evaluate_cmd.attach(s_eval);
  ensemble_cmd.attach(s_ens);
  salience_cmd.attach(s_sal);
  dump_cmd.attach(s_dump);
  serve_cmd.attach(s_serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s_fetch->parsed()) return fetch.run(out, err);
    if (s_feat->parsed()) return featurize_cmd.run(out, err);
    if (s_train->parsed()) return train_cmd.run(out, err);
    if (s_eval->parsed()) return evaluate_cmd.run(out, err);
    if (s_ens->parsed()) return ensemble_cmd.run(out, err);
    if (s_sal->parsed()) return salience_cmd.run(out, err);
    if (s_dump->parsed()) return dump_cmd.run(out, err);
    if (s_serve->parsed()) return serve_cmd.run(out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(a.c_str());
  argv.push_back(nullptr);
  return run(static_cast<int>(args.size()), argv.data(), out, err);
}

}  // namespace vegscan::cli
