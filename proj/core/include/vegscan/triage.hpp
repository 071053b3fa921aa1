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

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vegscan/errors.hpp"
#include "vegscan/trainer.hpp"

namespace vegscan::triage {

enum class ReviewStatus { pending, confirmed, rejected, relabeled };
enum class VerdictKind { confirm, reject, relabel };

std::string_view to_string(ReviewStatus s) noexcept;
std::string_view to_string(VerdictKind v) noexcept;
ReviewStatus parse_status(std::string_view s);
VerdictKind parse_verdict(std::string_view s);

/// Review of an id that is not in the flagged set.
class UnknownSample : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct ReviewVerdict {
  std::string sample_id;
  VerdictKind verdict = VerdictKind::confirm;
  std::optional<int> new_label;  // relabel only
  std::string reviewer;
  std::string timestamp;  // ISO 8601; filled in by the store when empty

  void validate() const;
  /// Same decision by the same reviewer; the timestamp is ignored.
  bool same_decision(const ReviewVerdict& other) const;
  nlohmann::json to_json() const;
  /// Throws InvalidArgument on a malformed verdict.
  static ReviewVerdict from_json(const nlohmann::json& j);
};

struct FlaggedItem {
  FlaggedEntry entry;
  ReviewStatus status = ReviewStatus::pending;
  std::optional<int> new_label;

  nlohmann::json to_json() const;
};

struct Page {
  std::vector<FlaggedItem> items;
  std::size_t total = 0;
  std::size_t limit = 0;
  std::size_t offset = 0;

  nlohmann::json to_json() const;
};

/// Latest verdict per sample id, applied in log order.
std::map<std::string, ReviewVerdict> latest_verdicts(const std::vector<ReviewVerdict>& log);

std::vector<ReviewVerdict> read_review_log(const std::filesystem::path& path);

/// Flagged queue plus the append-only review log. Reads and writes are
/// serialized by an internal mutex.
class TriageStore {
 public:
  /// Items come from the report's flagged list; an existing log is replayed.
  TriageStore(std::vector<FlaggedEntry> flagged, std::filesystem::path log_path);

  /// Ordered by descending class-2 confidence, then id.
  Page list_flagged(std::size_t limit, std::size_t offset, std::optional<ReviewStatus> status = std::nullopt) const;
  std::optional<FlaggedItem> find(std::string_view id) const;
  /// Appends the verdict unless it repeats the current one; returns the item.
  FlaggedItem record_review(ReviewVerdict verdict);
  std::map<std::string, ReviewStatus> statuses() const;
  const std::filesystem::path& log_path() const noexcept { return log_path_; }

 private:
  void apply(const ReviewVerdict& v);

  mutable std::mutex mu_;
  std::vector<FlaggedItem> items_;  // sorted
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, ReviewVerdict> latest_;
  std::filesystem::path log_path_;
};

struct ExportResult {
  std::vector<std::string> lines;        // output manifest, one record per line
  nlohmann::json attention = nlohmann::json::array();  // entries needing a human decision
  std::size_t changed = 0;
};

/// Apply the latest verdicts to the raw manifest lines. Relabels change the
/// record and its mirror; everything else passes through byte-for-byte.
ExportResult export_relabeled_manifest(const std::vector<std::string>& manifest_lines,
                                       const std::vector<ReviewVerdict>& log);

void write_export(const std::filesystem::path& path, const ExportResult& result);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace vegscan::triage
