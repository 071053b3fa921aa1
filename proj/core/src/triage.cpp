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

#include "vegscan/triage.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include "vegscan/image_io.hpp"
#include "vegscan/manifest.hpp"

namespace vegscan::triage {

std::string_view to_string(ReviewStatus s) noexcept {
  switch (s) {
    case ReviewStatus::pending:
      return "pending";
    case ReviewStatus::confirmed:
      return "confirmed";
    case ReviewStatus::rejected:
      return "rejected";
    case ReviewStatus::relabeled:
      return "relabeled";
  }
  return "pending";
}

std::string_view to_string(VerdictKind v) noexcept {
  switch (v) {
    case VerdictKind::confirm:
      return "confirm";
    case VerdictKind::reject:
      return "reject";
    case VerdictKind::relabel:
      return "relabel";
  }
  return "confirm";
}

ReviewStatus parse_status(std::string_view s) {
  for (const auto v : {ReviewStatus::pending, ReviewStatus::confirmed, ReviewStatus::rejected, ReviewStatus::relabeled}) {
    if (to_string(v) == s) return v;
  }
  throw InvalidArgument("unknown review status '" + std::string(s) + "'");
}

VerdictKind parse_verdict(std::string_view s) {
  for (const auto v : {VerdictKind::confirm, VerdictKind::reject, VerdictKind::relabel}) {
    if (to_string(v) == s) return v;
  }
  throw InvalidArgument("unknown verdict '" + std::string(s) + "' (expected confirm, reject or relabel)");
}

void ReviewVerdict::validate() const {
  if (sample_id.empty()) throw InvalidArgument("verdict needs a sample_id");
  if (verdict == VerdictKind::relabel) {
    if (!new_label) throw InvalidArgument("relabel verdict needs new_label");
    if (*new_label < 0 || *new_label >= kNumClasses) throw InvalidArgument("new_label must be 0, 1 or 2");
  } else if (new_label) {
    throw InvalidArgument("new_label is only valid with a relabel verdict");
  }
}

bool ReviewVerdict::same_decision(const ReviewVerdict& o) const {
  return sample_id == o.sample_id && verdict == o.verdict && new_label == o.new_label && reviewer == o.reviewer;
}

nlohmann::json ReviewVerdict::to_json() const {
  nlohmann::json j = {{"sample_id", sample_id},
                      {"verdict", to_string(verdict)},
                      {"reviewer", reviewer},
                      {"timestamp", timestamp}};
  if (new_label) j["new_label"] = *new_label;
  return j;
}

ReviewVerdict ReviewVerdict::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("verdict must be a JSON object");
  ReviewVerdict v;
  try {
    v.sample_id = j.at("sample_id").get<std::string>();
    v.verdict = parse_verdict(j.at("verdict").get<std::string>());
    if (j.contains("new_label") && !j.at("new_label").is_null()) {
      if (!j.at("new_label").is_number_integer()) throw InvalidArgument("new_label must be an integer");
      v.new_label = j.at("new_label").get<int>();
    }
    v.reviewer = j.value("reviewer", std::string());
    v.timestamp = j.value("timestamp", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed verdict: ") + e.what());
  }
  v.validate();
  return v;
}

nlohmann::json FlaggedItem::to_json() const {
  nlohmann::json j = vegscan::to_json(entry);
  j["image_url"] = "/api/samples/" + entry.id + "/image";
  j["status"] = to_string(status);
  j["new_label"] = new_label ? nlohmann::json(*new_label) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json Page::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& it : items) arr.push_back(it.to_json());
  return {{"items", arr}, {"total", total}, {"limit", limit}, {"offset", offset}};
}

std::map<std::string, ReviewVerdict> latest_verdicts(const std::vector<ReviewVerdict>& log) {
  std::map<std::string, ReviewVerdict> out;
  for (const auto& v : log) out.insert_or_assign(v.sample_id, v);
  return out;
}

std::vector<ReviewVerdict> read_review_log(const std::filesystem::path& path) {
  std::vector<ReviewVerdict> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot read review log " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ReviewVerdict::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

TriageStore::TriageStore(std::vector<FlaggedEntry> flagged, std::filesystem::path log_path)
    : log_path_(std::move(log_path)) {
  std::sort(flagged.begin(), flagged.end(), [](const FlaggedEntry& a, const FlaggedEntry& b) {
    if (a.confidence[2] != b.confidence[2]) return a.confidence[2] > b.confidence[2];
    return a.id < b.id;
  });
  for (auto& e : flagged) {
    if (index_.count(e.id)) throw InvalidArgument("duplicate flagged id " + e.id);
    index_.emplace(e.id, items_.size());
    items_.push_back(FlaggedItem{std::move(e), ReviewStatus::pending, std::nullopt});
  }
  for (const ReviewVerdict& v : read_review_log(log_path_)) {
    if (index_.count(v.sample_id)) apply(v);
  }
}

void TriageStore::apply(const ReviewVerdict& v) {
  FlaggedItem& item = items_[index_.find(v.sample_id)->second];
  switch (v.verdict) {
    case VerdictKind::confirm:
      item.status = ReviewStatus::confirmed;
      item.new_label.reset();
      break;
    case VerdictKind::reject:
      item.status = ReviewStatus::rejected;
      item.new_label.reset();
      break;
    case VerdictKind::relabel:
      item.status = ReviewStatus::relabeled;
      item.new_label = v.new_label;
      break;
  }
  latest_.insert_or_assign(v.sample_id, v);
}

Page TriageStore::list_flagged(std::size_t limit, std::size_t offset, std::optional<ReviewStatus> status) const {
  std::lock_guard lock(mu_);
  Page page;
  page.limit = limit;
  page.offset = offset;
  for (const auto& item : items_) {
    if (status && item.status != *status) continue;
    if (page.total >= offset && page.items.size() < limit) page.items.push_back(item);
    ++page.total;
  }
  return page;
}

std::optional<FlaggedItem> TriageStore::find(std::string_view id) const {
  std::lock_guard lock(mu_);
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return items_[it->second];
}

FlaggedItem TriageStore::record_review(ReviewVerdict verdict) {
  verdict.validate();
  std::lock_guard lock(mu_);
  const auto it = index_.find(verdict.sample_id);
  if (it == index_.end()) throw UnknownSample("sample " + verdict.sample_id + " is not in the flagged set");
  const auto prev = latest_.find(verdict.sample_id);
  if (prev != latest_.end() && prev->second.same_decision(verdict)) return items_[it->second];
  if (verdict.timestamp.empty()) verdict.timestamp = utc_timestamp();
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  std::ofstream out(log_path_, std::ios::app);
  out << verdict.to_json().dump() << '\n';
  out.flush();
  if (!out) throw RuntimeError("cannot append to review log " + log_path_.string());
  apply(verdict);
  return items_[it->second];
}

std::map<std::string, ReviewStatus> TriageStore::statuses() const {
  std::lock_guard lock(mu_);
  std::map<std::string, ReviewStatus> out;
  for (const auto& item : items_) out.emplace(item.entry.id, item.status);
  return out;
}

ExportResult export_relabeled_manifest(const std::vector<std::string>& manifest_lines,
                                       const std::vector<ReviewVerdict>& log) {
  const auto latest = latest_verdicts(log);
  ExportResult result;
  std::map<std::string, bool> seen;
  for (std::size_t i = 0; i < manifest_lines.size(); ++i) {
    const std::string& line = manifest_lines[i];
    SampleRecord rec;
    try {
      rec = record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw InvalidArgument("manifest record " + std::to_string(i + 1) + ": " + e.what());
    }
    auto own = latest.find(rec.id);
    if (own != latest.end()) seen[rec.id] = true;
    const ReviewVerdict* v = own != latest.end() ? &own->second : nullptr;
    if (!v && rec.flipped) {
      const auto orig = latest.find(original_id(rec));
      if (orig != latest.end() && orig->second.verdict == VerdictKind::relabel) v = &orig->second;
    }
    if (!v) {
      result.lines.push_back(line);
      continue;
    }
    switch (v->verdict) {
      case VerdictKind::relabel:
        if (rec.label != *v->new_label) {
          rec.label = *v->new_label;
          result.lines.push_back(manifest_line(rec));
          ++result.changed;
        } else {
          result.lines.push_back(line);
        }
        break;
      case VerdictKind::confirm:
        result.lines.push_back(line);
        if (rec.label != 2) {
          result.attention.push_back({{"id", rec.id},
                                      {"reason", "confirmed as class 2 but the manifest label is " +
                                                     std::to_string(rec.label)}});
        }
        break;
      case VerdictKind::reject:
        result.lines.push_back(line);
        result.attention.push_back(
            {{"id", rec.id},
             {"reason", rec.label == 2 ? "flag rejected on a record labeled 2; label needs a human decision"
                                       : "flag rejected on a record labeled " + std::to_string(rec.label) +
                                             "; nothing to change"}});
        break;
    }
  }
  for (const auto& [id, v] : latest) {
    if (!seen.count(id)) result.attention.push_back({{"id", id}, {"reason", "verdict for an id not in the manifest"}});
  }
  return result;
}

void write_export(const std::filesystem::path& path, const ExportResult& result) {
  std::string text;
  for (const auto& line : result.lines) {
    text += line;
    text += '\n';
  }
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace vegscan::triage
