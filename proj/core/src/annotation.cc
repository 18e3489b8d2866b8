#include "prodsearch/annotation.h"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace prodsearch {
namespace {

using nlohmann::ordered_json;

ordered_json clicks_json(const std::vector<ClickEvent>& clicks) {
  auto arr = ordered_json::array();
  for (const auto& c : clicks) {
    arr.push_back({{"url", c.url},
                   {"snippet", c.snippet},
                   {"dwell_seconds", c.dwell_seconds},
                   {"order", c.order}});
  }
  return arr;
}

ordered_json item_json(const AnnotationItem& item) {
  return {{"query_id", item.query_id},
          {"query", item.query},
          {"clicks", clicks_json(item.clicks)},
          {"topic", item.topic}};
}

Timestamp now() {
  using namespace std::chrono;
  return Timestamp{duration_cast<seconds>(system_clock::now().time_since_epoch()).count()};
}

}  // namespace

std::string_view to_string(ItemStatus status) {
  switch (status) {
    case ItemStatus::Pending: return "pending";
    case ItemStatus::PartiallyLabeled: return "partially_labeled";
    case ItemStatus::Complete: return "complete";
  }
  return "pending";
}

AnnotationItem item_from_record(const QueryRecord& record, int topic) {
  return AnnotationItem{record.query_id, record.query, record.clicks, topic};
}

std::vector<AnnotationItem> load_queue(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotation queue " + path);
  std::vector<AnnotationItem> items;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AnnotationItem item;
      item.query_id = j.at("query_id").get<std::string>();
      item.query = j.at("query").get<std::string>();
      item.topic = j.at("topic").get<int>();
      for (const auto& c : j.value("clicks", nlohmann::json::array())) {
        item.clicks.push_back({c.at("url").get<std::string>(), c.value("snippet", ""),
                               c.value("dwell_seconds", 0.0), c.value("order", 1)});
      }
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("annotation queue " + path + " line " + std::to_string(n) +
                               ": " + e.what());
    }
  }
  return items;
}

void save_queue(const std::string& path, std::span<const AnnotationItem> items) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write annotation queue " + path);
  for (const auto& item : items) out << item_json(item).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing annotation queue " + path);
}

std::string serialize_event(const LabelEvent& e) {
  ordered_json j{{"query_id", e.query_id},
                 {"annotator", e.annotator},
                 {"label", std::string(to_string(e.label))},
                 {"timestamp", format_timestamp(e.timestamp)}};
  return j.dump();
}

LabelEvent parse_event(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("malformed label event");
  }
  if (!j.is_object()) throw std::invalid_argument("malformed label event");
  try {
    LabelEvent e;
    e.query_id = j.at("query_id").get<std::string>();
    e.annotator = j.at("annotator").get<std::string>();
    const auto label = parse_annotation_label(j.at("label").get<std::string>());
    if (!label) throw std::invalid_argument("unknown label " + j.at("label").dump());
    e.label = *label;
    e.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    return e;
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("malformed label event");
  }
}

double fleiss_kappa(const std::vector<std::vector<int>>& table, int raters) {
  if (raters < 2) throw std::invalid_argument("fleiss kappa needs at least 2 raters");
  if (table.empty()) throw std::invalid_argument("fleiss kappa needs at least one item");
  const std::size_t cats = table.front().size();
  std::vector<double> col(cats, 0.0);
  double p_bar = 0;
  const double k = raters;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.size() != cats) {
      throw std::invalid_argument("row " + std::to_string(i) + " has the wrong category count");
    }
    long sum = 0, sq = 0;
    for (std::size_t j = 0; j < cats; ++j) {
      if (row[j] < 0) throw std::invalid_argument("row " + std::to_string(i) + " has a negative count");
      sum += row[j];
      sq += static_cast<long>(row[j]) * row[j];
      col[j] += row[j];
    }
    if (sum != raters) {
      throw std::invalid_argument("row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                                  ", expected " + std::to_string(raters));
    }
    p_bar += (static_cast<double>(sq) - k) / (k * (k - 1));
  }
  const double n = static_cast<double>(table.size());
  p_bar /= n;
  double p_e = 0;
  for (double c : col) {
    const double p = c / (n * k);
    p_e += p * p;
  }
  // All ratings in one category forces P = 1.
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

std::map<std::string, IntentLabel> consensus_labels(std::span<const LabelEvent> events) {
  std::map<std::string, std::map<std::string, AnnotationLabel>> live;
  for (const auto& e : events) live[e.query_id][e.annotator] = e.label;
  std::map<std::string, IntentLabel> out;
  for (const auto& [qid, by] : live) {
    std::map<IntentLabel, int> votes;
    int n = 0;
    for (const auto& [annotator, label] : by) {
      if (const auto intent = as_intent(label)) {
        ++votes[*intent];
        ++n;
      }
    }
    for (const auto& [intent, v] : votes) {
      if (2 * v > n) out[qid] = intent;
    }
  }
  return out;
}

AnnotationService::AnnotationService(std::vector<AnnotationItem> items,
                                     std::vector<std::string> annotators,
                                     std::string store_path, Clock clock)
    : items_(std::move(items)),
      annotators_(std::move(annotators)),
      store_path_(std::move(store_path)),
      clock_(clock ? std::move(clock) : Clock(now)) {
  if (annotators_.empty()) throw std::invalid_argument("no annotators registered");
  std::sort(annotators_.begin(), annotators_.end());
  if (std::adjacent_find(annotators_.begin(), annotators_.end()) != annotators_.end()) {
    throw std::invalid_argument("duplicate annotator id");
  }
  std::sort(items_.begin(), items_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.topic, a.query_id) < std::tie(b.topic, b.query_id);
  });
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].query_id, i).second) {
      throw std::invalid_argument("duplicate query_id in queue: " + items_[i].query_id);
    }
  }

  std::ifstream in(store_path_);
  if (!in) return;  // fresh store
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LabelEvent e;
    try {
      e = parse_event(line);
    } catch (const std::exception& ex) {
      throw std::runtime_error("label store " + store_path_ + " line " + std::to_string(n) +
                               ": " + ex.what());
    }
    if (!index_.count(e.query_id) ||
        !std::binary_search(annotators_.begin(), annotators_.end(), e.annotator)) {
      throw std::runtime_error("label store " + store_path_ + " line " + std::to_string(n) +
                               ": unknown query or annotator");
    }
    apply(e);
  }
}

void AnnotationService::apply(const LabelEvent& e) { live_[e.query_id][e.annotator] = e; }

std::optional<AnnotationItem> AnnotationService::next_item(const std::string& annotator) const {
  std::lock_guard lock(mu_);
  if (!std::binary_search(annotators_.begin(), annotators_.end(), annotator)) {
    throw std::out_of_range("unknown annotator " + annotator);
  }
  for (const auto& item : items_) {
    const auto it = live_.find(item.query_id);
    if (it == live_.end() || !it->second.count(annotator)) return item;
  }
  return std::nullopt;
}

ItemStatus AnnotationService::submit_label(const std::string& annotator,
                                           const std::string& query_id,
                                           AnnotationLabel label) {
  std::lock_guard lock(mu_);
  if (!std::binary_search(annotators_.begin(), annotators_.end(), annotator)) {
    throw std::out_of_range("unknown annotator " + annotator);
  }
  if (!index_.count(query_id)) throw std::out_of_range("unknown query_id " + query_id);
  const LabelEvent e{query_id, annotator, label, clock_()};
  const std::string line = serialize_event(e) + "\n";

  std::FILE* f = std::fopen(store_path_.c_str(), "ab");
  if (!f) throw std::runtime_error("cannot open label store " + store_path_);
  const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() &&
                  std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
  const bool closed = std::fclose(f) == 0;
  if (!ok || !closed) throw std::runtime_error("failed writing label store " + store_path_);

  apply(e);
  return status_locked(query_id);
}

std::optional<AnnotationItem> AnnotationService::item(const std::string& query_id) const {
  const auto it = index_.find(query_id);
  if (it == index_.end()) return std::nullopt;
  return items_[it->second];
}

ItemStatus AnnotationService::status_locked(const std::string& query_id) const {
  const auto it = live_.find(query_id);
  if (it == live_.end() || it->second.empty()) return ItemStatus::Pending;
  return it->second.size() == annotators_.size() ? ItemStatus::Complete
                                                  : ItemStatus::PartiallyLabeled;
}

ItemStatus AnnotationService::status(const std::string& query_id) const {
  std::lock_guard lock(mu_);
  if (!index_.count(query_id)) throw std::out_of_range("unknown query_id " + query_id);
  return status_locked(query_id);
}

std::map<std::string, AnnotationLabel> AnnotationService::labels(
    const std::string& query_id) const {
  std::lock_guard lock(mu_);
  std::map<std::string, AnnotationLabel> out;
  if (const auto it = live_.find(query_id); it != live_.end()) {
    for (const auto& [a, e] : it->second) out[a] = e.label;
  }
  return out;
}

ProgressReport AnnotationService::progress() const {
  std::lock_guard lock(mu_);
  ProgressReport p;
  p.total = static_cast<int>(items_.size());
  for (const auto& a : annotators_) p.labeled_by[a] = 0;
  for (const auto& item : items_) {
    switch (status_locked(item.query_id)) {
      case ItemStatus::Pending: ++p.pending; break;
      case ItemStatus::PartiallyLabeled: ++p.partially_labeled; break;
      case ItemStatus::Complete: ++p.complete; break;
    }
  }
  for (const auto& [qid, by] : live_) {
    for (const auto& [a, e] : by) ++p.labeled_by[a];
  }
  return p;
}

AgreementReport AnnotationService::agreement() const {
  std::lock_guard lock(mu_);
  AgreementReport r;
  r.n_raters = static_cast<int>(annotators_.size());
  std::vector<std::vector<int>> table;
  for (const auto& item : items_) {
    const auto it = live_.find(item.query_id);
    if (it == live_.end() || it->second.size() != annotators_.size()) continue;
    std::vector<int> row(kIntentLabelCount, 0);
    bool skipped = false;
    for (const auto& [a, e] : it->second) {
      const auto intent = as_intent(e.label);
      if (!intent) {
        skipped = true;
        break;
      }
      ++row[index_of(*intent)];
    }
    if (!skipped) table.push_back(std::move(row));
  }
  r.n_items = static_cast<int>(table.size());
  if (table.empty()) return r;
  for (IntentLabel l : kAllIntents) {
    long c = 0;
    for (const auto& row : table) c += row[index_of(l)];
    r.category_proportions[l] =
        static_cast<double>(c) / static_cast<double>(table.size() * annotators_.size());
  }
  if (r.n_raters >= 2) r.kappa = fleiss_kappa(table, r.n_raters);
  return r;
}

std::vector<LabelEvent> AnnotationService::live_events() const {
  std::lock_guard lock(mu_);
  std::vector<LabelEvent> out;
  for (const auto& item : items_) {
    if (const auto it = live_.find(item.query_id); it != live_.end()) {
      for (const auto& [a, e] : it->second) out.push_back(e);
    }
  }
  return out;
}

std::string item_to_json(const AnnotationItem& item, ItemStatus status) {
  auto j = item_json(item);
  j["status"] = std::string(to_string(status));
  return j.dump();
}

std::string progress_to_json(const ProgressReport& p) {
  ordered_json j{{"total", p.total},
                 {"pending", p.pending},
                 {"partially_labeled", p.partially_labeled},
                 {"complete", p.complete}};
  ordered_json by = ordered_json::object();
  for (const auto& [a, n] : p.labeled_by) by[a] = n;
  j["labeled_by"] = by;
  return j.dump();
}

std::string agreement_to_json(const AgreementReport& a) {
  ordered_json j;
  j["kappa"] = a.kappa ? ordered_json(*a.kappa) : ordered_json(nullptr);
  j["n_items"] = a.n_items;
  j["n_raters"] = a.n_raters;
  ordered_json props = ordered_json::object();
  for (const auto& [l, p] : a.category_proportions) props[std::string(to_string(l))] = p;
  j["category_proportions"] = props;
  return j.dump();
}

}  // namespace prodsearch
