#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prodsearch/intent.h"
#include "prodsearch/log_model.h"

namespace prodsearch {

enum class ItemStatus { Pending, PartiallyLabeled, Complete };

std::string_view to_string(ItemStatus status);

struct AnnotationItem {
  std::string query_id;
  std::string query;
  std::vector<ClickEvent> clicks;
  int topic = 0;
};

/// Queue file: one JSON object per line with query_id, query, clicks, topic.
std::vector<AnnotationItem> load_queue(const std::string& path);
void save_queue(const std::string& path, std::span<const AnnotationItem> items);
AnnotationItem item_from_record(const QueryRecord& record, int topic);

struct LabelEvent {
  std::string query_id;
  std::string annotator;
  AnnotationLabel label = AnnotationLabel::Skip;
  Timestamp timestamp;
};

std::string serialize_event(const LabelEvent& event);
/// Throws std::invalid_argument on a malformed line.
LabelEvent parse_event(std::string_view line);

/// kappa for an items x categories count table where every row sums to
/// raters. Throws on row-sum mismatches (naming the row), raters < 2 or an
/// empty table.
double fleiss_kappa(const std::vector<std::vector<int>>& table, int raters);

/// Strict majority over non-Skip labels, by latest label per (query,
/// annotator). Items without a majority are left out.
std::map<std::string, IntentLabel> consensus_labels(std::span<const LabelEvent> events);

struct AgreementReport {
  std::optional<double> kappa;  // empty when no item is fully covered
  int n_items = 0;
  int n_raters = 0;
  std::map<IntentLabel, double> category_proportions;
};

struct ProgressReport {
  int total = 0;
  int pending = 0;
  int partially_labeled = 0;
  int complete = 0;
  std::map<std::string, int> labeled_by;  // annotator -> live labels
};

/// Queue plus append-only label log. The live state is the fold of the log;
/// constructing a service over an existing log replays it. Submissions are
/// serialized; every method is safe to call concurrently.
class AnnotationService {
 public:
  using Clock = std::function<Timestamp()>;

  AnnotationService(std::vector<AnnotationItem> items, std::vector<std::string> annotators,
                    std::string store_path, Clock clock = {});

  /// Smallest (topic, query_id) item the annotator has not labeled yet.
  /// Throws std::out_of_range for an unknown annotator.
  std::optional<AnnotationItem> next_item(const std::string& annotator) const;

  /// Appends and flushes the event before returning the item's new status.
  /// Throws std::out_of_range (unknown annotator or query) or
  /// std::runtime_error (storage failure, state unchanged).
  ItemStatus submit_label(const std::string& annotator, const std::string& query_id,
                          AnnotationLabel label);

  std::optional<AnnotationItem> item(const std::string& query_id) const;
  ItemStatus status(const std::string& query_id) const;
  /// Live labels of an item, by annotator.
  std::map<std::string, AnnotationLabel> labels(const std::string& query_id) const;
  ProgressReport progress() const;
  AgreementReport agreement() const;
  std::vector<LabelEvent> live_events() const;
  const std::vector<std::string>& annotators() const { return annotators_; }

 private:
  ItemStatus status_locked(const std::string& query_id) const;
  void apply(const LabelEvent& e);

  std::vector<AnnotationItem> items_;  // sorted by (topic, query_id)
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> annotators_;
  std::string store_path_;
  Clock clock_;
  // query_id -> annotator -> live event
  std::map<std::string, std::map<std::string, LabelEvent>> live_;
  mutable std::mutex mu_;
};

std::string item_to_json(const AnnotationItem& item, ItemStatus status);
std::string progress_to_json(const ProgressReport& p);
std::string agreement_to_json(const AgreementReport& a);

/// HTTP front end over an AnnotationService.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds; port 0 picks a free port. Throws std::runtime_error on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prodsearch
