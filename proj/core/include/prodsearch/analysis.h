#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prodsearch/intent.h"
#include "prodsearch/log_model.h"

namespace prodsearch {

struct LabeledRecord {
  QueryRecord record;
  IntentLabel intent = IntentLabel::NotProduct;
};

using IntentMap = std::map<IntentLabel, double>;

/// Percent of each intent's records whose last click (highest order) dwelt
/// strictly more than 30 s. Zero-click records count as failures; intents
/// without records are absent.
IntentMap success_rate(std::span<const LabeledRecord> records);

/// Percent share of each product intent among product-intent labels.
/// Throws when no product label is present.
IntentMap popularity(std::span<const IntentLabel> labels);

/// Mean total dwell per record, relative to the Comparison mean. Throws
/// "no comparison baseline" if Comparison is missing or its mean is zero.
IntentMap effort(std::span<const LabeledRecord> records);

/// [current][preceding] percents over the product intents: the share of
/// queries of the current intent with at least one earlier query of the
/// preceding intent in the same session.
using CooccurrenceMatrix = std::array<std::array<double, kProductIntentCount>, kProductIntentCount>;

struct LabeledSession {
  std::string session_id;
  std::vector<IntentLabel> intents;  // time order
};

CooccurrenceMatrix cooccurrence(std::span<const LabeledSession> sessions);

/// Groups labeled records into sessions using the log-model ordering.
std::vector<LabeledSession> label_sessions(std::span<const LabeledRecord> records);

struct MetricsReport {
  IntentMap success_rate;
  IntentMap popularity;
  std::optional<IntentMap> effort;  // empty without a Comparison baseline
  std::string effort_error;
  CooccurrenceMatrix cooccurrence{};
  std::map<IntentLabel, long> counts;
};

MetricsReport analyze(std::span<const LabeledRecord> records);

std::string metrics_to_json(const MetricsReport& report);
/// Table-style CSV: intent, Success Rate, Popularity, Estimated Effort, count.
std::string metrics_table_csv(const MetricsReport& report);
/// Co-occurrence CSV; rows are the current intent, columns the preceding one.
std::string cooccurrence_csv(const CooccurrenceMatrix& m);

}  // namespace prodsearch
