#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "prodsearch/intent.h"
#include "prodsearch/log_model.h"

namespace prodsearch {

/// Behavior of one intent in generated logs.
struct IntentProfile {
  std::vector<double> click_probs;  // P(click count = i)
  int query_words_min = 1;          // query length in words, inclusive range
  int query_words_max = 3;
  int domain_cap = 6;               // max distinct domains per query
  double dwell_log_mean = 3.0;      // lognormal dwell, seconds
  double dwell_log_sd = 0.6;
  int snippet_words_min = 5;
  int snippet_words_max = 12;
  double marker_rate = 0.7;         // chance the query carries an intent marker word
  double url_copy_rate = 0.3;       // chance a query word is copied into a click path
  double ads_rate = 0.9;            // chance ads_shown >= 1
  double category_rate = 0.0;       // chance the query names a product category

  double mean_clicks() const;
};

struct GeneratorConfig {
  int n_sessions = 1000;
  int n_queries = 0;  // > 0 stops generation at exactly this many records
  int session_min = 1;
  int session_max = 4;
  std::array<double, kIntentLabelCount> intent_mix{};  // indexed by IntentLabel
  std::array<IntentProfile, kIntentLabelCount> profiles{};
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument describing the first invalid field.
  void validate() const;
};

/// Default profiles; the mix is ~16% product traffic with Transactional the
/// most frequent product intent.
GeneratorConfig default_generator_config();

/// Same profiles, restricted to the five product intents.
GeneratorConfig product_only_config();

/// Reads overrides from a JSON object: n_sessions, n_queries, session_min,
/// session_max, seed, intent_mix {label: p}, profiles {label: {field: value}}.
GeneratorConfig generator_config_from_json(std::string_view text);
std::string generator_config_to_json(const GeneratorConfig& config);

struct TruthLabel {
  std::string query_id;
  IntentLabel intent = IntentLabel::NotProduct;
};

struct GeneratedLog {
  std::vector<QueryRecord> records;  // generation order, sessions contiguous
  std::vector<TruthLabel> truth;     // parallel to records
};

GeneratedLog generate(const GeneratorConfig& config);

/// "query_id<TAB>label" lines.
void write_truth(std::ostream& out, const std::vector<TruthLabel>& truth);
std::vector<TruthLabel> read_truth(const std::string& path);

}  // namespace prodsearch
