#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prodsearch/log_model.h"
#include "prodsearch/text.h"

namespace prodsearch {

struct TopicDocument {
  std::string query_id;
  std::vector<int> token_ids;  // vocab indices
};

/// Pieces of the query, then each clicked URL's path (host removed), then
/// each snippet. "[UNK]" pieces are dropped.
TopicDocument build_doc(const QueryRecord& record, const Vocab& vocab);

/// Collapsed-Gibbs LDA state.
struct TopicModel {
  int num_topics = 0;
  double alpha = 0;
  double beta = 0;
  std::size_t vocab_size = 0;
  std::vector<long> topic_word;             // K x V, row-major
  std::vector<long> topic_totals;           // K
  std::vector<std::vector<long>> doc_topic; // D x K
  std::vector<std::vector<int>> assignments;
  std::vector<std::string> doc_ids;

  long word_count(int topic, int word) const {
    return topic_word[static_cast<std::size_t>(topic) * vocab_size + word];
  }
};

struct LdaParams {
  int num_topics = 50;
  double alpha = -1;  // <= 0 selects 50 / K
  double beta = 0.01;
  int iterations = 500;
  std::uint64_t seed = 1;
};

/// Called after every full sweep with the 1-based sweep number.
using SweepObserver = std::function<void(int sweep, const TopicModel& model)>;

TopicModel fit_lda(std::span<const TopicDocument> docs, std::size_t vocab_size,
                   const LdaParams& params, const SweepObserver& observer = {});

/// Joint log p(w, z) under the collapsed model.
double log_likelihood(const TopicModel& model);

/// Argmax of the document's topic counts, ties to the smallest topic id.
int dominant_topic(const TopicModel& model, std::size_t doc_index);

/// topic -> query ids whose dominant topic it is, in document order.
std::map<int, std::vector<std::string>> topic_memberships(const TopicModel& model);

struct SampledQuery {
  std::string query_id;
  int topic = 0;
};

/// Up to m query ids per topic, uniform without replacement, topics in
/// ascending order.
std::vector<SampledQuery> sample_per_topic(
    const std::map<int, std::vector<std::string>>& memberships, std::size_t m,
    std::uint64_t seed);

struct TopWord {
  std::string piece;
  long count = 0;
};

/// The n highest-count words of a topic, ties broken by word id.
std::vector<TopWord> top_words(const TopicModel& model, int topic, const Vocab& vocab,
                               std::size_t n = 20);

/// Structured dump: K, alpha, beta and the top words of every topic.
std::string topic_dump_json(const TopicModel& model, const Vocab& vocab,
                            std::size_t top_n = 20);

}  // namespace prodsearch
