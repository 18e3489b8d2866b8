#include "prodsearch/topics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "sampling.h"

namespace prodsearch {
namespace {

void append_pieces(std::string_view text, const Vocab& vocab, std::vector<int>& out) {
  for (const auto& piece : tokenize(text, vocab)) {
    const int id = vocab.id(piece);
    if (id < 0 || id == vocab.unk_id()) continue;
    out.push_back(id);
  }
}

}  // namespace

TopicDocument build_doc(const QueryRecord& record, const Vocab& vocab) {
  TopicDocument doc;
  doc.query_id = record.query_id;
  append_pieces(record.query, vocab, doc.token_ids);
  for (const auto& click : record.clicks) {
    append_pieces(url_text(click.url, /*include_domain=*/false), vocab, doc.token_ids);
  }
  for (const auto& click : record.clicks) append_pieces(click.snippet, vocab, doc.token_ids);
  return doc;
}

TopicModel fit_lda(std::span<const TopicDocument> docs, std::size_t vocab_size,
                   const LdaParams& params, const SweepObserver& observer) {
  if (params.num_topics < 1) throw std::invalid_argument("topic count must be >= 1");
  if (params.beta <= 0) throw std::invalid_argument("beta must be > 0");
  if (params.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (vocab_size == 0) throw std::invalid_argument("vocabulary is empty");
  bool any = false;
  for (const auto& d : docs) {
    for (int w : d.token_ids) {
      if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) {
        throw std::invalid_argument("token id out of range in document " + d.query_id);
      }
    }
    any = any || !d.token_ids.empty();
  }
  if (!any) throw std::invalid_argument("all documents are empty");

  const int k_topics = params.num_topics;
  const std::size_t K = static_cast<std::size_t>(k_topics);
  TopicModel m;
  m.num_topics = k_topics;
  m.alpha = params.alpha > 0 ? params.alpha : 50.0 / k_topics;
  m.beta = params.beta;
  m.vocab_size = vocab_size;
  m.topic_word.assign(K * vocab_size, 0);
  m.topic_totals.assign(K, 0);
  m.doc_topic.assign(docs.size(), std::vector<long>(K, 0));
  m.assignments.resize(docs.size());
  m.doc_ids.reserve(docs.size());

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<int> init(0, k_topics - 1);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    m.doc_ids.push_back(docs[d].query_id);
    auto& z = m.assignments[d];
    z.resize(docs[d].token_ids.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const int t = init(rng);
      const int w = docs[d].token_ids[i];
      z[i] = t;
      ++m.doc_topic[d][t];
      ++m.topic_word[t * vocab_size + w];
      ++m.topic_totals[t];
    }
  }

  const double v_beta = static_cast<double>(vocab_size) * m.beta;
  std::vector<double> cumulative(K);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int sweep = 1; sweep <= params.iterations; ++sweep) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto& z = m.assignments[d];
      auto& nd = m.doc_topic[d];
      for (std::size_t i = 0; i < z.size(); ++i) {
        const std::size_t w = static_cast<std::size_t>(docs[d].token_ids[i]);
        int t = z[i];
        --nd[t];
        --m.topic_word[t * vocab_size + w];
        --m.topic_totals[t];

        double total = 0;
        for (std::size_t k = 0; k < K; ++k) {
          total += (static_cast<double>(nd[k]) + m.alpha) *
                   (static_cast<double>(m.topic_word[k * vocab_size + w]) + m.beta) /
                   (static_cast<double>(m.topic_totals[k]) + v_beta);
          cumulative[k] = total;
        }
        const double u = unit(rng) * total;
        t = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                             cumulative.begin());
        if (t >= k_topics) t = k_topics - 1;

        z[i] = t;
        ++nd[t];
        ++m.topic_word[t * vocab_size + w];
        ++m.topic_totals[t];
      }
    }
    if (observer) observer(sweep, m);
  }
  return m;
}

double log_likelihood(const TopicModel& m) {
  const std::size_t K = static_cast<std::size_t>(m.num_topics);
  const double V = static_cast<double>(m.vocab_size);
  double ll = 0;
  // log p(w | z); zero counts contribute nothing once lgamma(beta) is folded in.
  for (std::size_t k = 0; k < K; ++k) {
    ll += std::lgamma(V * m.beta) -
          std::lgamma(static_cast<double>(m.topic_totals[k]) + V * m.beta);
    for (std::size_t w = 0; w < m.vocab_size; ++w) {
      const long n = m.topic_word[k * m.vocab_size + w];
      if (n > 0) ll += std::lgamma(static_cast<double>(n) + m.beta) - std::lgamma(m.beta);
    }
  }
  // log p(z)
  const double Ka = static_cast<double>(K) * m.alpha;
  for (const auto& nd : m.doc_topic) {
    long len = 0;
    ll += std::lgamma(Ka) - static_cast<double>(K) * std::lgamma(m.alpha);
    for (long n : nd) {
      ll += std::lgamma(static_cast<double>(n) + m.alpha);
      len += n;
    }
    ll -= std::lgamma(static_cast<double>(len) + Ka);
  }
  return ll;
}

int dominant_topic(const TopicModel& m, std::size_t doc_index) {
  const auto& row = m.doc_topic.at(doc_index);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::map<int, std::vector<std::string>> topic_memberships(const TopicModel& m) {
  std::map<int, std::vector<std::string>> out;
  for (std::size_t d = 0; d < m.doc_ids.size(); ++d) {
    out[dominant_topic(m, d)].push_back(m.doc_ids[d]);
  }
  return out;
}

std::vector<SampledQuery> sample_per_topic(
    const std::map<int, std::vector<std::string>>& memberships, std::size_t m,
    std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("per-topic sample size must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<SampledQuery> out;
  for (const auto& [topic, ids] : memberships) {
    for (std::size_t i : detail::sample_indices(ids.size(), m, rng)) {
      out.push_back({ids[i], topic});
    }
  }
  return out;
}

std::vector<TopWord> top_words(const TopicModel& m, int topic, const Vocab& vocab,
                               std::size_t n) {
  std::vector<int> ids(m.vocab_size);
  std::iota(ids.begin(), ids.end(), 0);
  const auto count = [&](int w) { return m.word_count(topic, w); };
  n = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(n), ids.end(),
                    [&](int a, int b) {
                      return count(a) != count(b) ? count(a) > count(b) : a < b;
                    });
  std::vector<TopWord> out;
  for (std::size_t i = 0; i < n && count(ids[i]) > 0; ++i) {
    const int w = ids[i];
    out.push_back({static_cast<std::size_t>(w) < vocab.size() ? vocab.piece(w) : "#" + std::to_string(w),
                   count(w)});
  }
  return out;
}

std::string topic_dump_json(const TopicModel& m, const Vocab& vocab, std::size_t top_n) {
  nlohmann::ordered_json j;
  j["K"] = m.num_topics;
  j["alpha"] = m.alpha;
  j["beta"] = m.beta;
  j["vocab_size"] = m.vocab_size;
  auto topics = nlohmann::ordered_json::array();
  for (int k = 0; k < m.num_topics; ++k) {
    auto words = nlohmann::ordered_json::array();
    for (const auto& tw : top_words(m, k, vocab, top_n)) {
      words.push_back({{"piece", tw.piece}, {"count", tw.count}});
    }
    topics.push_back({{"topic", k}, {"tokens", m.topic_totals[k]}, {"top_words", words}});
  }
  j["topics"] = topics;
  return j.dump(2);
}

}  // namespace prodsearch
