#include "prodsearch/topics.h"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "json.hpp"

namespace prodsearch {
namespace {

/// 40 documents: the first half draws words 0..9, the second half 10..19.
std::vector<TopicDocument> two_topic_corpus(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> word(0, 9);
  std::vector<TopicDocument> docs;
  for (int d = 0; d < 40; ++d) {
    TopicDocument doc{"d" + std::to_string(d), {}};
    for (int i = 0; i < 25; ++i) doc.token_ids.push_back(word(rng) + (d < 20 ? 0 : 10));
    docs.push_back(doc);
  }
  return docs;
}

/// Recounts every table from the assignments; returns a description of the
/// first mismatch, or an empty string.
std::string conservation_error(const TopicModel& m, std::span<const TopicDocument> docs) {
  const std::size_t k = static_cast<std::size_t>(m.num_topics);
  std::vector<long> tw(k * m.vocab_size, 0), tt(k, 0);
  long tokens = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<long> dt(k, 0);
    if (m.assignments[d].size() != docs[d].token_ids.size()) return "assignment length";
    for (std::size_t i = 0; i < docs[d].token_ids.size(); ++i) {
      const int z = m.assignments[d][i];
      if (z < 0 || z >= m.num_topics) return "topic out of range";
      ++tw[z * m.vocab_size + docs[d].token_ids[i]];
      ++tt[z];
      ++dt[z];
      ++tokens;
    }
    if (dt != m.doc_topic[d]) return "doc_topic row " + std::to_string(d);
  }
  if (tw != m.topic_word) return "topic_word";
  if (tt != m.topic_totals) return "topic_totals";
  long total = 0;
  for (long t : m.topic_totals) total += t;
  if (total != tokens) return "token total";
  return {};
}

TEST(Lda, CountsConservedAfterEverySweep) {
  const auto docs = two_topic_corpus(1);
  LdaParams p;
  p.num_topics = 4;
  p.iterations = 30;
  int sweeps = 0;
  std::string first_error;
  fit_lda(docs, 20, p, [&](int sweep, const TopicModel& m) {
    ++sweeps;
    EXPECT_EQ(sweep, sweeps);
    if (first_error.empty()) {
      const auto e = conservation_error(m, docs);
      if (!e.empty()) first_error = "sweep " + std::to_string(sweep) + ": " + e;
    }
  });
  EXPECT_EQ(sweeps, 30);
  EXPECT_EQ(first_error, "");
}

TEST(Lda, RecoversDisjointVocabularies) {
  const auto docs = two_topic_corpus(2);
  LdaParams p;
  p.num_topics = 2;
  p.iterations = 200;
  p.seed = 7;
  TopicModel initial;
  {
    LdaParams zero = p;
    zero.iterations = 0;
    initial = fit_lda(docs, 20, zero);
  }
  const TopicModel m = fit_lda(docs, 20, p);
  // Map each topic to the vocabulary half it mostly holds.
  long agree = 0, total = 0;
  for (int z = 0; z < 2; ++z) {
    long low = 0, high = 0;
    for (int w = 0; w < 20; ++w) (w < 10 ? low : high) += m.word_count(z, w);
    agree += std::max(low, high);
    total += low + high;
  }
  EXPECT_GE(static_cast<double>(agree) / total, 0.9);
  EXPECT_GT(log_likelihood(m), log_likelihood(initial));
}

TEST(Lda, DefaultsAndDeterminism) {
  const auto docs = two_topic_corpus(3);
  LdaParams p;
  p.num_topics = 5;
  p.iterations = 10;
  const TopicModel a = fit_lda(docs, 20, p);
  const TopicModel b = fit_lda(docs, 20, p);
  EXPECT_DOUBLE_EQ(a.alpha, 10.0);
  EXPECT_DOUBLE_EQ(a.beta, 0.01);
  EXPECT_EQ(a.assignments, b.assignments);
  p.seed = 2;
  EXPECT_NE(fit_lda(docs, 20, p).assignments, a.assignments);
}

TEST(Lda, RejectsBadInput) {
  LdaParams p;
  p.num_topics = 2;
  const std::vector<TopicDocument> empty_docs = {{"a", {}}, {"b", {}}};
  EXPECT_THROW(fit_lda(empty_docs, 5, p), std::invalid_argument);
  const std::vector<TopicDocument> out_of_range = {{"a", {1, 7}}};
  EXPECT_THROW(fit_lda(out_of_range, 5, p), std::invalid_argument);
  p.num_topics = 0;
  const std::vector<TopicDocument> ok = {{"a", {1}}};
  EXPECT_THROW(fit_lda(ok, 5, p), std::invalid_argument);
}

TEST(Lda, EmptyDocumentsAreKeptButUnassigned) {
  const std::vector<TopicDocument> docs = {{"a", {0, 1, 1}}, {"b", {}}};
  LdaParams p;
  p.num_topics = 3;
  p.iterations = 5;
  const TopicModel m = fit_lda(docs, 2, p);
  ASSERT_EQ(m.doc_ids.size(), 2u);
  EXPECT_TRUE(m.assignments[1].empty());
  EXPECT_EQ(dominant_topic(m, 1), 0);
}

// Direct evaluation of log p(w|z) + log p(z) from the count tables.
TEST(Lda, LogLikelihoodMatchesDirectFormula) {
  TopicModel m;
  m.num_topics = 2;
  m.alpha = 0.5;
  m.beta = 0.1;
  m.vocab_size = 3;
  m.assignments = {{0, 0, 1}, {1}};
  m.doc_topic = {{2, 1}, {0, 1}};
  m.topic_word = {1, 1, 0, 0, 1, 1};  // topic 0: w0, w1; topic 1: w1, w2
  m.topic_totals = {2, 2};
  const double K = 2, V = 3, a = 0.5, b = 0.1;
  double want = 0;
  for (int z = 0; z < 2; ++z) {
    want += std::lgamma(V * b) - V * std::lgamma(b);
    for (int w = 0; w < 3; ++w) want += std::lgamma(m.topic_word[z * 3 + w] + b);
    want -= std::lgamma(m.topic_totals[z] + V * b);
  }
  for (const auto& row : m.doc_topic) {
    const double n = static_cast<double>(row[0] + row[1]);
    want += std::lgamma(K * a) - K * std::lgamma(a);
    for (long c : row) want += std::lgamma(c + a);
    want -= std::lgamma(n + K * a);
  }
  EXPECT_NEAR(log_likelihood(m), want, 1e-9);
}

TEST(DominantTopic, TiesGoToSmallestTopic) {
  TopicModel m;
  m.num_topics = 3;
  m.doc_topic = {{1, 3, 3}, {0, 0, 0}, {2, 0, 1}};
  m.doc_ids = {"a", "b", "c"};
  EXPECT_EQ(dominant_topic(m, 0), 1);
  EXPECT_EQ(dominant_topic(m, 1), 0);
  EXPECT_EQ(dominant_topic(m, 2), 0);
  const auto members = topic_memberships(m);
  EXPECT_EQ(members.at(0), (std::vector<std::string>{"b", "c"}));
  EXPECT_EQ(members.at(1), (std::vector<std::string>{"a"}));
  EXPECT_FALSE(members.count(2));
}

TEST(SamplePerTopic, CapsAndCoversSmallClusters) {
  std::map<int, std::vector<std::string>> members;
  for (int i = 0; i < 10; ++i) members[2].push_back("x" + std::to_string(i));
  members[0] = {"a", "b"};
  const auto s = sample_per_topic(members, 3, 4);
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[0].topic, 0);
  EXPECT_EQ(s[1].topic, 0);
  std::set<std::string> ids;
  for (const auto& q : s) ids.insert(q.query_id);
  EXPECT_EQ(ids.size(), 5u);
  EXPECT_TRUE(ids.count("a") && ids.count("b"));
  const auto again = sample_per_topic(members, 3, 4);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].query_id, again[i].query_id);
  EXPECT_THROW(sample_per_topic(members, 0, 4), std::invalid_argument);
}

TEST(SamplePerTopic, UniformOverManySeeds) {
  std::map<int, std::vector<std::string>> members;
  for (int i = 0; i < 4; ++i) members[0].push_back(std::to_string(i));
  std::map<std::string, int> hits;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    for (const auto& q : sample_per_topic(members, 1, seed)) ++hits[q.query_id];
  }
  for (const auto& [id, n] : hits) EXPECT_NEAR(n, 1000, 120) << id;
}

TEST(TopWords, OrderedByCountThenId) {
  TopicModel m;
  m.num_topics = 1;
  m.vocab_size = 4;
  m.topic_word = {0, 5, 2, 5};
  m.topic_totals = {12};
  const Vocab vocab({"w1", "w2", "w3"});
  const auto top = top_words(m, 0, vocab, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].piece, "w1");
  EXPECT_EQ(top[1].piece, "w3");
  EXPECT_EQ(top[2].piece, "w2");
  const auto dump = nlohmann::json::parse(topic_dump_json(m, vocab, 2));
  EXPECT_EQ(dump["K"], 1);
  EXPECT_EQ(dump["topics"][0]["top_words"].size(), 2u);
}

TEST(BuildDoc, QueryThenUrlPathThenSnippetWithoutUnknowns) {
  const Vocab vocab({"lap", "##top", "pro", "fast", "sonix"});
  QueryRecord r;
  r.query = "laptop qqq";
  r.clicks = {{"https://sonix.com/pro", "fast", 40, 1}};
  const TopicDocument d = build_doc(r, vocab);
  std::vector<std::string> pieces;
  for (int id : d.token_ids) pieces.push_back(vocab.piece(id));
  EXPECT_EQ(pieces, (std::vector<std::string>{"lap", "##top", "pro", "fast"}));
}

}  // namespace
}  // namespace prodsearch
