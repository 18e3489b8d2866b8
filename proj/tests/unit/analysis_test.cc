#include "prodsearch/analysis.h"

#include <gtest/gtest.h>

#include <random>

#include "json.hpp"

namespace prodsearch {
namespace {

using enum IntentLabel;

LabeledRecord labeled(IntentLabel intent, std::vector<double> dwells,
                      const std::string& session = "s", std::int64_t t = 0) {
  static int next_id = 0;
  LabeledRecord lr;
  lr.intent = intent;
  lr.record.query_id = "q" + std::to_string(next_id++);
  lr.record.session_id = session;
  lr.record.timestamp = Timestamp{t};
  lr.record.query = "x";
  int order = 1;
  for (double d : dwells) lr.record.clicks.push_back({"https://a.com/", "", d, order++});
  return lr;
}

TEST(SuccessRate, StrictlyMoreThanThirtySeconds) {
  const std::vector<LabeledRecord> records = {labeled(Support, {45}), labeled(Support, {10}),
                                              labeled(Support, {31}), labeled(Support, {30})};
  EXPECT_DOUBLE_EQ(success_rate(records).at(Support), 50.0);
}

TEST(SuccessRate, UsesLastClickAndCountsAbandonedQueriesAsFailures) {
  LabeledRecord out_of_order = labeled(Transactional, {});
  out_of_order.record.clicks = {{"u", "", 5, 2}, {"u", "", 90, 1}};
  const std::vector<LabeledRecord> records = {labeled(Transactional, {90, 5}),
                                              labeled(Transactional, {5, 90}), out_of_order,
                                              labeled(Transactional, {}),
                                              labeled(NotProduct, {100})};
  const IntentMap s = success_rate(records);
  EXPECT_DOUBLE_EQ(s.at(Transactional), 25.0);
  EXPECT_FALSE(s.count(NotProduct));
  EXPECT_FALSE(s.count(Comparison));
}

TEST(Popularity, ProductIntentsOnlyAndSumsToHundred) {
  const std::vector<IntentLabel> labels = {Comparison, Transactional, Transactional, NotProduct,
                                           Support};
  const IntentMap p = popularity(labels);
  EXPECT_DOUBLE_EQ(p.at(Transactional), 50.0);
  EXPECT_FALSE(p.count(NotProduct));
  const std::vector<IntentLabel> none = {NotProduct};
  EXPECT_THROW(popularity(none), std::invalid_argument);
}

TEST(Popularity, SumsToHundredOnRandomLabelings) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<IntentLabel> labels;
    const int n = 1 + static_cast<int>(rng() % 500);
    for (int i = 0; i < n; ++i) labels.push_back(kProductIntents[rng() % 5]);
    double sum = 0;
    for (const auto& [k, v] : popularity(labels)) sum += v;
    ASSERT_NEAR(sum, 100.0, 1e-6);
  }
}

TEST(Effort, RelativeToComparison) {
  const std::vector<LabeledRecord> records = {
      labeled(Comparison, {30, 30}), labeled(Comparison, {20}), labeled(Support, {100}),
      labeled(Navigational, {}), labeled(NotProduct, {1000})};
  const IntentMap e = effort(records);
  EXPECT_EQ(e.at(Comparison), 1.0);
  EXPECT_DOUBLE_EQ(e.at(Support), 100.0 / 40.0);
  EXPECT_DOUBLE_EQ(e.at(Navigational), 0.0);
  EXPECT_FALSE(e.count(NotProduct));
}

TEST(Effort, NoComparisonBaseline) {
  const std::vector<LabeledRecord> missing = {labeled(Support, {10})};
  const std::vector<LabeledRecord> zero = {labeled(Comparison, {}), labeled(Support, {10})};
  for (const auto* records : {&missing, &zero}) {
    try {
      effort(*records);
      FAIL();
    } catch (const std::invalid_argument& e) {
      EXPECT_STREQ(e.what(), "no comparison baseline");
    }
  }
}

TEST(Cooccurrence, OrderMatters) {
  const std::vector<LabeledSession> sessions = {{"s", {Comparison, Transactional}}};
  const CooccurrenceMatrix m = cooccurrence(sessions);
  EXPECT_EQ(m[index_of(Transactional)][index_of(Comparison)], 100.0);
  EXPECT_EQ(m[index_of(Comparison)][index_of(Transactional)], 0.0);
}

// Brute force: for each query, look back over the whole session.
CooccurrenceMatrix cooccurrence_oracle(const std::vector<LabeledSession>& sessions) {
  double hits[5][5] = {}, totals[5] = {};
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i < s.intents.size(); ++i) {
      if (s.intents[i] == NotProduct) continue;
      const int a = index_of(s.intents[i]);
      ++totals[a];
      for (int b = 0; b < 5; ++b) {
        bool earlier = false;
        for (std::size_t j = 0; j < i; ++j) earlier |= index_of(s.intents[j]) == b;
        hits[a][b] += earlier;
      }
    }
  }
  CooccurrenceMatrix m{};
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) m[a][b] = totals[a] ? 100.0 * hits[a][b] / totals[a] : 0.0;
  }
  return m;
}

TEST(Cooccurrence, MatchesBruteForceOnRandomSessions) {
  std::mt19937_64 rng(4);
  std::vector<LabeledSession> sessions;
  for (int s = 0; s < 300; ++s) {
    LabeledSession ls{"s" + std::to_string(s), {}};
    for (int i = static_cast<int>(rng() % 6); i >= 0; --i) ls.intents.push_back(kAllIntents[rng() % 6]);
    sessions.push_back(ls);
  }
  const auto got = cooccurrence(sessions);
  const auto want = cooccurrence_oracle(sessions);
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) {
      EXPECT_NEAR(got[a][b], want[a][b], 1e-9);
      EXPECT_GE(got[a][b], 0);
      EXPECT_LE(got[a][b], 100);
    }
  }
}

TEST(LabelSessions, UsesTimeOrder) {
  const std::vector<LabeledRecord> records = {labeled(Transactional, {}, "a", 50),
                                              labeled(Comparison, {}, "a", 10),
                                              labeled(Support, {}, "b", 5)};
  const auto sessions = label_sessions(records);
  ASSERT_EQ(sessions.size(), 2u);
  EXPECT_EQ(sessions[0].session_id, "b");
  EXPECT_EQ(sessions[1].intents, (std::vector<IntentLabel>{Comparison, Transactional}));
}

TEST(Analyze, ReportAndSerializations) {
  const std::vector<LabeledRecord> records = {
      labeled(Comparison, {45}, "a", 1), labeled(Transactional, {10}, "a", 2),
      labeled(NotProduct, {}, "a", 3)};
  const MetricsReport r = analyze(records);
  EXPECT_EQ(r.counts.at(NotProduct), 1);
  ASSERT_TRUE(r.effort.has_value());
  EXPECT_EQ(r.cooccurrence[index_of(Transactional)][index_of(Comparison)], 100.0);
  const auto j = nlohmann::json::parse(metrics_to_json(r));
  EXPECT_EQ(j["success_rate"]["Comparison"], 100.0);
  EXPECT_EQ(j["effort"]["Comparison"], 1.0);
  const std::string table = metrics_table_csv(r);
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "Intent,Success Rate,Popularity,Estimated Effort,Count");
  EXPECT_NE(cooccurrence_csv(r.cooccurrence).find("Transactional,100.000000"),
            std::string::npos);

  const std::vector<LabeledRecord> no_base = {labeled(Support, {5})};
  const MetricsReport nb = analyze(no_base);
  EXPECT_FALSE(nb.effort.has_value());
  EXPECT_EQ(nb.effort_error, "no comparison baseline");
}

}  // namespace
}  // namespace prodsearch
