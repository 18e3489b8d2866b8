#include "prodsearch/intent_features.h"

#include <gtest/gtest.h>

#include <sstream>

namespace prodsearch {
namespace {

struct Fixture {
  Vocab vocab{{"sonix", "laptop", "pro", "com", "review", "fast", "great", "shop", "example", "x"}};
  EmbeddingTable table{2};

  Fixture() {
    const std::vector<double> a = {1, 0}, b = {0, 1}, c = {1, 1};
    table.set("sonix", a);
    table.set("laptop", b);
    table.set("pro", c);
  }
};

QueryRecord record() {
  QueryRecord r;
  r.query_id = "q1";
  r.query = "sonix laptop review";
  r.clicks = {{"https://www.sonix.com/pro", "fast laptop", 40, 1},
              {"https://shop.example.com/laptop", "great", 5, 2},
              {"https://sonix.com/x", "", 2, 3},
              {"not a url", "", 1, 4}};
  return r;
}

TEST(ExtractFeatures, ScalarsByHand) {
  Fixture fx;
  const IntentFeatures f = extract_features(record(), fx.table, fx.vocab);
  EXPECT_EQ(f.click_count, 4);
  EXPECT_EQ(f.query_length, 3);
  EXPECT_EQ(f.snippet_token_count, 3);
  // sonix.com twice and shop.example.com; the unparseable url adds nothing.
  EXPECT_EQ(f.url_domain_count, 2);
  // Query pieces {sonix, laptop, review}; url pieces hold sonix and laptop.
  EXPECT_DOUBLE_EQ(f.similarity, 2.0 / 3.0);
  EXPECT_EQ(f.query_emb, (std::vector<double>{0.5, 0.5}));
}

TEST(ExtractFeatures, NoClicksMeansZeroSimilarityAndZeroUrlEmbedding) {
  Fixture fx;
  QueryRecord r = record();
  r.clicks.clear();
  const IntentFeatures f = extract_features(r, fx.table, fx.vocab);
  EXPECT_EQ(f.click_count, 0);
  EXPECT_EQ(f.url_domain_count, 0);
  EXPECT_EQ(f.similarity, 0);
  EXPECT_EQ(f.url_emb, (std::vector<double>{0, 0}));
}

TEST(ExtractFeatures, SimilarityBoundedOnVariedRecords) {
  Fixture fx;
  for (const char* q : {"sonix", "pro pro pro", "zzz", "laptop sonix pro review fast"}) {
    QueryRecord r = record();
    r.query = q;
    const double s = extract_features(r, fx.table, fx.vocab).similarity;
    EXPECT_GE(s, 0);
    EXPECT_LE(s, 1);
  }
}

TEST(ProductFeatures, QueryThenUrlEmbedding) {
  Fixture fx;
  const auto row = product_features(record(), fx.table, fx.vocab);
  const IntentFeatures f = extract_features(record(), fx.table, fx.vocab);
  std::vector<double> want = f.query_emb;
  want.insert(want.end(), f.url_emb.begin(), f.url_emb.end());
  EXPECT_EQ(row, want);
}

TEST(AssembleMatrix, LayoutAndMixedDimensions) {
  Fixture fx;
  const std::vector<IntentFeatures> rows = {extract_features(record(), fx.table, fx.vocab)};
  const Matrix m = assemble_matrix(rows);
  ASSERT_EQ(m.cols(), 2 * 2 + static_cast<std::size_t>(kScalarFeatureCount));
  EXPECT_EQ(m(0, 4), 4);
  EXPECT_EQ(m(0, 5), 3);
  EXPECT_EQ(m(0, 7), 2);
  EXPECT_DOUBLE_EQ(m(0, 8), 2.0 / 3.0);
  EXPECT_EQ(feature_column_names(2).size(), m.cols());
  std::vector<IntentFeatures> mixed = rows;
  mixed.push_back(rows[0]);
  mixed[1].query_emb.push_back(0);
  EXPECT_THROW(assemble_matrix(mixed), std::invalid_argument);
  EXPECT_TRUE(assemble_matrix({}).empty());
}

TEST(WriteFeatureCsv, HeaderAndRows) {
  Fixture fx;
  const std::vector<IntentFeatures> rows = {extract_features(record(), fx.table, fx.vocab)};
  const std::vector<std::string> ids = {"q1"};
  std::ostringstream out;
  write_feature_csv(out, ids, rows);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header,
            "query_id,q0,q1,u0,u1,click_count,query_length,snippet_token_count,"
            "url_domain_count,similarity");
  EXPECT_EQ(line.substr(0, 11), "q1,0.5,0.5,");
}

}  // namespace
}  // namespace prodsearch
