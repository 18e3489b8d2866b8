#include "prodsearch/log_model.h"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace prodsearch {
namespace {

QueryRecord sample_record() {
  QueryRecord r;
  r.query_id = "q1";
  r.session_id = "s1";
  r.timestamp = parse_timestamp("2019-09-03T10:15:00Z");
  r.query = "sonix laptop \"pro\" \xc3\xa9";
  r.ads_shown = 2;
  r.clicks = {{"https://sonix.com/pro", "the pro", 42.5, 1},
              {"https://shop.example.com/x", "", 3.0, 2}};
  return r;
}

TEST(Timestamp, ParseFormatRoundTrip) {
  const Timestamp t = parse_timestamp("2019-09-03T10:15:00Z");
  EXPECT_EQ(format_timestamp(t), "2019-09-03T10:15:00Z");
  EXPECT_EQ(parse_timestamp("1970-01-01T00:00:00Z").seconds, 0);
  EXPECT_EQ(parse_timestamp("2000-03-01T00:00:00Z").seconds - parse_timestamp("2000-02-28T00:00:00Z").seconds,
            2 * 86400);
}

TEST(Timestamp, RejectsMalformed) {
  for (const char* bad : {"2019-09-03 10:15:00", "2019-02-30T00:00:00Z", "2019-09-03T24:00:00Z",
                          "", "2019-9-3T10:15:00Z"}) {
    EXPECT_THROW(parse_timestamp(bad), std::invalid_argument) << bad;
  }
}

TEST(Timestamp, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> secs(0, 4102444799);  // through 2099
  for (int i = 0; i < 1000; ++i) {
    const Timestamp t{secs(rng)};
    ASSERT_EQ(parse_timestamp(format_timestamp(t)), t);
  }
}

TEST(ParseLog, SerializeParseRoundTrip) {
  const QueryRecord r = sample_record();
  std::istringstream in(serialize_record(r) + "\n\n");
  const ParseResult p = parse_log(in);
  ASSERT_TRUE(p.errors.empty());
  ASSERT_EQ(p.records.size(), 1u);
  EXPECT_EQ(p.records.front(), r);
}

TEST(ParseLog, CollectsPerLineErrorsAndKeepsGoodLines) {
  QueryRecord ok = sample_record();
  QueryRecord dup = ok;
  std::ostringstream text;
  text << serialize_record(ok) << "\n"
       << "{not json\n"
       << serialize_record(dup) << "\n"
       << R"({"query_id":"q2","session_id":"s","timestamp":"2019-09-03T10:15:00Z","query":"x","ads_shown":-1,"clicks":[]})"
       << "\n"
       << R"({"query_id":"q3","session_id":"s","timestamp":"2019-09-03T10:15:00Z","query":"x","ads_shown":0,"clicks":[{"url":"u","dwell_seconds":1,"order":2}]})"
       << "\n"
       << R"({"query_id":"q4","session_id":"s","timestamp":"2019-09-03T10:15:00Z","query":"zero clicks","ads_shown":0,"clicks":[]})"
       << "\n";
  std::istringstream in(text.str());
  const ParseResult p = parse_log(in);
  ASSERT_EQ(p.records.size(), 2u);
  EXPECT_EQ(p.records[1].query_id, "q4");
  ASSERT_EQ(p.errors.size(), 4u);
  EXPECT_EQ(p.errors[0].line, 2u);
  EXPECT_EQ(p.errors[1].line, 3u);
  EXPECT_NE(p.errors[1].message.find("duplicate"), std::string::npos);
  EXPECT_EQ(p.errors[2].line, 4u);
  EXPECT_EQ(p.errors[3].line, 5u);
}

TEST(ParseLog, SortsClicksByOrder) {
  std::istringstream in(
      R"({"query_id":"q","session_id":"s","timestamp":"2019-09-03T10:15:00Z","query":"x","ads_shown":0,"clicks":[{"url":"b","dwell_seconds":1,"order":2},{"url":"a","dwell_seconds":1,"order":1}]})");
  const ParseResult p = parse_log(in);
  ASSERT_EQ(p.records.size(), 1u);
  EXPECT_EQ(p.records[0].clicks[0].url, "a");
}

TEST(ValidateRecord, Reasons) {
  QueryRecord r = sample_record();
  EXPECT_EQ(validate_record(r), "");
  r.query = "   ";
  EXPECT_EQ(validate_record(r), "empty query");
  r = sample_record();
  r.clicks[1].dwell_seconds = -1;
  EXPECT_EQ(validate_record(r), "negative dwell");
  r = sample_record();
  r.clicks[1].order = 1;
  EXPECT_FALSE(validate_record(r).empty());
}

TEST(BuildSessions, OrdersRecordsAndSessions) {
  auto make = [](std::string id, std::string session, const char* ts) {
    QueryRecord r;
    r.query_id = std::move(id);
    r.session_id = std::move(session);
    r.timestamp = parse_timestamp(ts);
    r.query = "x";
    return r;
  };
  const std::vector<QueryRecord> records = {
      make("q3", "b", "2019-09-01T10:00:00Z"), make("q1", "a", "2019-09-01T12:00:00Z"),
      make("q2", "a", "2019-09-01T11:00:00Z"), make("q4", "b", "2019-09-01T10:00:00Z")};
  const auto sessions = build_sessions(records);
  ASSERT_EQ(sessions.size(), 2u);
  EXPECT_EQ(sessions[0].session_id, "b");
  EXPECT_EQ(sessions[0].records[0].query_id, "q3");
  EXPECT_EQ(sessions[0].records[1].query_id, "q4");
  EXPECT_EQ(sessions[1].records[0].query_id, "q2");
  EXPECT_EQ(sessions[1].records[1].query_id, "q1");
}

}  // namespace
}  // namespace prodsearch
