#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prodsearch {

/// Seconds since the Unix epoch, UTC. Serialized as "YYYY-MM-DDTHH:MM:SSZ".
struct Timestamp {
  std::int64_t seconds = 0;

  auto operator<=>(const Timestamp&) const = default;
};

/// Parses an ISO-8601 UTC instant ("2019-09-03T10:15:00Z"). Throws
/// std::invalid_argument on anything else.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

struct ClickEvent {
  std::string url;
  std::string snippet;
  double dwell_seconds = 0.0;
  int order = 1;  // 1-based position within the query

  bool operator==(const ClickEvent&) const = default;
};

struct QueryRecord {
  std::string query_id;
  std::string session_id;
  Timestamp timestamp;
  std::string query;
  int ads_shown = 0;
  std::vector<ClickEvent> clicks;  // sorted by order

  bool operator==(const QueryRecord&) const = default;
};

struct Session {
  std::string session_id;
  std::vector<QueryRecord> records;  // time-ordered
};

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<QueryRecord> records;
  std::vector<ParseError> errors;
};

/// Reads the line-delimited log format. Malformed lines are collected as
/// per-line errors and skipped; blank lines are ignored.
ParseResult parse_log(std::istream& in);
ParseResult parse_log_file(const std::string& path);

/// Validates a record against the data-model invariants. Returns an empty
/// string when valid, otherwise a short reason.
std::string validate_record(const QueryRecord& record);

/// Canonical single-line form of a record (no trailing newline).
std::string serialize_record(const QueryRecord& record);
void write_log(std::ostream& out, std::span<const QueryRecord> records);

/// Groups records by session_id. Each session is sorted by (timestamp,
/// query_id); sessions are sorted by their first record's timestamp, then
/// session_id.
std::vector<Session> build_sessions(std::span<const QueryRecord> records);

}  // namespace prodsearch
