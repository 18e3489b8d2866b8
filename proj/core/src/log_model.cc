#include "prodsearch/log_model.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace prodsearch {
namespace {

using nlohmann::json;

bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len,
                     int& out) {
  if (pos + len > s.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    value = value * 10 + (s[i] - '0');
  }
  out = value;
  return true;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) {
    throw std::invalid_argument(std::string("field '") + key +
                                "' must be a string");
  }
  return v.get<std::string>();
}

long long require_integer(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number_integer()) {
    throw std::invalid_argument(std::string("field '") + key +
                                "' must be an integer");
  }
  return v.get<long long>();
}

QueryRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("line is not an object");
  QueryRecord r;
  r.query_id = require_string(obj, "query_id");
  r.session_id = require_string(obj, "session_id");
  r.timestamp = parse_timestamp(require_string(obj, "timestamp"));
  r.query = require_string(obj, "query");
  const long long ads = require_integer(obj, "ads_shown");
  if (ads < 0) throw std::invalid_argument("negative ads_shown");
  if (ads > std::numeric_limits<int>::max()) {
    throw std::invalid_argument("ads_shown out of range");
  }
  r.ads_shown = static_cast<int>(ads);

  const json& clicks = require(obj, "clicks");
  if (!clicks.is_array()) throw std::invalid_argument("'clicks' must be an array");
  for (const json& c : clicks) {
    if (!c.is_object()) throw std::invalid_argument("click is not an object");
    ClickEvent ev;
    ev.url = require_string(c, "url");
    if (auto it = c.find("snippet"); it != c.end()) {
      if (!it->is_string()) {
        throw std::invalid_argument("field 'snippet' must be a string");
      }
      ev.snippet = it->get<std::string>();
    }
    const json& dwell = require(c, "dwell_seconds");
    if (!dwell.is_number()) {
      throw std::invalid_argument("field 'dwell_seconds' must be a number");
    }
    ev.dwell_seconds = dwell.get<double>();
    const long long order = require_integer(c, "order");
    if (order < 1 || order > std::numeric_limits<int>::max()) {
      throw std::invalid_argument("click order must be >= 1");
    }
    ev.order = static_cast<int>(order);
    r.clicks.push_back(std::move(ev));
  }
  std::stable_sort(r.clicks.begin(), r.clicks.end(),
                   [](const ClickEvent& a, const ClickEvent& b) {
                     return a.order < b.order;
                   });
  if (auto reason = validate_record(r); !reason.empty()) {
    throw std::invalid_argument(reason);
  }
  return r;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SSZ
  int y, mo, d, h, mi, s;
  const bool shape_ok =
      text.size() == 20 && text[4] == '-' && text[7] == '-' &&
      (text[10] == 'T' || text[10] == 't') && text[13] == ':' &&
      text[16] == ':' && (text[19] == 'Z' || text[19] == 'z');
  if (!shape_ok || !parse_fixed_int(text, 0, 4, y) ||
      !parse_fixed_int(text, 5, 2, mo) || !parse_fixed_int(text, 8, 2, d) ||
      !parse_fixed_int(text, 11, 2, h) || !parse_fixed_int(text, 14, 2, mi) ||
      !parse_fixed_int(text, 17, 2, s)) {
    throw std::invalid_argument("bad timestamp '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw std::invalid_argument("bad timestamp '" + std::string(text) + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return Timestamp{static_cast<std::int64_t>(days) * 86400 + h * 3600 +
                   mi * 60 + s};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  std::int64_t days = ts.seconds / 86400;
  std::int64_t rem = ts.seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

std::string validate_record(const QueryRecord& record) {
  if (record.query_id.empty()) return "empty query_id";
  if (trim(record.query).empty()) return "empty query";
  if (record.ads_shown < 0) return "negative ads_shown";
  for (std::size_t i = 0; i < record.clicks.size(); ++i) {
    const ClickEvent& c = record.clicks[i];
    if (!std::isfinite(c.dwell_seconds)) return "non-finite dwell";
    if (c.dwell_seconds < 0) return "negative dwell";
    if (c.order != static_cast<int>(i) + 1) {
      return "click orders must be unique and contiguous from 1";
    }
  }
  return {};
}

ParseResult parse_log(std::istream& in) {
  ParseResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      json obj = json::parse(line);
      QueryRecord r = record_from_json(obj);
      if (!seen.insert(r.query_id).second) {
        throw std::invalid_argument("duplicate query_id '" + r.query_id + "'");
      }
      result.records.push_back(std::move(r));
    } catch (const json::exception&) {
      result.errors.push_back({lineno, "malformed line"});
    } catch (const std::exception& e) {
      result.errors.push_back({lineno, e.what()});
    }
  }
  return result;
}

ParseResult parse_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file " + path);
  return parse_log(in);
}

std::string serialize_record(const QueryRecord& record) {
  nlohmann::ordered_json obj;
  obj["query_id"] = record.query_id;
  obj["session_id"] = record.session_id;
  obj["timestamp"] = format_timestamp(record.timestamp);
  obj["query"] = record.query;
  obj["ads_shown"] = record.ads_shown;
  auto clicks = nlohmann::ordered_json::array();
  for (const ClickEvent& c : record.clicks) {
    nlohmann::ordered_json jc;
    jc["url"] = c.url;
    jc["snippet"] = c.snippet;
    jc["dwell_seconds"] = c.dwell_seconds;
    jc["order"] = c.order;
    clicks.push_back(std::move(jc));
  }
  obj["clicks"] = std::move(clicks);
  return obj.dump();
}

void write_log(std::ostream& out, std::span<const QueryRecord> records) {
  for (const QueryRecord& r : records) out << serialize_record(r) << '\n';
}

std::vector<Session> build_sessions(std::span<const QueryRecord> records) {
  std::map<std::string, std::vector<QueryRecord>> groups;
  for (const QueryRecord& r : records) groups[r.session_id].push_back(r);

  std::vector<Session> sessions;
  sessions.reserve(groups.size());
  for (auto& [id, recs] : groups) {
    std::sort(recs.begin(), recs.end(),
              [](const QueryRecord& a, const QueryRecord& b) {
                if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                return a.query_id < b.query_id;
              });
    sessions.push_back(Session{id, std::move(recs)});
  }
  std::sort(sessions.begin(), sessions.end(),
            [](const Session& a, const Session& b) {
              const Timestamp ta = a.records.front().timestamp;
              const Timestamp tb = b.records.front().timestamp;
              if (ta != tb) return ta < tb;
              return a.session_id < b.session_id;
            });
  return sessions;
}

}  // namespace prodsearch
