#include "prodsearch/analysis.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace prodsearch {
namespace {

constexpr double kSuccessDwellSeconds = 30.0;

double total_dwell(const QueryRecord& r) {
  double s = 0;
  for (const auto& c : r.clicks) s += c.dwell_seconds;
  return s;
}

}  // namespace

IntentMap success_rate(std::span<const LabeledRecord> records) {
  std::map<IntentLabel, std::pair<long, long>> tally;  // successes, total
  for (const auto& lr : records) {
    if (!is_product_intent(lr.intent)) continue;
    auto& [ok, n] = tally[lr.intent];
    ++n;
    const auto& clicks = lr.record.clicks;
    if (clicks.empty()) continue;
    const auto last = std::max_element(clicks.begin(), clicks.end(),
                                       [](const auto& a, const auto& b) { return a.order < b.order; });
    if (last->dwell_seconds > kSuccessDwellSeconds) ++ok;
  }
  IntentMap out;
  for (const auto& [intent, t] : tally) {
    out[intent] = 100.0 * static_cast<double>(t.first) / static_cast<double>(t.second);
  }
  return out;
}

IntentMap popularity(std::span<const IntentLabel> labels) {
  std::map<IntentLabel, long> counts;
  long total = 0;
  for (IntentLabel l : labels) {
    if (!is_product_intent(l)) continue;
    ++counts[l];
    ++total;
  }
  if (total == 0) throw std::invalid_argument("no product-intent labels");
  IntentMap out;
  for (const auto& [intent, n] : counts) {
    out[intent] = 100.0 * static_cast<double>(n) / static_cast<double>(total);
  }
  return out;
}

IntentMap effort(std::span<const LabeledRecord> records) {
  std::map<IntentLabel, std::pair<double, long>> sums;
  for (const auto& lr : records) {
    if (!is_product_intent(lr.intent)) continue;
    auto& [s, n] = sums[lr.intent];
    s += total_dwell(lr.record);
    ++n;
  }
  const auto base = sums.find(IntentLabel::Comparison);
  if (base == sums.end() || base->second.first <= 0) {
    throw std::invalid_argument("no comparison baseline");
  }
  const double base_mean = base->second.first / static_cast<double>(base->second.second);
  IntentMap out;
  for (const auto& [intent, sn] : sums) {
    out[intent] = intent == IntentLabel::Comparison
                      ? 1.0
                      : sn.first / static_cast<double>(sn.second) / base_mean;
  }
  return out;
}

CooccurrenceMatrix cooccurrence(std::span<const LabeledSession> sessions) {
  std::array<std::array<long, kProductIntentCount>, kProductIntentCount> hits{};
  std::array<long, kProductIntentCount> subjects{};
  for (const auto& s : sessions) {
    std::array<bool, kProductIntentCount> seen{};
    for (IntentLabel l : s.intents) {
      if (!is_product_intent(l)) continue;
      const int a = index_of(l);
      ++subjects[a];
      for (int b = 0; b < kProductIntentCount; ++b) {
        if (seen[b]) ++hits[a][b];
      }
      seen[a] = true;
    }
  }
  CooccurrenceMatrix m{};
  for (int a = 0; a < kProductIntentCount; ++a) {
    if (subjects[a] == 0) continue;
    for (int b = 0; b < kProductIntentCount; ++b) {
      m[a][b] = 100.0 * static_cast<double>(hits[a][b]) / static_cast<double>(subjects[a]);
    }
  }
  return m;
}

std::vector<LabeledSession> label_sessions(std::span<const LabeledRecord> records) {
  std::vector<QueryRecord> plain;
  std::map<std::string, IntentLabel> by_id;
  plain.reserve(records.size());
  for (const auto& lr : records) {
    plain.push_back(lr.record);
    by_id[lr.record.query_id] = lr.intent;
  }
  std::vector<LabeledSession> out;
  for (const auto& s : build_sessions(plain)) {
    LabeledSession ls{s.session_id, {}};
    for (const auto& r : s.records) ls.intents.push_back(by_id.at(r.query_id));
    out.push_back(std::move(ls));
  }
  return out;
}

MetricsReport analyze(std::span<const LabeledRecord> records) {
  MetricsReport rep;
  std::vector<IntentLabel> labels;
  for (const auto& lr : records) {
    labels.push_back(lr.intent);
    ++rep.counts[lr.intent];
  }
  rep.success_rate = success_rate(records);
  rep.popularity = popularity(labels);
  try {
    rep.effort = effort(records);
  } catch (const std::invalid_argument& e) {
    rep.effort_error = e.what();
  }
  rep.cooccurrence = cooccurrence(label_sessions(records));
  return rep;
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  const auto intent_map = [](const IntentMap& m) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m) o[std::string(to_string(k))] = v;
    return o;
  };
  j["success_rate"] = intent_map(r.success_rate);
  j["popularity"] = intent_map(r.popularity);
  if (r.effort) {
    j["effort"] = intent_map(*r.effort);
  } else {
    j["effort"] = nullptr;
    j["effort_error"] = r.effort_error;
  }
  nlohmann::ordered_json co = nlohmann::ordered_json::object();
  for (IntentLabel a : kProductIntents) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (IntentLabel b : kProductIntents) {
      row[std::string(to_string(b))] = r.cooccurrence[index_of(a)][index_of(b)];
    }
    co[std::string(to_string(a))] = row;
  }
  j["cooccurrence"] = co;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.counts) counts[std::string(to_string(k))] = v;
  j["counts"] = counts;
  return j.dump(2);
}

std::string metrics_table_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "Intent,Success Rate,Popularity,Estimated Effort,Count\n";
  const auto cell = [](const IntentMap& m, IntentLabel l) {
    const auto it = m.find(l);
    return it == m.end() ? std::string() : std::to_string(it->second);
  };
  for (IntentLabel l : kProductIntents) {
    const auto c = r.counts.find(l);
    out << to_string(l) << ',' << cell(r.success_rate, l) << ',' << cell(r.popularity, l)
        << ',' << (r.effort ? cell(*r.effort, l) : std::string()) << ','
        << (c == r.counts.end() ? 0 : c->second) << '\n';
  }
  return out.str();
}

std::string cooccurrence_csv(const CooccurrenceMatrix& m) {
  std::ostringstream out;
  out << "current\\preceding";
  for (IntentLabel b : kProductIntents) out << ',' << to_string(b);
  out << '\n';
  for (IntentLabel a : kProductIntents) {
    out << to_string(a);
    for (IntentLabel b : kProductIntents) out << ',' << std::to_string(m[index_of(a)][index_of(b)]);
    out << '\n';
  }
  return out.str();
}

}  // namespace prodsearch
