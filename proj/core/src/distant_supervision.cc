#include "prodsearch/distant_supervision.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "prodsearch/text.h"
#include "sampling.h"

namespace prodsearch {
namespace {

constexpr std::array<std::string_view, 4> kHeuristicNames = {
    "ProductList", "ProductAds", "ProductCategories", "AdsAndCategories"};

constexpr std::string_view kDefaultCategories[] = {
    "appliances",   "apps",          "arts",          "crafts",
    "sewing",       "automotive",    "baby",          "beauty",
    "books",        "cds",           "vinyl",         "cell phones",
    "clothing",     "shoes",         "jewelry",       "collectibles",
    "computers",    "electronics",   "garden",        "grocery",
    "handmade",     "household",     "kitchen",       "industrial",
    "kindle",       "luggage",       "movies",        "musical instruments",
    "office products", "pet supplies", "software",    "sports",
    "outdoors",     "tools",         "home improvement", "toys",
    "video games"};

constexpr std::string_view kDefaultProducts[] = {
    "iphone",  "rubik's cube", "harry potter", "playstation",    "pokemon",
    "thriller", "lipitor",     "star wars",    "toyota corolla", "super mario"};

std::string lower_trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  s = s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

bool matches_any(std::span<const std::string> tokens,
                 std::span<const std::string> entries) {
  for (const auto& entry : entries) {
    const auto phrase = normalize_words(entry);
    if (contains_phrase(tokens, phrase)) return true;
  }
  return false;
}

bool record_matches(const QueryRecord& record,
                    std::span<const std::string> entries) {
  if (entries.empty()) return false;
  if (matches_any(normalize_words(record.query), entries)) return true;
  for (const ClickEvent& c : record.clicks) {
    if (matches_any(normalize_words(url_text(c.url, true)), entries)) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(HeuristicKind kind) {
  return kHeuristicNames[static_cast<std::size_t>(kind)];
}

std::optional<HeuristicKind> parse_heuristic(std::string_view text) {
  for (std::size_t i = 0; i < kHeuristicNames.size(); ++i) {
    if (kHeuristicNames[i] == text) return static_cast<HeuristicKind>(i);
  }
  return std::nullopt;
}

std::vector<std::string> normalize_resource_list(std::span<const std::string> raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : raw) {
    std::string e = lower_trim(r);
    if (e.empty() || normalize_words(e).empty()) continue;
    if (seen.insert(e).second) out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> load_resource_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open resource list " + path);
  std::vector<std::string> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    raw.push_back(line);
  }
  return normalize_resource_list(raw);
}

ResourceLists default_resources() {
  ResourceLists res;
  for (auto c : kDefaultCategories) res.categories.emplace_back(c);
  for (auto p : kDefaultProducts) res.products.emplace_back(p);
  return res;
}

bool contains_phrase(std::span<const std::string> tokens,
                     std::span<const std::string> phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), phrase.begin(),
                     phrase.end()) != tokens.end();
}

bool apply_heuristic(const QueryRecord& record, HeuristicKind kind,
                     const ResourceLists& res) {
  switch (kind) {
    case HeuristicKind::ProductAds:
      return record.ads_shown >= 1;
    case HeuristicKind::ProductCategories:
      return record_matches(record, res.categories);
    case HeuristicKind::AdsAndCategories:
      return record.ads_shown >= 1 || record_matches(record, res.categories);
    case HeuristicKind::ProductList:
      return record_matches(record, res.products);
  }
  return false;
}

WeakLabeledSet build_weak_set(std::span<const QueryRecord> records,
                              HeuristicKind kind, const ResourceLists& res,
                              std::size_t n_pos, std::size_t n_neg,
                              std::uint64_t seed) {
  std::vector<std::string> pos, neg;
  for (const QueryRecord& r : records) {
    (apply_heuristic(r, kind, res) ? pos : neg).push_back(r.query_id);
  }
  if (n_pos > pos.size()) {
    throw std::invalid_argument("positives exhausted (" +
                                std::to_string(pos.size()) + " available)");
  }
  if (n_neg > neg.size()) {
    throw std::invalid_argument("negatives exhausted (" +
                                std::to_string(neg.size()) + " available)");
  }
  std::mt19937_64 rng(seed);
  WeakLabeledSet set;
  set.heuristic = kind;
  set.seed = seed;
  for (auto i : detail::sample_indices(pos.size(), n_pos, rng)) {
    set.positives.push_back(pos[i]);
  }
  for (auto i : detail::sample_indices(neg.size(), n_neg, rng)) {
    set.negatives.push_back(neg[i]);
  }
  return set;
}

BinaryScore score_confusion(long tp, long fp, long fn, long tn) {
  BinaryScore s{tp, fp, fn, tn};
  const long n = tp + fp + fn + tn;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0
             ? 2 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  s.accuracy = n > 0 ? static_cast<double>(tp + tn) / n : 0.0;
  return s;
}

std::vector<HeuristicScore> evaluate_heuristics(std::span<const GoldQuery> gold,
                                                const ResourceLists& res) {
  if (gold.empty()) throw std::invalid_argument("gold set is empty");
  std::vector<HeuristicScore> out;
  for (HeuristicKind kind : kAllHeuristics) {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (const GoldQuery& g : gold) {
      const bool fired = apply_heuristic(g.record, kind, res);
      if (fired && g.is_product) {
        ++tp;
      } else if (fired) {
        ++fp;
      } else if (g.is_product) {
        ++fn;
      } else {
        ++tn;
      }
    }
    out.push_back({kind, score_confusion(tp, fp, fn, tn)});
  }
  return out;
}

std::vector<GoldQuery> load_gold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gold file " + path);
  std::vector<GoldQuery> gold;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fail = [&](const std::string& why) {
      return std::runtime_error("gold file " + path + " line " + std::to_string(n) + ": " + why);
    };
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (!j.is_object() || !j.contains("is_product") || !j["is_product"].is_boolean()) {
      throw fail("expected a record with boolean is_product");
    }
    std::istringstream one(line);
    auto parsed = parse_log(one);
    if (!parsed.errors.empty()) throw fail(parsed.errors.front().message);
    gold.push_back({std::move(parsed.records.front()), j["is_product"].get<bool>()});
  }
  return gold;
}

}  // namespace prodsearch
