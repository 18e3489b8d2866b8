// Synthetic query logs with planted per-intent behavior. Product queries
// draw from product nouns, brands and category names; non-product queries
// from a disjoint topical vocabulary. Each intent has its own marker words,
// click paths, domains and snippet vocabulary, so text and behavior are both
// informative without being perfectly separating.

#include "prodsearch/syngen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "sampling.h"

namespace prodsearch {
namespace {

using Pool = std::vector<std::string_view>;

const Pool kProductNouns = {
    "laptop",     "headphones", "sneakers",  "blender",    "camera",     "tv",
    "smartwatch", "vacuum",     "mattress",  "backpack",   "drill",      "tablet",
    "monitor",    "keyboard",   "printer",   "router",     "speaker",    "jacket",
    "stroller",   "lipstick",   "earbuds",   "microwave",  "sofa",       "treadmill",
    "guitar",     "projector",  "charger",   "dishwasher", "refrigerator", "console",
    "perfume",    "sunglasses", "watch",     "phone",      "airfryer",   "thermostat"};

const Pool kBrands = {"sonix",  "veltra", "kormac", "brightel", "aurona", "zentek",
                      "lumora", "quorra", "trivex", "nordal",   "pexon",  "halvik"};

const Pool kAttributes = {"wireless", "pro",   "mini",  "portable", "4k",     "black",
                          "large",    "smart", "ultra", "compact",  "leather", "gaming"};

const Pool kCategoryPhrases = {"electronics", "shoes",     "computers",     "toys",
                               "appliances",  "beauty",    "kitchen",       "clothing",
                               "video games", "cell phones", "home improvement", "luggage",
                               "jewelry",     "automotive", "office products", "pet supplies"};

// Titles from the bundled best-seller list, occasionally standing in for the
// product noun.
const Pool kBestSellers = {"iphone", "playstation", "pokemon", "star wars", "super mario",
                           "harry potter"};
constexpr double kBestSellerRate = 0.05;

const Pool kBackground = {"new", "2019", "online", "for", "the", "with", "near", "me", "in",
                          "and", "my",   "top",    "of",  "to"};

const Pool kNonProductWords = {
    "weather",   "forecast",  "recipe",     "chicken",   "pasta",     "soup",      "news",
    "election",  "lyrics",    "song",       "translate", "meaning",   "definition",
    "population", "capital",  "history",    "calculator", "timezone", "flight",    "status",
    "traffic",   "map",       "directions", "horoscope", "quotes",    "holiday",   "school",
    "university", "jobs",     "salary",     "bank",      "hours",     "symptoms",  "stock",
    "score",     "league",    "football",   "senate",    "poem",      "biography", "tax",
    "visa",      "passport",  "rainfall",   "volcano",   "planet",    "museum",    "bus"};

const Pool kNonProductDomains = {"newsdaily.com", "weatherly.com", "recipebox.com",
                                 "lyricsworld.com", "govinfo.org", "knowpedia.org",
                                 "cityguide.net", "scoreboard.net"};

struct IntentVocab {
  Pool markers;
  Pool domains;
  Pool path_prefixes;
  Pool snippet_words;
};

const std::array<IntentVocab, kIntentLabelCount>& intent_vocab() {
  static const std::array<IntentVocab, kIntentLabelCount> v = {{
      // Comparison
      {{"vs", "compare", "comparison", "best", "review", "reviews", "ranked", "better",
        "alternatives", "rating"},
       {"reviewly.com", "gearlab.com", "ratingshub.com", "versusly.com", "shopmart.com",
        "buyhub.com", "bigbox.com", "topten.net"},
       {"compare", "best", "reviews", "versus"},
       {"tested", "winner", "pros", "cons", "verdict", "score", "comparison", "ranked",
        "performance", "value", "picks", "benchmark"}},
      // Informational
      {{"specs", "features", "dimensions", "weight", "battery", "how", "what", "size",
        "release", "material"},
       {"knowpedia.org", "specsdb.com", "infohub.net", "reviewly.com", "gearlab.com"},
       {"wiki", "specs", "guide", "about"},
       {"specifications", "released", "measures", "inches", "capacity", "designed",
        "introduced", "model", "generation", "details", "overview", "manufactured"}},
      // Navigational
      {{"official", "site", "store", "login", "account", "website", "homepage"},
       {},
       {"", "login", "store"},
       {"official", "welcome", "sign", "account", "home"}},
      // Support
      {{"fix", "broken", "reset", "not", "working", "repair", "warranty", "manual",
        "troubleshoot", "error", "replace", "update"},
       {"fixitnow.com", "helpforum.net", "repairpal.org", "answersdesk.com"},
       {"support", "help", "troubleshooting", "manuals"},
       {"steps", "problem", "solution", "restart", "firmware", "issue", "resolved",
        "settings", "instructions", "hold", "button", "factory", "thread", "replied"}},
      // Transactional
      {{"buy", "price", "deal", "deals", "cheap", "discount", "coupon", "sale", "order",
        "shipping"},
       {"shopmart.com", "buyhub.com", "bigbox.com", "dealzone.com", "cartly.com"},
       {"product", "item", "dp", "shop"},
       {"price", "cart", "shipping", "stock", "add", "free", "returns", "sale"}},
      // NotProduct
      {{},
       {},
       {"article", "page", "story", "info"},
       {}},
  }};
  return v;
}

template <typename P>
std::string_view pick(const P& pool, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
  return pool[d(rng)];
}

int uniform_int(int lo, int hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(double p, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

std::string join(const std::vector<std::string>& words, char sep) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += sep;
    out += w;
  }
  return out;
}

std::string slug(std::string s) {
  std::replace(s.begin(), s.end(), ' ', '-');
  return s;
}

struct QueryDraft {
  std::vector<std::string> words;
  std::string product;  // product noun, empty for non-product and navigational
  std::string brand;
};

QueryDraft draft_query(IntentLabel intent, const IntentProfile& prof, std::mt19937_64& rng) {
  QueryDraft q;
  const int target = uniform_int(prof.query_words_min, prof.query_words_max, rng);
  const auto& vocab = intent_vocab()[index_of(intent)];

  if (intent == IntentLabel::NotProduct) {
    while (static_cast<int>(q.words.size()) < target) {
      q.words.emplace_back(coin(0.8, rng) ? pick(kNonProductWords, rng) : pick(kBackground, rng));
    }
    return q;
  }

  q.brand = std::string(pick(kBrands, rng));
  std::vector<std::string> words;
  if (intent == IntentLabel::Navigational) {
    words.push_back(q.brand);
  } else {
    q.product = std::string(coin(kBestSellerRate, rng) ? pick(kBestSellers, rng)
                                                        : pick(kProductNouns, rng));
    words.push_back(q.product);
    if (coin(0.4, rng)) words.push_back(q.brand);
  }
  if (coin(prof.marker_rate, rng)) words.emplace_back(pick(vocab.markers, rng));
  if (intent == IntentLabel::Support && coin(prof.marker_rate, rng)) {
    words.emplace_back(pick(vocab.markers, rng));
  }
  if (coin(prof.category_rate, rng)) words.emplace_back(pick(kCategoryPhrases, rng));
  while (static_cast<int>(words.size()) < target) {
    words.emplace_back(coin(0.5, rng) ? pick(kAttributes, rng) : pick(kBackground, rng));
  }
  detail::shuffle_in_place(words, rng);
  q.words = std::move(words);
  return q;
}

std::string make_path(IntentLabel intent, const IntentProfile& prof, const QueryDraft& q,
                      std::mt19937_64& rng) {
  const auto& vocab = intent_vocab()[index_of(intent)];
  const std::string prefix(pick(vocab.path_prefixes, rng));
  std::vector<std::string> parts;
  for (const auto& w : q.words) {
    if (coin(prof.url_copy_rate, rng)) parts.push_back(slug(w));
  }
  if (parts.empty()) {
    if (intent == IntentLabel::NotProduct) {
      parts.emplace_back(pick(kNonProductWords, rng));
    } else if (intent != IntentLabel::Navigational) {
      parts.emplace_back(coin(0.5, rng) ? pick(kProductNouns, rng) : pick(kAttributes, rng));
    }
  }
  if (intent == IntentLabel::Transactional) {
    parts.push_back(std::to_string(uniform_int(1000, 9999, rng)));
  }
  std::string path = "/";
  if (!prefix.empty()) path += prefix;
  const std::string tail = join(parts, '-');
  if (!tail.empty()) path += (prefix.empty() ? "" : "/") + tail;
  return path;
}

std::string make_snippet(IntentLabel intent, const IntentProfile& prof, const QueryDraft& q,
                         std::mt19937_64& rng) {
  const int n = uniform_int(prof.snippet_words_min, prof.snippet_words_max, rng);
  const auto& vocab = intent_vocab()[index_of(intent)];
  std::vector<std::string> words;
  for (int i = 0; i < n; ++i) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (intent == IntentLabel::NotProduct) {
      words.emplace_back(u < 0.7 ? pick(kNonProductWords, rng) : pick(kBackground, rng));
    } else if (u < 0.45 && !vocab.snippet_words.empty()) {
      words.emplace_back(pick(vocab.snippet_words, rng));
    } else if (u < 0.65) {
      words.push_back(!q.product.empty() ? q.product : q.brand);
    } else if (u < 0.8) {
      words.emplace_back(pick(kAttributes, rng));
    } else {
      words.emplace_back(pick(kBackground, rng));
    }
  }
  return join(words, ' ');
}

std::vector<ClickEvent> make_clicks(IntentLabel intent, const IntentProfile& prof,
                                    const QueryDraft& q, std::mt19937_64& rng) {
  std::discrete_distribution<int> count_dist(prof.click_probs.begin(), prof.click_probs.end());
  const int n = count_dist(rng);
  const auto& vocab = intent_vocab()[index_of(intent)];
  std::lognormal_distribution<double> dwell(prof.dwell_log_mean, prof.dwell_log_sd);

  std::vector<std::string> used;
  std::vector<ClickEvent> clicks;
  for (int i = 0; i < n; ++i) {
    std::string domain;
    if (static_cast<int>(used.size()) >= prof.domain_cap) {
      domain = used[std::uniform_int_distribution<std::size_t>(0, used.size() - 1)(rng)];
    } else if (intent == IntentLabel::Navigational) {
      domain = (used.empty() || coin(0.7, rng)) ? q.brand + ".com"
                                                : std::string(pick(intent_vocab()[index_of(IntentLabel::Transactional)].domains, rng));
    } else if (intent == IntentLabel::NotProduct) {
      domain = std::string(pick(kNonProductDomains, rng));
    } else if (intent == IntentLabel::Support && coin(0.3, rng)) {
      domain = q.brand + ".com";
    } else {
      domain = std::string(pick(vocab.domains, rng));
    }
    if (std::find(used.begin(), used.end(), domain) == used.end()) used.push_back(domain);
    ClickEvent c;
    c.url = "https://www." + domain + make_path(intent, prof, q, rng);
    c.snippet = make_snippet(intent, prof, q, rng);
    c.dwell_seconds = std::round(dwell(rng) * 10.0) / 10.0;
    c.order = i + 1;
    clicks.push_back(std::move(c));
  }
  return clicks;
}

IntentProfile profile(std::vector<double> clicks, int qmin, int qmax, int cap, double dwell_mu,
                      int smin, int smax, double copy, double ads, double category) {
  IntentProfile p;
  p.click_probs = std::move(clicks);
  p.query_words_min = qmin;
  p.query_words_max = qmax;
  p.domain_cap = cap;
  p.dwell_log_mean = dwell_mu;
  p.snippet_words_min = smin;
  p.snippet_words_max = smax;
  p.url_copy_rate = copy;
  p.ads_rate = ads;
  p.category_rate = category;
  return p;
}

}  // namespace

double IntentProfile::mean_clicks() const {
  double total = 0, mean = 0;
  for (std::size_t i = 0; i < click_probs.size(); ++i) {
    total += click_probs[i];
    mean += static_cast<double>(i) * click_probs[i];
  }
  return total > 0 ? mean / total : 0.0;
}

void GeneratorConfig::validate() const {
  if (n_sessions < 1) throw std::invalid_argument("n_sessions must be >= 1");
  if (n_queries < 0) throw std::invalid_argument("n_queries must be >= 0");
  if (session_min < 1 || session_max < session_min) {
    throw std::invalid_argument("session length range must satisfy 1 <= min <= max");
  }
  double sum = 0;
  for (double p : intent_mix) {
    if (!(p >= 0)) throw std::invalid_argument("intent_mix probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("intent_mix must sum to 1 (got " + std::to_string(sum) + ")");
  }
  for (IntentLabel l : kAllIntents) {
    const auto& p = profiles[index_of(l)];
    const std::string who = " (" + std::string(to_string(l)) + ")";
    double mass = 0;
    for (double c : p.click_probs) {
      if (!(c >= 0)) throw std::invalid_argument("click_probs must be >= 0" + who);
      mass += c;
    }
    if (mass <= 0) throw std::invalid_argument("click_probs must have positive mass" + who);
    if (p.query_words_min < 1 || p.query_words_max < p.query_words_min) {
      throw std::invalid_argument("query word range invalid" + who);
    }
    if (p.snippet_words_min < 0 || p.snippet_words_max < p.snippet_words_min) {
      throw std::invalid_argument("snippet word range invalid" + who);
    }
    if (p.domain_cap < 1) throw std::invalid_argument("domain_cap must be >= 1" + who);
    if (!(p.dwell_log_sd > 0) || !std::isfinite(p.dwell_log_mean)) {
      throw std::invalid_argument("dwell distribution invalid" + who);
    }
    for (double r : {p.marker_rate, p.url_copy_rate, p.ads_rate, p.category_rate}) {
      if (!(r >= 0 && r <= 1)) throw std::invalid_argument("rates must lie in [0, 1]" + who);
    }
  }
}

GeneratorConfig default_generator_config() {
  GeneratorConfig c;
  using L = IntentLabel;
  c.intent_mix[index_of(L::Comparison)] = 0.026;
  c.intent_mix[index_of(L::Informational)] = 0.030;
  c.intent_mix[index_of(L::Navigational)] = 0.024;
  c.intent_mix[index_of(L::Support)] = 0.020;
  c.intent_mix[index_of(L::Transactional)] = 0.060;
  c.intent_mix[index_of(L::NotProduct)] = 0.840;

  //                 click-count probabilities        words  cap  dwell snippet copy  ads   cat
  c.profiles[index_of(L::Comparison)] =
      profile({0.02, 0.08, 0.2, 0.3, 0.25, 0.15}, 3, 5, 6, 3.3, 18, 30, 0.8, 0.92, 0.7);
  c.profiles[index_of(L::Informational)] =
      profile({0.04, 0.2, 0.35, 0.25, 0.16}, 3, 5, 6, 3.8, 18, 30, 0.25, 0.9, 0.7);
  c.profiles[index_of(L::Navigational)] =
      profile({0.03, 0.67, 0.3}, 1, 2, 2, 2.6, 4, 8, 0.1, 0.9, 0.3);
  c.profiles[index_of(L::Support)] =
      profile({0.02, 0.15, 0.3, 0.3, 0.23}, 5, 8, 6, 4.0, 20, 34, 0.85, 0.88, 0.6);
  c.profiles[index_of(L::Transactional)] =
      profile({0.04, 0.8, 0.12, 0.04}, 2, 4, 6, 3.6, 5, 10, 0.25, 0.95, 0.7);
  c.profiles[index_of(L::NotProduct)] =
      profile({0.15, 0.5, 0.25, 0.1}, 2, 5, 6, 3.2, 8, 20, 0.5, 0.004, 0.0);
  c.profiles[index_of(L::NotProduct)].marker_rate = 0.0;
  return c;
}

GeneratorConfig product_only_config() {
  GeneratorConfig c = default_generator_config();
  double product_mass = 0;
  for (IntentLabel l : kProductIntents) product_mass += c.intent_mix[index_of(l)];
  for (IntentLabel l : kProductIntents) c.intent_mix[index_of(l)] /= product_mass;
  c.intent_mix[index_of(IntentLabel::NotProduct)] = 0.0;
  return c;
}

GeneratorConfig generator_config_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("generator config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("generator config must be an object");
  GeneratorConfig c =
      j.value("product_only", false) ? product_only_config() : default_generator_config();
  try {
    c.n_sessions = j.value("n_sessions", c.n_sessions);
    c.n_queries = j.value("n_queries", c.n_queries);
    c.session_min = j.value("session_min", c.session_min);
    c.session_max = j.value("session_max", c.session_max);
    c.seed = j.value("seed", c.seed);
    if (j.contains("intent_mix")) {
      c.intent_mix.fill(0.0);
      for (const auto& [name, p] : j["intent_mix"].items()) {
        const auto l = parse_intent(name);
        if (!l) throw std::invalid_argument("unknown intent in intent_mix: " + name);
        c.intent_mix[index_of(*l)] = p.get<double>();
      }
    }
    if (j.contains("profiles")) {
      for (const auto& [name, o] : j["profiles"].items()) {
        const auto l = parse_intent(name);
        if (!l) throw std::invalid_argument("unknown intent in profiles: " + name);
        auto& p = c.profiles[index_of(*l)];
        p.click_probs = o.value("click_probs", p.click_probs);
        p.query_words_min = o.value("query_words_min", p.query_words_min);
        p.query_words_max = o.value("query_words_max", p.query_words_max);
        p.domain_cap = o.value("domain_cap", p.domain_cap);
        p.dwell_log_mean = o.value("dwell_log_mean", p.dwell_log_mean);
        p.dwell_log_sd = o.value("dwell_log_sd", p.dwell_log_sd);
        p.snippet_words_min = o.value("snippet_words_min", p.snippet_words_min);
        p.snippet_words_max = o.value("snippet_words_max", p.snippet_words_max);
        p.marker_rate = o.value("marker_rate", p.marker_rate);
        p.url_copy_rate = o.value("url_copy_rate", p.url_copy_rate);
        p.ads_rate = o.value("ads_rate", p.ads_rate);
        p.category_rate = o.value("category_rate", p.category_rate);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("generator config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string generator_config_to_json(const GeneratorConfig& c) {
  nlohmann::ordered_json j;
  j["n_sessions"] = c.n_sessions;
  j["n_queries"] = c.n_queries;
  j["session_min"] = c.session_min;
  j["session_max"] = c.session_max;
  j["seed"] = c.seed;
  nlohmann::ordered_json mix = nlohmann::ordered_json::object();
  nlohmann::ordered_json profiles = nlohmann::ordered_json::object();
  for (IntentLabel l : kAllIntents) {
    const std::string name(to_string(l));
    mix[name] = c.intent_mix[index_of(l)];
    const auto& p = c.profiles[index_of(l)];
    profiles[name] = {{"click_probs", p.click_probs},
                      {"query_words_min", p.query_words_min},
                      {"query_words_max", p.query_words_max},
                      {"domain_cap", p.domain_cap},
                      {"dwell_log_mean", p.dwell_log_mean},
                      {"dwell_log_sd", p.dwell_log_sd},
                      {"snippet_words_min", p.snippet_words_min},
                      {"snippet_words_max", p.snippet_words_max},
                      {"marker_rate", p.marker_rate},
                      {"url_copy_rate", p.url_copy_rate},
                      {"ads_rate", p.ads_rate},
                      {"category_rate", p.category_rate}};
  }
  j["intent_mix"] = mix;
  j["profiles"] = profiles;
  return j.dump(2);
}

GeneratedLog generate(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::discrete_distribution<int> intent_dist(config.intent_mix.begin(), config.intent_mix.end());
  // 2019-09-01T00:00:00Z, spread over one week.
  constexpr std::int64_t kStart = 1567296000;
  constexpr std::int64_t kWeek = 7 * 24 * 3600;

  GeneratedLog out;
  const auto done = [&] {
    return config.n_queries > 0 && static_cast<int>(out.records.size()) >= config.n_queries;
  };
  for (int s = 0; (config.n_queries > 0 || s < config.n_sessions) && !done(); ++s) {
    char sid[32];
    std::snprintf(sid, sizeof sid, "s%06d", s + 1);
    std::int64_t t = kStart + std::uniform_int_distribution<std::int64_t>(0, kWeek)(rng);
    const int len = uniform_int(config.session_min, config.session_max, rng);
    for (int k = 0; k < len && !done(); ++k) {
      const auto intent = static_cast<IntentLabel>(intent_dist(rng));
      const auto& prof = config.profiles[index_of(intent)];
      const QueryDraft q = draft_query(intent, prof, rng);

      QueryRecord r;
      char qid[32];
      std::snprintf(qid, sizeof qid, "q%07zu", out.records.size() + 1);
      r.query_id = qid;
      r.session_id = sid;
      r.timestamp = Timestamp{t};
      r.query = join(q.words, ' ');
      r.ads_shown = coin(prof.ads_rate, rng) ? uniform_int(1, 4, rng) : 0;
      r.clicks = make_clicks(intent, prof, q, rng);
      t += uniform_int(20, 600, rng);

      out.truth.push_back({r.query_id, intent});
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

void write_truth(std::ostream& out, const std::vector<TruthLabel>& truth) {
  for (const auto& t : truth) out << t.query_id << '\t' << to_string(t.intent) << '\n';
}

std::vector<TruthLabel> read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open truth file " + path);
  std::vector<TruthLabel> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const auto label = tab == std::string::npos ? std::nullopt
                                                : parse_intent(std::string_view(line).substr(tab + 1));
    if (!label) {
      throw std::runtime_error("truth file " + path + " line " + std::to_string(n) +
                               ": expected query_id<TAB>label");
    }
    out.push_back({line.substr(0, tab), *label});
  }
  return out;
}

}  // namespace prodsearch
