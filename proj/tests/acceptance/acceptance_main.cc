// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "prodsearch/analysis.h"
#include "prodsearch/annotation.h"
#include "prodsearch/distant_supervision.h"
#include "prodsearch/learners.h"
#include "prodsearch/pipeline.h"
#include "prodsearch/text.h"
#include "prodsearch/topics.h"

namespace prodsearch {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

json read_report(const std::string& out_dir, const std::string& stage) {
  return json::parse(read_file(out_dir + "/reports/" + stage + ".json"));
}

// ------------------------------------------------------------ heuristics

Outcome heuristic_oracle() {
  const auto gold = load_gold(std::string(PRODSEARCH_FIXTURE_DIR) + "/gold_40.jsonl");
  const ResourceLists res{
      load_resource_list(std::string(PRODSEARCH_DATA_DIR) + "/categories.txt"),
      load_resource_list(std::string(PRODSEARCH_DATA_DIR) + "/products.txt")};
  // Hand-tallied (tp, fp, fn, tn) per heuristic.
  const std::map<HeuristicKind, std::array<long, 4>> want = {
      {HeuristicKind::ProductList, {4, 2, 17, 17}},
      {HeuristicKind::ProductAds, {13, 3, 8, 16}},
      {HeuristicKind::ProductCategories, {10, 2, 11, 17}},
      {HeuristicKind::AdsAndCategories, {17, 5, 4, 14}}};
  const auto scores = evaluate_heuristics(gold, res);
  bool ok = gold.size() == 40 && scores.size() == 4;
  std::string detail;
  for (const auto& hs : scores) {
    const auto& w = want.at(hs.kind);
    const BinaryScore& s = hs.score;
    const double p = static_cast<double>(w[0]) / (w[0] + w[1]);
    const double r = static_cast<double>(w[0]) / (w[0] + w[2]);
    const bool match = s.tp == w[0] && s.fp == w[1] && s.fn == w[2] && s.tn == w[3] &&
                       s.precision == p && s.recall == r && s.f1 == 2 * p * r / (p + r) &&
                       s.accuracy == static_cast<double>(w[0] + w[3]) / 40.0;
    ok = ok && match;
    detail += std::string(to_string(hs.kind)) + (match ? " ok " : " MISMATCH ");
  }
  return {ok, detail};
}

// ------------------------------------------------------------ classifiers

Outcome product_classifier(const std::string& scratch) {
  PipelineConfig c;
  c.out_dir = scratch + "/product";
  c.generator.n_queries = 10000;
  c.product_models = {ModelKind::LinearSVM, ModelKind::MLP};
  std::ostringstream log;
  for (const char* s : {"generate", "weak-label", "build-vocab", "train-embeddings",
                        "train-product"}) {
    run_stage(s, c, log);
  }
  const json res = read_report(c.out_dir, "train-product")["results"];
  const double baseline = res["majority_baseline"].get<double>();
  bool ok = true;
  std::string detail = "baseline " + fmt(baseline, 1);
  for (const char* m : {"LinearSVM", "MLP"}) {
    const double acc = res["cross_validation"][m]["accuracy"].get<double>();
    ok = ok && acc >= 95.0 && acc - baseline >= 40.0;
    detail += std::string("; ") + m + " " + fmt(acc, 2) + "%";
  }
  return {ok, detail};
}

Outcome intent_classifier(const std::string& scratch) {
  PipelineConfig c;
  c.out_dir = scratch + "/intent";
  c.generator = generator_config_from_json(R"({"product_only": true, "n_queries": 5000})");
  c.features_scope = "all";
  c.intent_labels = "truth";
  c.intent_models = {ModelKind::LinearSVM};
  std::ostringstream log;
  for (const char* s : {"generate", "build-vocab", "train-embeddings", "features", "train-intent"}) {
    run_stage(s, c, log);
  }
  const json res = read_report(c.out_dir, "train-intent")["results"];
  const json cv = res["cross_validation"]["LinearSVM"];
  const double macro = cv["macro_f1"].get<double>() / 100.0;
  bool ok = macro >= 0.85 && res["examples"].get<long>() == 5000 && cv["per_class"].size() == 5;
  std::string detail = "macro-F1 " + fmt(macro) + "; recall";
  for (const auto& [name, m] : cv["per_class"].items()) {
    const double recall = m["recall"].get<double>() / 100.0;
    ok = ok && recall >= 0.70;
    detail += " " + name + "=" + fmt(recall, 3);
  }
  return {ok, detail};
}

// ------------------------------------------------------------ LDA

Outcome lda() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> word(0, 9);
  std::vector<TopicDocument> docs;
  for (int d = 0; d < 40; ++d) {
    TopicDocument doc{"d" + std::to_string(d), {}};
    for (int i = 0; i < 25; ++i) doc.token_ids.push_back(word(rng) + (d < 20 ? 0 : 10));
    docs.push_back(doc);
  }
  LdaParams p;
  p.num_topics = 2;
  p.iterations = 200;
  p.seed = 7;
  LdaParams init = p;
  init.iterations = 0;
  const double initial_ll = log_likelihood(fit_lda(docs, 20, init));

  int violations = 0;
  const auto check = [&](int, const TopicModel& m) {
    std::vector<long> tw(2 * 20, 0), tt(2, 0);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      std::vector<long> dt(2, 0);
      for (std::size_t i = 0; i < docs[d].token_ids.size(); ++i) {
        const int z = m.assignments[d][i];
        ++tw[z * 20 + docs[d].token_ids[i]];
        ++tt[z];
        ++dt[z];
      }
      if (dt != m.doc_topic[d]) ++violations;
    }
    if (tw != m.topic_word || tt != m.topic_totals) ++violations;
  };
  const TopicModel m = fit_lda(docs, 20, p, check);
  long agree = 0, total = 0;
  for (int z = 0; z < 2; ++z) {
    long low = 0, high = 0;
    for (int w = 0; w < 20; ++w) (w < 10 ? low : high) += m.word_count(z, w);
    agree += std::max(low, high);
    total += low + high;
  }
  const double purity = static_cast<double>(agree) / total;
  const double final_ll = log_likelihood(m);
  return {violations == 0 && purity >= 0.9 && final_ll > initial_ll,
          "conservation violations " + std::to_string(violations) + "; purity " + fmt(purity) +
              "; log-likelihood " + fmt(initial_ll, 1) + " -> " + fmt(final_ll, 1)};
}

// ------------------------------------------------------------ MLP

Outcome mlp_gradient() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0, 1);
  Matrix x(5, 6);
  for (double& v : x.data()) v = g(rng);
  const std::vector<int> y = {0, 2, 1, 2, 0};
  MlpParams p = mlp::init(6, 8, 3, 5);
  MlpParams grad;
  mlp::loss_and_gradient(p, x, y, &grad);
  std::vector<std::pair<double*, double>> entries;
  const auto add = [&](std::vector<double>& v, const std::vector<double>& gv) {
    for (std::size_t i = 0; i < v.size(); ++i) entries.emplace_back(&v[i], gv[i]);
  };
  add(p.w1.data(), grad.w1.data());
  add(p.b1, grad.b1);
  add(p.w2.data(), grad.w2.data());
  add(p.b2, grad.b2);
  const double h = 1e-6;
  double diff = 0, na = 0, nn = 0;
  for (auto& [ptr, analytic] : entries) {
    const double saved = *ptr;
    *ptr = saved + h;
    const double up = mlp::loss_and_gradient(p, x, y, nullptr);
    *ptr = saved - h;
    const double down = mlp::loss_and_gradient(p, x, y, nullptr);
    *ptr = saved;
    const double numeric = (up - down) / (2 * h);
    diff += (numeric - analytic) * (numeric - analytic);
    na += analytic * analytic;
    nn += numeric * numeric;
  }
  const double rel = std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nn));
  std::ostringstream s;
  s << "relative error " << rel << " over " << entries.size() << " parameters";
  return {rel < 1e-4, s.str()};
}

// ------------------------------------------------------------ kappa

Outcome kappa() {
  const double perfect = fleiss_kappa({{3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {3, 0, 0}}, 3);
  const double split = fleiss_kappa({{1, 1}, {1, 1}}, 2);
  const std::vector<std::vector<int>> t = {{4, 0, 0}, {2, 2, 0}, {1, 1, 2}, {0, 3, 1}};
  const double got = fleiss_kappa(t, 4);
  const double want = oracle::fleiss_by_pairs(t, 4);
  std::ostringstream s;
  s.precision(12);
  s << "perfect " << perfect << "; split " << split << "; 4x3 " << got << " vs oracle " << want;
  return {perfect == 1.0 && split == -1.0 && std::abs(got - want) <= 1e-9, s.str()};
}

// ------------------------------------------------------------ metrics

LabeledRecord with_dwell(IntentLabel intent, double dwell, int id) {
  LabeledRecord lr;
  lr.intent = intent;
  lr.record.query_id = "m" + std::to_string(id);
  lr.record.session_id = "s" + std::to_string(id);
  lr.record.query = "x";
  lr.record.clicks = {{"https://a.com/", "", dwell, 1}};
  return lr;
}

Outcome metrics() {
  std::vector<LabeledRecord> fixture;
  int id = 0;
  for (double d : {45.0, 10.0, 31.0, 30.0}) fixture.push_back(with_dwell(IntentLabel::Support, d, id++));
  const double success = success_rate(fixture).at(IntentLabel::Support);

  const std::vector<LabeledSession> sessions = {
      {"s", {IntentLabel::Comparison, IntentLabel::Transactional}}};
  const auto co = cooccurrence(sessions);
  const double tc = co[index_of(IntentLabel::Transactional)][index_of(IntentLabel::Comparison)];
  const double ct = co[index_of(IntentLabel::Comparison)][index_of(IntentLabel::Transactional)];

  // Popularity and effort over a random labeling.
  std::mt19937_64 rng(5);
  std::vector<LabeledRecord> random_records;
  std::vector<IntentLabel> labels;
  for (int i = 0; i < 997; ++i) {
    const IntentLabel l = kAllIntents[rng() % kIntentLabelCount];
    labels.push_back(l);
    random_records.push_back(with_dwell(l, 1.0 + static_cast<double>(rng() % 120), id++));
  }
  double pop_sum = 0;
  for (const auto& [k, v] : popularity(labels)) pop_sum += v;
  const double effort_c = effort(random_records).at(IntentLabel::Comparison);

  const bool ok = std::abs(pop_sum - 100.0) <= 1e-6 && effort_c == 1.0 && success == 50.0 &&
                  tc == 100.0 && ct == 0.0;
  return {ok, "popularity sum " + fmt(pop_sum, 9) + "; effort[Comparison] " + fmt(effort_c, 1) +
                  "; success " + fmt(success, 1) + "%; (T,C)=" + fmt(tc, 1) +
                  " (C,T)=" + fmt(ct, 1)};
}

// ------------------------------------------------------------ determinism

Outcome determinism(const std::string& scratch) {
  const auto config = [&](const std::string& dir) {
    PipelineConfig c;
    c.out_dir = dir;
    c.generator.n_queries = 3000;
    c.weak_max = 250;
    c.vocab_size = 2000;
    c.embedding.dim = 16;
    c.topics = 10;
    c.lda_iterations = 100;
    c.per_cluster = 20;
    c.hyper.mlp_epochs = 50;
    c.hyper.forest_trees = 30;
    return c;
  };
  std::ostringstream log;
  const std::string a = scratch + "/det_a", b = scratch + "/det_b";
  run_all(config(a), log);
  run_all(config(b), log);
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    ++compared;
    if (!fs::exists(fs::path(b) / rel) ||
        read_file(e.path().string()) != read_file((fs::path(b) / rel).string())) {
      ++differing;
    }
  }
  const bool has_reports = fs::exists(a + "/reports/analyze.json");
  return {has_reports && compared > 0 && differing == 0,
          std::to_string(compared) + " files compared, " + std::to_string(differing) +
              " differ"};
}

// ------------------------------------------------------------ tokenizer

Outcome tokenizer() {
  std::mt19937_64 rng(20190901);
  const std::string alphabet = "abcdef";
  std::uniform_int_distribution<int> letter(0, 5), len(2, 5), wlen(1, 14);
  int failures = 0, round_trips = 0, unknowns = 0;
  for (int c = 0; c < 1000; ++c) {
    std::set<std::string> pieces;
    const bool complete = c % 5 != 0;
    for (char ch : alphabet) {
      if (complete || letter(rng) % 2) {
        pieces.insert(std::string(1, ch));
        pieces.insert("##" + std::string(1, ch));
      }
    }
    for (int k = 0; k < 12; ++k) {
      std::string p;
      for (int i = len(rng); i > 0; --i) p += alphabet[letter(rng)];
      pieces.insert(k % 2 ? "##" + p : p);
    }
    std::string word;
    for (int i = wlen(rng); i > 0; --i) word += alphabet[letter(rng)];
    const Vocab vocab(std::vector<std::string>(pieces.begin(), pieces.end()));
    const auto got = tokenize_word(word, vocab);
    const auto want = oracle::greedy_segment(word, pieces);
    if (want.empty()) {
      ++unknowns;
      failures += got != std::vector<std::string>{std::string(kUnknownPiece)};
    } else {
      ++round_trips;
      failures += got != want || oracle::join_pieces(got) != word;
    }
  }
  return {failures == 0, std::to_string(round_trips) + " round-trips, " +
                             std::to_string(unknowns) + " unknown words, " +
                             std::to_string(failures) + " failures"};
}

struct Criterion {
  std::string name;
  double limit_seconds;  // <= 0: no runtime bound
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace prodsearch

int main() {
  using namespace prodsearch;
  oracle::TempDir scratch("acceptance");
  const std::string dir = scratch.str();
  const std::vector<Criterion> criteria = {
      {"heuristic-evaluation-oracle", 1.0, heuristic_oracle},
      {"product-classifier", 300.0, [&] { return product_classifier(dir); }},
      {"intent-classifier", 300.0, [&] { return intent_classifier(dir); }},
      {"lda", 30.0, lda},
      {"mlp-gradient-check", 0, mlp_gradient},
      {"fleiss-kappa", 0, kappa},
      {"metrics", 0, metrics},
      {"determinism", 0, [&] { return determinism(dir); }},
      {"tokenizer-properties", 0, tokenizer},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.limit_seconds, 0) + " s limit";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " ("
              << fmt(secs, 2) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
