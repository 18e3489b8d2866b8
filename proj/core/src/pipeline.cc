// Stage runner. Each stage declares its inputs, is skipped when its previous
// report carries the same fingerprint (config hash, seeds, input hashes) and
// its outputs are intact, and otherwise writes its outputs to temporaries that
// are renamed into place only after the stage succeeds.

#include "prodsearch/pipeline.h"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prodsearch/analysis.h"
#include "prodsearch/annotation.h"
#include "prodsearch/distant_supervision.h"
#include "prodsearch/intent_features.h"
#include "prodsearch/topics.h"

namespace prodsearch {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// 2019-09-08T00:00:00Z; simulated annotation events are stamped from here.
constexpr std::int64_t kSimulatedLabelEpoch = 1567900800;

struct Paths {
  std::string out, log, truth, labels;
  explicit Paths(const PipelineConfig& c)
      : out(c.out_dir),
        log(c.log_path.empty() ? (fs::path(c.out_dir) / "log.jsonl").string() : c.log_path),
        truth(c.truth_path.empty() ? (fs::path(c.out_dir) / "truth.tsv").string() : c.truth_path),
        labels(c.labels_path.empty() ? (fs::path(c.out_dir) / "labels.jsonl").string()
                                     : c.labels_path) {}
  std::string at(const std::string& name) const { return (fs::path(out) / name).string(); }
};

class Stage {
 public:
  Stage(std::string name, const PipelineConfig& cfg, std::vector<std::string> inputs,
        std::ostream& log)
      : name_(std::move(name)), cfg_(cfg), paths_(cfg), log_(log), inputs_(std::move(inputs)) {
    const auto& names = stage_names();
    const auto idx = std::find(names.begin(), names.end(), name_) - names.begin();
    seed_ = cfg.seed * 100 + static_cast<std::uint64_t>(idx) + 1;
  }

  const PipelineConfig& cfg() const { return cfg_; }
  const Paths& paths() const { return paths_; }
  std::uint64_t seed() const { return seed_; }
  std::ostream& log() { return log_; }
  ordered_json& results() { return results_; }
  [[noreturn]] void fail(const std::string& msg) const { throw StageError(name_, msg); }

  /// An input declared by stage_inputs.
  const std::string& need(const std::string& path) {
    if (std::find(inputs_.begin(), inputs_.end(), path) == inputs_.end()) {
      fail("undeclared input " + path);
    }
    return path;
  }

  void check_inputs() const {
    for (const auto& in : inputs_) {
      if (!fs::is_regular_file(in)) fail("missing input " + in);
    }
  }

  /// Temporary path for an output named relative to out_dir (or absolute).
  std::string output(const std::string& path) {
    const std::string tmp = path + ".partial";
    if (fs::path(tmp).has_parent_path()) fs::create_directories(fs::path(tmp).parent_path());
    outputs_.push_back(path);
    return tmp;
  }
  void write(const std::string& path, std::string_view content) {
    const std::string tmp = output(path);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail("failed writing " + tmp);
  }

  std::string report_path() const { return paths_.at("reports/" + name_ + ".json"); }

  std::string fingerprint() const {
    std::uint64_t h = fnv1a64(name_);
    h = fnv1a64(tool_version(), h);
    h = fnv1a64(config_hash(cfg_), h);
    h = fnv1a64(std::to_string(seed_), h);
    for (const auto& in : inputs_) {
      h = fnv1a64(display(in), h);
      h = fnv1a64(hash_file(in), h);
    }
    return hex64(h);
  }

  bool up_to_date() const {
    const std::string rp = report_path();
    if (!fs::is_regular_file(rp)) return false;
    try {
      const auto j = nlohmann::json::parse(read_file(rp));
      if (j.at("fingerprint").get<std::string>() != fingerprint()) return false;
      for (const auto& o : j.at("outputs")) {
        const std::string p = resolve(o.at("name").get<std::string>());
        if (!fs::is_regular_file(p) || hash_file(p) != o.at("hash").get<std::string>()) {
          return false;
        }
      }
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }

  void abandon() {
    for (const auto& o : outputs_) {
      std::error_code ec;
      fs::remove(o + ".partial", ec);
    }
  }

  std::string commit() {
    for (const auto& o : outputs_) fs::rename(o + ".partial", o);
    ordered_json r;
    r["stage"] = name_;
    r["tool_version"] = std::string(tool_version());
    r["config_hash"] = config_hash(cfg_);
    r["fingerprint"] = fingerprint();
    r["seeds"] = {{"base", cfg_.seed}, {"stage", seed_}};
    auto ins = ordered_json::array();
    for (const auto& in : inputs_) ins.push_back({{"name", display(in)}, {"hash", hash_file(in)}});
    auto outs = ordered_json::array();
    for (const auto& o : outputs_) outs.push_back({{"name", display(o)}, {"hash", hash_file(o)}});
    r["inputs"] = ins;
    r["outputs"] = outs;
    r["results"] = results_;
    const std::string rp = report_path();
    write_file_atomic(rp, r.dump(2) + "\n");
    return rp;
  }

 private:
  // Names inside out_dir are reported relative to it so reports do not depend
  // on where the run directory lives.
  std::string display(const std::string& path) const {
    const auto rel = fs::path(path).lexically_relative(paths_.out);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return path;
  }
  std::string resolve(const std::string& name) const {
    const std::string inside = paths_.at(name);
    return fs::path(name).is_relative() && fs::exists(inside) ? inside : name;
  }

  std::string name_;
  const PipelineConfig& cfg_;
  Paths paths_;
  std::ostream& log_;
  std::vector<std::string> inputs_;
  std::uint64_t seed_ = 0;
  std::vector<std::string> outputs_;
  ordered_json results_ = ordered_json::object();
};

// ---- shared loaders --------------------------------------------------------

std::vector<QueryRecord> load_records(Stage& s) {
  auto parsed = parse_log_file(s.need(s.paths().log));
  if (!parsed.errors.empty()) {
    s.log() << s.paths().log << ": skipped " << parsed.errors.size() << " malformed line(s); first at line "
            << parsed.errors.front().line << ": " << parsed.errors.front().message << '\n';
  }
  if (parsed.records.empty()) s.fail("no valid records in " + s.paths().log);
  s.results()["log_records"] = parsed.records.size();
  s.results()["log_errors"] = parsed.errors.size();
  return std::move(parsed.records);
}

ResourceLists load_resources(Stage& s) {
  ResourceLists res = default_resources();
  if (!s.cfg().categories_path.empty()) res.categories = load_resource_list(s.need(s.cfg().categories_path));
  if (!s.cfg().products_path.empty()) res.products = load_resource_list(s.need(s.cfg().products_path));
  return res;
}

std::vector<std::pair<std::string, std::string>> read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + " line " + std::to_string(n) + ": expected two tab-separated fields");
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

Vocab load_vocab(Stage& s) { return Vocab::load(s.need(s.paths().at("vocab.txt"))); }

EmbeddingTable load_table(Stage& s) {
  return load_embeddings(s.need(s.paths().at("embeddings.txt")), s.cfg().embedding.dim);
}

std::set<std::string> product_ids(Stage& s) {
  std::set<std::string> ids;
  for (const auto& [id, v] : read_tsv(s.need(s.paths().at("product_predictions.tsv")))) {
    if (v == "1") ids.insert(id);
  }
  return ids;
}

std::map<std::string, IntentLabel> label_map(const std::string& path) {
  std::map<std::string, IntentLabel> out;
  for (const auto& t : read_truth(path)) out[t.query_id] = t.intent;
  return out;
}

ordered_json report_json(const EvaluationReport& r) {
  ordered_json j;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1();
  j["folds"] = r.folds;
  j["examples"] = r.total();
  ordered_json per = ordered_json::object();
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    per[r.class_names[c]] = {{"precision", r.per_class[c].precision},
                             {"recall", r.per_class[c].recall},
                             {"f1", r.per_class[c].f1}};
  }
  j["per_class"] = per;
  j["confusion"] = r.confusion;
  return j;
}

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Matrix x;
};

FeatureTable read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  FeatureTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
  std::stringstream header(line);
  std::string cell;
  std::getline(header, cell, ',');
  while (std::getline(header, cell, ',')) t.columns.push_back(cell);
  t.x = Matrix(0, t.columns.size());
  std::vector<double> row;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::getline(ss, cell, ',');
    t.ids.push_back(cell);
    row.clear();
    while (std::getline(ss, cell, ',')) {
      double v = 0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw std::runtime_error(path + " line " + std::to_string(n) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != t.columns.size()) {
      throw std::runtime_error(path + " line " + std::to_string(n) + ": wrong column count");
    }
    t.x.append_row(row);
  }
  return t;
}

// ---- stages ----------------------------------------------------------------

void stage_generate(Stage& s) {
  GeneratorConfig g = s.cfg().generator;
  g.seed = s.seed();
  const GeneratedLog gen = generate(g);
  std::ostringstream log, truth;
  write_log(log, gen.records);
  write_truth(truth, gen.truth);
  s.write(s.paths().log, log.str());
  s.write(s.paths().truth, truth.str());
  std::map<std::string, long> counts;
  for (const auto& t : gen.truth) ++counts[std::string(to_string(t.intent))];
  s.results()["records"] = gen.records.size();
  s.results()["truth_counts"] = counts;
}

void stage_evaluate_heuristics(Stage& s) {
  std::vector<GoldQuery> gold;
  if (!s.cfg().gold_path.empty()) {
    gold = load_gold(s.need(s.cfg().gold_path));
  } else {
    const auto records = load_records(s);
    const auto truth = label_map(s.need(s.paths().truth));
    for (const auto& r : records) {
      const auto it = truth.find(r.query_id);
      if (it == truth.end()) s.fail("truth file has no label for " + r.query_id);
      gold.push_back({r, is_product_intent(it->second)});
    }
  }
  if (gold.empty()) s.fail("gold set is empty");
  const ResourceLists res = load_resources(s);
  std::ostringstream csv;
  csv << "Heuristic,Precision,Recall,F1-score,Accuracy,TP,FP,FN,TN\n";
  ordered_json out = ordered_json::object();
  for (const auto& h : evaluate_heuristics(gold, res)) {
    const auto& sc = h.score;
    const std::string name(to_string(h.kind));
    out[name] = {{"tp", sc.tp},         {"fp", sc.fp},         {"fn", sc.fn},
                 {"tn", sc.tn},         {"precision", sc.precision}, {"recall", sc.recall},
                 {"f1", sc.f1},         {"accuracy", sc.accuracy}};
    csv << name << ',' << 100 * sc.precision << ',' << 100 * sc.recall << ',' << 100 * sc.f1
        << ',' << 100 * sc.accuracy << ',' << sc.tp << ',' << sc.fp << ',' << sc.fn << ','
        << sc.tn << '\n';
  }
  long positives = 0;
  for (const auto& g : gold) positives += g.is_product;
  s.results()["gold_size"] = gold.size();
  s.results()["gold_product_share"] = format_share(positives, gold.size());
  s.results()["heuristics"] = out;
  s.write(s.paths().at("reports/heuristics.csv"), csv.str());
}

void stage_weak_label(Stage& s) {
  const auto records = load_records(s);
  const ResourceLists res = load_resources(s);
  const HeuristicKind kind = *parse_heuristic(s.cfg().heuristic);
  std::size_t pos = 0;
  for (const auto& r : records) pos += apply_heuristic(r, kind, res);
  const std::size_t neg = records.size() - pos;
  const std::size_t n = std::min({s.cfg().weak_max, pos, neg});
  if (n == 0) s.fail("heuristic leaves an empty stratum (" + std::to_string(pos) + " positive, " +
                     std::to_string(neg) + " negative)");
  const auto set = build_weak_set(records, kind, res, n, n, s.seed());
  std::ostringstream out;
  for (const auto& id : set.positives) out << id << "\t1\n";
  for (const auto& id : set.negatives) out << id << "\t0\n";
  s.write(s.paths().at("weak_set.tsv"), out.str());
  s.results()["heuristic"] = s.cfg().heuristic;
  s.results()["available"] = {{"positive", pos}, {"negative", neg}};
  s.results()["sampled_per_class"] = n;
}

void stage_build_vocab(Stage& s) {
  const auto records = load_records(s);
  std::vector<std::string> corpus;
  for (const auto& r : records) {
    corpus.push_back(r.query);
    for (const auto& c : r.clicks) {
      corpus.push_back(url_text(c.url, /*include_domain=*/true));
      if (!c.snippet.empty()) corpus.push_back(c.snippet);
    }
  }
  const Vocab vocab = learn_vocab(corpus, s.cfg().vocab_size, s.seed());
  vocab.save(s.output(s.paths().at("vocab.txt")));
  s.results()["target_size"] = s.cfg().vocab_size;
  s.results()["vocab_size"] = vocab.size();
}

void stage_train_embeddings(Stage& s) {
  const auto records = load_records(s);
  const Vocab vocab = load_vocab(s);
  std::vector<std::vector<std::string>> docs;
  for (const auto& r : records) {
    auto doc = tokenize(r.query, vocab);
    for (const auto& c : r.clicks) {
      for (auto& p : tokenize(url_text(c.url, true), vocab)) doc.push_back(std::move(p));
      for (auto& p : tokenize(c.snippet, vocab)) doc.push_back(std::move(p));
    }
    docs.push_back(std::move(doc));
  }
  EmbeddingParams p = s.cfg().embedding;
  p.seed = s.seed();
  const auto trained = train_embeddings(docs, p);
  trained.table.save(s.output(s.paths().at("embeddings.txt")));
  s.results()["dim"] = p.dim;
  s.results()["pieces"] = trained.table.size();
  s.results()["epoch_loss"] = trained.epoch_loss;
}

void stage_train_product(Stage& s) {
  const auto records = load_records(s);
  const Vocab vocab = load_vocab(s);
  const EmbeddingTable table = load_table(s);
  std::map<std::string, const QueryRecord*> by_id;
  for (const auto& r : records) by_id[r.query_id] = &r;

  Dataset data;
  data.class_names = {"non-product", "product"};
  data.features = Matrix(0, 2 * table.dim());
  for (const auto& [id, v] : read_tsv(s.need(s.paths().at("weak_set.tsv")))) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) s.fail("weak set references unknown query " + id);
    data.features.append_row(product_features(*it->second, table, vocab));
    data.labels.push_back(v == "1" ? 1 : 0);
  }
  long pos = std::count(data.labels.begin(), data.labels.end(), 1);
  const double baseline =
      100.0 * static_cast<double>(std::max<long>(pos, data.labels.size() - pos)) /
      static_cast<double>(data.labels.size());

  ordered_json models = ordered_json::object();
  for (ModelKind k : s.cfg().product_models) {
    s.log() << "  cross-validating " << to_string(k) << '\n';
    const auto rep = cross_validate(k, data, s.cfg().folds, s.cfg().hyper, s.seed());
    auto j = report_json(rep);
    j["margin_over_baseline"] = rep.accuracy - baseline;
    models[std::string(to_string(k))] = j;
  }
  const auto model = train(s.cfg().product_model, data, s.cfg().hyper, s.seed());
  save_model(model, s.output(s.paths().at("models/product.json")));
  s.results()["examples"] = data.labels.size();
  s.results()["majority_baseline"] = baseline;
  s.results()["cross_validation"] = models;
  s.results()["deployed_model"] = std::string(to_string(s.cfg().product_model));
}

void stage_product_share(Stage& s) {
  const auto records = load_records(s);
  const Vocab vocab = load_vocab(s);
  const EmbeddingTable table = load_table(s);
  const auto model = load_model(s.need(s.paths().at("models/product.json")));
  Matrix x(0, 2 * table.dim());
  for (const auto& r : records) x.append_row(product_features(r, table, vocab));
  const auto pred = predict(model, x);
  std::ostringstream out;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << records[i].query_id << '\t' << pred[i] << '\n';
    positives += pred[i] == 1;
  }
  s.write(s.paths().at("product_predictions.tsv"), out.str());
  s.results()["product_queries"] = positives;
  s.results()["total_queries"] = records.size();
  s.results()["product_share"] = format_share(positives, records.size());
}

void stage_lda(Stage& s) {
  const auto records = load_records(s);
  const Vocab vocab = load_vocab(s);
  const auto products = product_ids(s);
  std::vector<TopicDocument> docs;
  for (const auto& r : records) {
    if (products.count(r.query_id)) docs.push_back(build_doc(r, vocab));
  }
  if (docs.empty()) s.fail("no product queries to cluster");
  LdaParams p;
  p.num_topics = s.cfg().topics;
  p.iterations = s.cfg().lda_iterations;
  p.seed = s.seed();
  std::vector<ordered_json> trace;
  const auto model = fit_lda(docs, vocab.size(), p, [&](int sweep, const TopicModel& m) {
    if (sweep % 20 == 0 || sweep == p.iterations) {
      trace.push_back({{"sweep", sweep}, {"log_likelihood", log_likelihood(m)}});
    }
  });
  s.write(s.paths().at("lda_topics.json"), topic_dump_json(model, vocab) + "\n");
  std::ostringstream membership;
  std::map<int, long> sizes;
  for (std::size_t d = 0; d < model.doc_ids.size(); ++d) {
    const int t = dominant_topic(model, d);
    membership << model.doc_ids[d] << '\t' << t << '\n';
    ++sizes[t];
  }
  s.write(s.paths().at("topic_membership.tsv"), membership.str());
  s.results()["documents"] = docs.size();
  s.results()["topics"] = p.num_topics;
  s.results()["alpha"] = model.alpha;
  s.results()["beta"] = model.beta;
  s.results()["iterations"] = p.iterations;
  s.results()["non_empty_clusters"] = sizes.size();
  s.results()["log_likelihood_trace"] = trace;
}

void stage_sample_annotation(Stage& s) {
  const auto records = load_records(s);
  std::map<int, std::vector<std::string>> members;
  for (const auto& [id, t] : read_tsv(s.need(s.paths().at("topic_membership.tsv")))) {
    members[std::stoi(t)].push_back(id);
  }
  std::map<std::string, const QueryRecord*> by_id;
  for (const auto& r : records) by_id[r.query_id] = &r;
  std::vector<AnnotationItem> items;
  for (const auto& sq : sample_per_topic(members, s.cfg().per_cluster, s.seed())) {
    const auto it = by_id.find(sq.query_id);
    if (it == by_id.end()) s.fail("membership references unknown query " + sq.query_id);
    items.push_back(item_from_record(*it->second, sq.topic));
  }
  save_queue(s.output(s.paths().at("annotation_queue.jsonl")), items);
  s.results()["clusters"] = members.size();
  s.results()["per_cluster"] = s.cfg().per_cluster;
  s.results()["items"] = items.size();
}

void stage_simulate_labels(Stage& s) {
  const auto items = load_queue(s.need(s.paths().at("annotation_queue.jsonl")));
  const auto truth = label_map(s.need(s.paths().truth));
  std::mt19937_64 rng(s.seed());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(1, kIntentLabelCount - 1);
  std::ostringstream out;
  std::int64_t t = kSimulatedLabelEpoch;
  long flipped = 0, total = 0;
  for (const auto& item : items) {
    const auto it = truth.find(item.query_id);
    if (it == truth.end()) s.fail("truth file has no label for " + item.query_id);
    for (const auto& a : s.cfg().annotators) {
      int label = index_of(it->second);
      if (unit(rng) < s.cfg().simulated_label_noise) {
        label = (label + other(rng)) % kIntentLabelCount;
        ++flipped;
      }
      ++total;
      out << serialize_event({item.query_id, a, static_cast<AnnotationLabel>(label), Timestamp{t++}})
          << '\n';
    }
  }
  s.write(s.paths().labels, out.str());
  s.results()["events"] = total;
  s.results()["noisy_events"] = flipped;
  s.results()["annotators"] = s.cfg().annotators;
}

void stage_kappa(Stage& s) {
  auto items = load_queue(s.need(s.paths().at("annotation_queue.jsonl")));
  s.need(s.paths().labels);
  const AnnotationService service(std::move(items), s.cfg().annotators, s.paths().labels);
  const auto agreement = service.agreement();
  const auto events = service.live_events();
  const auto consensus = consensus_labels(events);
  std::ostringstream out;
  std::map<std::string, long> counts;
  for (const auto& [id, l] : consensus) {
    out << id << '\t' << to_string(l) << '\n';
    ++counts[std::string(to_string(l))];
  }
  s.write(s.paths().at("consensus.tsv"), out.str());
  s.results()["agreement"] = ordered_json::parse(agreement_to_json(agreement));
  s.results()["progress"] = ordered_json::parse(progress_to_json(service.progress()));
  s.results()["consensus_items"] = consensus.size();
  s.results()["consensus_counts"] = counts;
}

void stage_features(Stage& s) {
  const auto records = load_records(s);
  const Vocab vocab = load_vocab(s);
  const EmbeddingTable table = load_table(s);
  std::set<std::string> keep;
  const bool all = s.cfg().features_scope == "all";
  if (!all) keep = product_ids(s);
  std::vector<std::string> ids;
  std::vector<IntentFeatures> feats;
  for (const auto& r : records) {
    if (!all && !keep.count(r.query_id)) continue;
    ids.push_back(r.query_id);
    feats.push_back(extract_features(r, table, vocab));
  }
  std::ostringstream out;
  write_feature_csv(out, ids, feats);
  s.write(s.paths().at("features.csv"), out.str());
  s.results()["rows"] = ids.size();
  s.results()["columns"] = 2 * table.dim() + kScalarFeatureCount;
  s.results()["scope"] = s.cfg().features_scope;
}

void stage_train_intent(Stage& s) {
  const auto table = read_feature_csv(s.need(s.paths().at("features.csv")));
  const std::string label_path =
      s.cfg().intent_labels == "truth" ? s.paths().truth : s.paths().at("consensus.tsv");
  const auto labels = label_map(s.need(label_path));

  std::vector<IntentLabel> classes(kProductIntents.begin(), kProductIntents.end());
  if (s.cfg().include_not_product) classes.push_back(IntentLabel::NotProduct);
  std::map<IntentLabel, long> counts;
  std::vector<std::pair<std::size_t, IntentLabel>> rows;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    const auto it = labels.find(table.ids[i]);
    if (it == labels.end()) continue;
    if (std::find(classes.begin(), classes.end(), it->second) == classes.end()) continue;
    rows.emplace_back(i, it->second);
    ++counts[it->second];
  }
  std::vector<std::string> dropped;
  std::erase_if(classes, [&](IntentLabel l) {
    if (counts[l] >= s.cfg().folds) return false;
    dropped.emplace_back(to_string(l));
    return true;
  });
  if (classes.size() < 2) s.fail("fewer than two intent classes have enough labeled examples");

  Dataset data;
  data.features = Matrix(0, table.columns.size());
  for (IntentLabel l : classes) data.class_names.emplace_back(to_string(l));
  for (const auto& [i, l] : rows) {
    const auto c = std::find(classes.begin(), classes.end(), l);
    if (c == classes.end()) continue;
    data.features.append_row(table.x.row(i));
    data.labels.push_back(static_cast<int>(c - classes.begin()));
  }

  ordered_json models = ordered_json::object();
  for (ModelKind k : s.cfg().intent_models) {
    s.log() << "  cross-validating " << to_string(k) << '\n';
    models[std::string(to_string(k))] =
        report_json(cross_validate(k, data, s.cfg().folds, s.cfg().hyper, s.seed()));
  }
  const auto model = train(s.cfg().intent_model, data, s.cfg().hyper, s.seed());
  save_model(model, s.output(s.paths().at("models/intent.json")));
  s.results()["label_source"] = s.cfg().intent_labels;
  s.results()["examples"] = data.labels.size();
  s.results()["classes"] = data.class_names;
  s.results()["dropped_classes"] = dropped;
  s.results()["cross_validation"] = models;
  s.results()["deployed_model"] = std::string(to_string(s.cfg().intent_model));
}

void stage_classify_intent(Stage& s) {
  const auto table = read_feature_csv(s.need(s.paths().at("features.csv")));
  const auto model = load_model(s.need(s.paths().at("models/intent.json")));
  const auto pred = table.ids.empty() ? std::vector<int>{} : predict(model, table.x);
  std::ostringstream out;
  std::map<std::string, long> counts;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& name = model.class_names.at(pred[i]);
    out << table.ids[i] << '\t' << name << '\n';
    ++counts[name];
  }
  s.write(s.paths().at("intent_predictions.tsv"), out.str());
  s.results()["classified"] = pred.size();
  s.results()["counts"] = counts;
}

void stage_analyze(Stage& s) {
  const auto records = load_records(s);
  const auto labels = label_map(s.need(s.cfg().analyze_labels == "truth"
                                           ? s.paths().truth
                                           : s.paths().at("intent_predictions.tsv")));
  std::vector<LabeledRecord> labeled;
  for (const auto& r : records) {
    const auto it = labels.find(r.query_id);
    labeled.push_back({r, it == labels.end() ? IntentLabel::NotProduct : it->second});
  }
  MetricsReport rep;
  try {
    rep = analyze(labeled);
  } catch (const std::invalid_argument& e) {
    s.fail(e.what());
  }
  s.write(s.paths().at("reports/metrics_table.csv"), metrics_table_csv(rep));
  s.write(s.paths().at("reports/cooccurrence.csv"), cooccurrence_csv(rep.cooccurrence));
  s.results()["label_source"] = s.cfg().analyze_labels;
  s.results()["metrics"] = ordered_json::parse(metrics_to_json(rep));
}

std::vector<std::string> stage_inputs(std::string_view name, const PipelineConfig& c) {
  const Paths p(c);
  std::vector<std::string> in;
  const auto resources = [&] {
    if (!c.categories_path.empty()) in.push_back(c.categories_path);
    if (!c.products_path.empty()) in.push_back(c.products_path);
  };
  if (name == "evaluate-heuristics") {
    if (!c.gold_path.empty()) {
      in = {c.gold_path};
    } else {
      in = {p.log, p.truth};
    }
    resources();
  } else if (name == "weak-label") {
    in = {p.log};
    resources();
  } else if (name == "build-vocab") {
    in = {p.log};
  } else if (name == "train-embeddings") {
    in = {p.log, p.at("vocab.txt")};
  } else if (name == "train-product") {
    in = {p.log, p.at("vocab.txt"), p.at("embeddings.txt"), p.at("weak_set.tsv")};
  } else if (name == "product-share") {
    in = {p.log, p.at("vocab.txt"), p.at("embeddings.txt"), p.at("models/product.json")};
  } else if (name == "lda") {
    in = {p.log, p.at("vocab.txt"), p.at("product_predictions.tsv")};
  } else if (name == "sample-annotation") {
    in = {p.log, p.at("topic_membership.tsv")};
  } else if (name == "simulate-labels") {
    in = {p.at("annotation_queue.jsonl"), p.truth};
  } else if (name == "kappa") {
    in = {p.at("annotation_queue.jsonl"), p.labels};
  } else if (name == "features") {
    in = {p.log, p.at("vocab.txt"), p.at("embeddings.txt")};
    if (c.features_scope == "product") in.push_back(p.at("product_predictions.tsv"));
  } else if (name == "train-intent") {
    in = {p.at("features.csv"), c.intent_labels == "truth" ? p.truth : p.at("consensus.tsv")};
  } else if (name == "classify-intent") {
    in = {p.at("features.csv"), p.at("models/intent.json")};
  } else if (name == "analyze") {
    in = {p.log, c.analyze_labels == "truth" ? p.truth : p.at("intent_predictions.tsv")};
  }
  return in;
}

using StageFn = std::function<void(Stage&)>;

const std::vector<std::pair<std::string, StageFn>>& stage_table() {
  static const std::vector<std::pair<std::string, StageFn>> t = {
      {"generate", stage_generate},
      {"evaluate-heuristics", stage_evaluate_heuristics},
      {"weak-label", stage_weak_label},
      {"build-vocab", stage_build_vocab},
      {"train-embeddings", stage_train_embeddings},
      {"train-product", stage_train_product},
      {"product-share", stage_product_share},
      {"lda", stage_lda},
      {"sample-annotation", stage_sample_annotation},
      {"simulate-labels", stage_simulate_labels},
      {"serve-annotation", nullptr},
      {"kappa", stage_kappa},
      {"features", stage_features},
      {"train-intent", stage_train_intent},
      {"classify-intent", stage_classify_intent},
      {"analyze", stage_analyze},
  };
  return t;
}

StageResult serve(const PipelineConfig& cfg, std::ostream& log) {
  const Paths paths(cfg);
  const std::string queue = paths.at("annotation_queue.jsonl");
  if (!fs::is_regular_file(queue)) throw StageError("serve-annotation", "missing input " + queue);
  AnnotationService service(load_queue(queue), cfg.annotators, paths.labels);
  AnnotationServer server(service);
  int port = 0;
  try {
    port = server.bind(cfg.host, cfg.port);
  } catch (const std::exception& e) {
    throw StageError("serve-annotation", e.what());
  }
  log << "serving annotation API on http://" << cfg.host << ':' << port << '\n' << std::flush;
  server.listen();
  return {"serve-annotation", false, ""};
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, f] : stage_table()) v.push_back(n);
    return v;
  }();
  return names;
}

bool is_stage(std::string_view name) {
  const auto& n = stage_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

StageResult run_stage(std::string_view name, const PipelineConfig& cfg, std::ostream& log) {
  if (name == "serve-annotation") return serve(cfg, log);
  const auto& table = stage_table();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const auto& e) { return e.first == name; });
  if (it == table.end()) throw std::invalid_argument("unknown stage " + std::string(name));

  Stage stage(it->first, cfg, stage_inputs(name, cfg), log);
  log << "[" << it->first << "] ";
  try {
    stage.check_inputs();
  } catch (const StageError&) {
    log << "failed\n";
    throw;
  }
  if (stage.up_to_date()) {
    log << "up to date\n";
    return {it->first, true, stage.report_path()};
  }
  try {
    it->second(stage);
  } catch (const StageError&) {
    stage.abandon();
    log << "failed\n";
    throw;
  } catch (const std::exception& e) {
    stage.abandon();
    log << "failed\n";
    throw StageError(it->first, e.what());
  }
  const std::string rp = stage.commit();
  log << "done -> " << rp << '\n';
  return {it->first, false, rp};
}

std::vector<StageResult> run_all(const PipelineConfig& cfg, std::ostream& log) {
  std::vector<StageResult> out;
  for (const auto& name : stage_names()) {
    if (name == "serve-annotation") continue;
    if (name == "generate" && !cfg.log_path.empty()) continue;
    if (name == "simulate-labels" && cfg.intent_labels != "consensus") continue;
    out.push_back(run_stage(name, cfg, log));
  }
  return out;
}

}  // namespace prodsearch
