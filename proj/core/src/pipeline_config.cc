#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prodsearch/distant_supervision.h"
#include "prodsearch/pipeline.h"

#ifndef PRODSEARCH_VERSION
#define PRODSEARCH_VERSION "0.0.0"
#endif

namespace prodsearch {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<ModelKind> kinds_from(const json& j, const std::string& key) {
  std::vector<ModelKind> out;
  for (const auto& v : j) {
    const auto k = parse_model_kind(v.get<std::string>());
    if (!k) throw std::invalid_argument(key + ": unknown model kind " + v.dump());
    out.push_back(*k);
  }
  return out;
}

ModelKind kind_from(const json& v, const std::string& key) {
  const auto k = parse_model_kind(v.get<std::string>());
  if (!k) throw std::invalid_argument(key + ": unknown model kind " + v.dump());
  return *k;
}

ordered_json kinds_json(const std::vector<ModelKind>& kinds) {
  auto arr = ordered_json::array();
  for (auto k : kinds) arr.push_back(std::string(to_string(k)));
  return arr;
}

ordered_json hyper_json(const Hyperparameters& h) {
  return {{"logreg_lambda", h.logreg_lambda},
          {"logreg_learning_rate", h.logreg_learning_rate},
          {"logreg_epochs", h.logreg_epochs},
          {"svm_lambda", h.svm_lambda},
          {"svm_epochs", h.svm_epochs},
          {"rbf_c", h.rbf_c},
          {"rbf_gamma", h.rbf_gamma},
          {"rbf_tolerance", h.rbf_tolerance},
          {"rbf_max_iterations", h.rbf_max_iterations},
          {"knn_k", h.knn_k},
          {"forest_trees", h.forest_trees},
          {"forest_max_depth", h.forest_max_depth},
          {"forest_max_features", h.forest_max_features},
          {"forest_bootstrap", h.forest_bootstrap},
          {"boost_rounds", h.boost_rounds},
          {"mlp_hidden", h.mlp_hidden},
          {"mlp_learning_rate", h.mlp_learning_rate},
          {"mlp_epochs", h.mlp_epochs},
          {"mlp_batch", h.mlp_batch}};
}

template <typename T>
void take(const json& o, const char* key, T& field) {
  if (o.contains(key)) field = o.at(key).get<T>();
}

void check_keys(const json& o, std::initializer_list<const char*> allowed, const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : o.items()) {
    if (!ok.count(k)) throw std::invalid_argument("unknown key '" + k + "' in " + where);
  }
}

Hyperparameters hyper_from(const json& o) {
  check_keys(o,
             {"logreg_lambda", "logreg_learning_rate", "logreg_epochs", "svm_lambda",
              "svm_epochs", "rbf_c", "rbf_gamma", "rbf_tolerance", "rbf_max_iterations",
              "knn_k", "forest_trees", "forest_max_depth", "forest_max_features",
              "forest_bootstrap", "boost_rounds", "mlp_hidden", "mlp_learning_rate",
              "mlp_epochs", "mlp_batch"},
             "hyper");
  Hyperparameters h;
  take(o, "logreg_lambda", h.logreg_lambda);
  take(o, "logreg_learning_rate", h.logreg_learning_rate);
  take(o, "logreg_epochs", h.logreg_epochs);
  take(o, "svm_lambda", h.svm_lambda);
  take(o, "svm_epochs", h.svm_epochs);
  take(o, "rbf_c", h.rbf_c);
  take(o, "rbf_gamma", h.rbf_gamma);
  take(o, "rbf_tolerance", h.rbf_tolerance);
  take(o, "rbf_max_iterations", h.rbf_max_iterations);
  take(o, "knn_k", h.knn_k);
  take(o, "forest_trees", h.forest_trees);
  take(o, "forest_max_depth", h.forest_max_depth);
  take(o, "forest_max_features", h.forest_max_features);
  take(o, "forest_bootstrap", h.forest_bootstrap);
  take(o, "boost_rounds", h.boost_rounds);
  take(o, "mlp_hidden", h.mlp_hidden);
  take(o, "mlp_learning_rate", h.mlp_learning_rate);
  take(o, "mlp_epochs", h.mlp_epochs);
  take(o, "mlp_batch", h.mlp_batch);
  return h;
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (v == o) return true;
  }
  return false;
}

}  // namespace

std::string_view tool_version() { return "prodsearch " PRODSEARCH_VERSION; }

void PipelineConfig::validate() const {
  if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
  if (!parse_heuristic(heuristic)) throw std::invalid_argument("unknown heuristic " + heuristic);
  if (weak_max < 1) throw std::invalid_argument("weak_max must be >= 1");
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
  if (embedding.dim < 1 || embedding.window < 1 || embedding.negatives < 1 ||
      embedding.epochs < 1 || !(embedding.learning_rate > 0)) {
    throw std::invalid_argument("embedding parameters out of range");
  }
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (product_models.empty() || intent_models.empty()) {
    throw std::invalid_argument("model lists must not be empty");
  }
  if (topics < 1) throw std::invalid_argument("topics must be >= 1");
  if (lda_iterations < 0) throw std::invalid_argument("lda_iterations must be >= 0");
  if (per_cluster < 1) throw std::invalid_argument("per_cluster must be >= 1");
  if (annotators.empty()) throw std::invalid_argument("annotators must not be empty");
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
  if (!(simulated_label_noise >= 0 && simulated_label_noise <= 1)) {
    throw std::invalid_argument("simulated_label_noise must lie in [0, 1]");
  }
  if (!one_of(features_scope, {"product", "all"})) {
    throw std::invalid_argument("features_scope must be 'product' or 'all'");
  }
  if (!one_of(intent_labels, {"consensus", "truth"})) {
    throw std::invalid_argument("intent_labels must be 'consensus' or 'truth'");
  }
  if (!one_of(analyze_labels, {"predicted", "truth"})) {
    throw std::invalid_argument("analyze_labels must be 'predicted' or 'truth'");
  }
  generator.validate();
}

PipelineConfig pipeline_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  check_keys(j,
             {"out_dir", "log_path", "truth_path", "gold_path", "categories_path",
              "products_path", "labels_path", "seed", "generator", "heuristic", "weak_max",
              "vocab_size", "embedding", "folds", "product_models", "product_model", "topics",
              "lda_iterations", "per_cluster", "annotators", "host", "port",
              "simulated_label_noise", "features_scope", "intent_labels",
              "include_not_product", "intent_models", "intent_model", "analyze_labels",
              "hyper"},
             "config");
  PipelineConfig c;
  try {
    take(j, "out_dir", c.out_dir);
    take(j, "log_path", c.log_path);
    take(j, "truth_path", c.truth_path);
    take(j, "gold_path", c.gold_path);
    take(j, "categories_path", c.categories_path);
    take(j, "products_path", c.products_path);
    take(j, "labels_path", c.labels_path);
    take(j, "seed", c.seed);
    if (j.contains("generator")) c.generator = generator_config_from_json(j["generator"].dump());
    take(j, "heuristic", c.heuristic);
    take(j, "weak_max", c.weak_max);
    take(j, "vocab_size", c.vocab_size);
    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      check_keys(e, {"dim", "window", "negatives", "epochs", "learning_rate"}, "embedding");
      take(e, "dim", c.embedding.dim);
      take(e, "window", c.embedding.window);
      take(e, "negatives", c.embedding.negatives);
      take(e, "epochs", c.embedding.epochs);
      take(e, "learning_rate", c.embedding.learning_rate);
    }
    take(j, "folds", c.folds);
    if (j.contains("product_models")) c.product_models = kinds_from(j["product_models"], "product_models");
    if (j.contains("product_model")) c.product_model = kind_from(j["product_model"], "product_model");
    take(j, "topics", c.topics);
    take(j, "lda_iterations", c.lda_iterations);
    take(j, "per_cluster", c.per_cluster);
    take(j, "annotators", c.annotators);
    take(j, "host", c.host);
    take(j, "port", c.port);
    take(j, "simulated_label_noise", c.simulated_label_noise);
    take(j, "features_scope", c.features_scope);
    take(j, "intent_labels", c.intent_labels);
    take(j, "include_not_product", c.include_not_product);
    if (j.contains("intent_models")) c.intent_models = kinds_from(j["intent_models"], "intent_models");
    if (j.contains("intent_model")) c.intent_model = kind_from(j["intent_model"], "intent_model");
    take(j, "analyze_labels", c.analyze_labels);
    if (j.contains("hyper")) c.hyper = hyper_from(j["hyper"]);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return pipeline_config_from_json(buf.str());
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  ordered_json j;
  j["log_path"] = c.log_path;
  j["truth_path"] = c.truth_path;
  j["gold_path"] = c.gold_path;
  j["categories_path"] = c.categories_path;
  j["products_path"] = c.products_path;
  j["labels_path"] = c.labels_path;
  j["seed"] = c.seed;
  j["generator"] = ordered_json::parse(generator_config_to_json(c.generator));
  j["heuristic"] = c.heuristic;
  j["weak_max"] = c.weak_max;
  j["vocab_size"] = c.vocab_size;
  j["embedding"] = {{"dim", c.embedding.dim},
                    {"window", c.embedding.window},
                    {"negatives", c.embedding.negatives},
                    {"epochs", c.embedding.epochs},
                    {"learning_rate", c.embedding.learning_rate}};
  j["folds"] = c.folds;
  j["product_models"] = kinds_json(c.product_models);
  j["product_model"] = std::string(to_string(c.product_model));
  j["topics"] = c.topics;
  j["lda_iterations"] = c.lda_iterations;
  j["per_cluster"] = c.per_cluster;
  j["annotators"] = c.annotators;
  j["host"] = c.host;
  j["port"] = c.port;
  j["simulated_label_noise"] = c.simulated_label_noise;
  j["features_scope"] = c.features_scope;
  j["intent_labels"] = c.intent_labels;
  j["include_not_product"] = c.include_not_product;
  j["intent_models"] = kinds_json(c.intent_models);
  j["intent_model"] = std::string(to_string(c.intent_model));
  j["analyze_labels"] = c.analyze_labels;
  j["hyper"] = hyper_json(c.hyper);
  return j.dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const PipelineConfig& c) { return hex64(fnv1a64(pipeline_config_to_json(c))); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hash_file(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string format_share(std::size_t positives, std::size_t total) {
  const double pct = total == 0 ? 0.0 : 100.0 * static_cast<double>(positives) / static_cast<double>(total);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", pct);
  return buf;
}

}  // namespace prodsearch
