#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prodsearch/learners.h"
#include "prodsearch/syngen.h"
#include "prodsearch/text.h"

namespace prodsearch {

/// Settings for every stage. Paths left empty resolve to artifacts inside
/// out_dir; the out_dir itself is not part of the config hash.
struct PipelineConfig {
  std::string out_dir = "run";

  std::string log_path;         // default <out>/log.jsonl (written by generate)
  std::string truth_path;       // default <out>/truth.tsv
  std::string gold_path;        // default: gold derived from the truth file
  std::string categories_path;  // default: bundled list
  std::string products_path;
  std::string labels_path;      // annotation store, default <out>/labels.jsonl

  std::uint64_t seed = 1;
  GeneratorConfig generator = default_generator_config();

  std::string heuristic = "AdsAndCategories";
  std::size_t weak_max = 1500;  // per class
  std::size_t vocab_size = 8000;
  EmbeddingParams embedding;

  int folds = 5;
  std::vector<ModelKind> product_models = {ModelKind::AdaBoost, ModelKind::LinearSVM,
                                           ModelKind::LogReg, ModelKind::MLP};
  ModelKind product_model = ModelKind::MLP;

  int topics = 50;
  int lda_iterations = 500;
  std::size_t per_cluster = 30;

  std::vector<std::string> annotators = {"a1", "a2", "a3"};
  std::string host = "127.0.0.1";
  int port = 8080;
  double simulated_label_noise = 0.1;

  std::string features_scope = "product";  // "product" or "all"
  std::string intent_labels = "consensus";  // "consensus" or "truth"
  bool include_not_product = false;
  std::vector<ModelKind> intent_models = {ModelKind::LogReg, ModelKind::LinearSVM,
                                          ModelKind::RbfSVM, ModelKind::KNN,
                                          ModelKind::RandomForest, ModelKind::AdaBoost,
                                          ModelKind::MLP};
  ModelKind intent_model = ModelKind::LinearSVM;
  std::string analyze_labels = "predicted";  // "predicted" or "truth"

  Hyperparameters hyper;

  /// Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

/// Unknown keys are rejected so typos surface as usage errors.
PipelineConfig pipeline_config_from_json(std::string_view text);
PipelineConfig load_pipeline_config(const std::string& path);
/// Canonical form used for hashing; omits out_dir.
std::string pipeline_config_to_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

/// A stage failed; what() names the stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageResult {
  std::string stage;
  bool skipped = false;  // inputs and config unchanged since the last run
  std::string report_path;
};

/// All runnable stage names in pipeline order (serve-annotation included).
const std::vector<std::string>& stage_names();
bool is_stage(std::string_view name);

/// Runs one stage. Outputs are staged and renamed into place only after the
/// stage succeeds. Progress lines go to `log`.
StageResult run_stage(std::string_view stage, const PipelineConfig& config, std::ostream& log);

/// Every batch stage in order; serve-annotation is skipped. generate is
/// skipped when log_path names an external log.
std::vector<StageResult> run_all(const PipelineConfig& config, std::ostream& log);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 14695981039346656037ull);
std::string hex64(std::uint64_t v);
/// FNV-1a of the file's bytes; throws if unreadable.
std::string hash_file(const std::string& path);
/// Writes via a sibling temporary file and rename.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

/// Product share line as printed in reports, e.g. "15.0%".
std::string format_share(std::size_t positives, std::size_t total);

std::string_view tool_version();

}  // namespace prodsearch
