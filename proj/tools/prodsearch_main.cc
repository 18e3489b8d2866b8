// prodsearch: runs the query-log pipeline one stage at a time or end to end.
// Exit codes: 0 success, 1 usage error, 2 stage failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "prodsearch/pipeline.h"

namespace {

constexpr int kUsage = 1;
constexpr int kStageFailure = 2;

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"generate", "Write a synthetic query log and its truth labels"},
      {"evaluate-heuristics", "Score the four distant-supervision heuristics on gold labels"},
      {"weak-label", "Sample a balanced weakly labeled product/non-product set"},
      {"build-vocab", "Learn the wordpiece vocabulary"},
      {"train-embeddings", "Train skip-gram wordpiece embeddings"},
      {"train-product", "Cross-validate product classifiers and save the deployed one"},
      {"product-share", "Classify every query and report the product share"},
      {"lda", "Cluster product queries with LDA"},
      {"sample-annotation", "Sample queries per topic into the annotation queue"},
      {"simulate-labels", "Label the queue with simulated annotators (synthetic logs only)"},
      {"serve-annotation", "Serve the annotation HTTP API"},
      {"kappa", "Fleiss kappa and consensus labels from the label store"},
      {"features", "Extract intent features"},
      {"train-intent", "Cross-validate intent classifiers and save the deployed one"},
      {"classify-intent", "Classify product queries by intent"},
      {"analyze", "Success rate, popularity, effort and intent co-occurrence"},
  };
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Product search query-log mining pipeline"};
  app.set_version_flag("--version", std::string(prodsearch::tool_version()));
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> topics, folds;
  std::optional<std::size_t> dim, vocab_size, per_cluster;
  app.add_option("--config", config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base seed (overrides config)");
  app.add_option("--out", out_dir, "Output directory (overrides config)");
  app.add_option("--topics", topics, "LDA topic count");
  app.add_option("--folds", folds, "Cross-validation folds");
  app.add_option("--dim", dim, "Embedding dimension");
  app.add_option("--vocab-size", vocab_size, "Wordpiece vocabulary size");
  app.add_option("--per-cluster", per_cluster, "Queries sampled per topic");

  for (const auto& name : prodsearch::stage_names()) {
    app.add_subcommand(name, descriptions().at(name));
  }
  app.add_subcommand("run-all", "Run every batch stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  prodsearch::PipelineConfig config;
  try {
    if (!config_path.empty()) config = prodsearch::load_pipeline_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (topics) config.topics = *topics;
    if (folds) config.folds = *folds;
    if (dim) config.embedding.dim = *dim;
    if (vocab_size) config.vocab_size = *vocab_size;
    if (per_cluster) config.per_cluster = *per_cluster;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (stage == "run-all") {
      prodsearch::run_all(config, std::cerr);
    } else {
      prodsearch::run_stage(stage, config, std::cerr);
    }
  } catch (const prodsearch::StageError& e) {
    std::cerr << "stage failed: " << e.what() << '\n';
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "stage failed: " << stage << ": " << e.what() << '\n';
    return kStageFailure;
  }
  return 0;
}
