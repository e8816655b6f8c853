#pragma once

// End-to-end runs: split, cross-validated search, held-out evaluation,
// repeated-split stability and the artifacts they write.

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adscan/config.hpp"
#include "adscan/evaluation.hpp"
#include "adscan/pipeline.hpp"

namespace adscan::pipeline {

inline constexpr int kReportFormatVersion = 1;

/// Searched values applied to a configuration.
struct Hyper {
  double c = 1.0;
  doc2vec::Doc2VecConfig doc2vec;
};

nlohmann::json to_json(const Hyper& h);

struct EmbeddingSet {
  Embedders embedders;
  std::shared_ptr<const std::vector<DocEmbeddings>> docs;  // one per dataset document
};

struct ArmSpec {
  features::Pipeline pipeline;
  Hyper hyper;
};

struct ScoredArm {
  FittedPipeline model;
  Eigen::VectorXd scores;  // probabilities for the test rows
  double accuracy = 0.0;
  double auc = 0.0;  // 0.5 when the test rows hold one class
  evaluation::Confusion confusion;
};

class Experiment {
 public:
  /// `background` is required when embedders are fitted on a background
  /// corpus and a pipeline needs them.
  Experiment(PipelineConfig config, Dataset data, std::vector<chat::Transcript> background = {});

  const PipelineConfig& config() const noexcept { return config_; }
  const Dataset& data() const noexcept { return data_; }

  /// Embedders and per-document embeddings for a training split. Background
  /// embedders are trained once per Doc2Vec setting and cached. Thread-safe.
  EmbeddingSet embeddings(const doc2vec::Doc2VecConfig& d2v, bool need_doc2vec, bool need_context,
                          std::span<const std::size_t> train);

  FitOptions fit_options(double c) const;

  /// c plus any configured Doc2Vec lists; combinations with
  /// min_alpha > alpha are left out.
  evaluation::SearchSpace search_space() const;
  Hyper hyper(const evaluation::Candidate& c) const;

  evaluation::SearchResult search(features::Pipeline p, std::span<const std::size_t> pool, std::uint64_t seed);

  /// Fits every arm on `train` and scores `test`. Arms sharing a Doc2Vec
  /// setting share embeddings and split preparation.
  std::vector<ScoredArm> fit_and_score(const std::vector<ArmSpec>& arms, std::span<const std::size_t> train,
                                       std::span<const std::size_t> test);

  evaluation::StabilityReport stability(const std::vector<ArmSpec>& arms, std::size_t repetitions,
                                        std::uint64_t base_seed);

 private:
  PipelineConfig config_;
  Dataset data_;
  std::vector<chat::Transcript> background_;
  std::mutex mutex_;
  std::shared_ptr<const context::BiLMModel> background_bilm_;
  std::shared_ptr<const std::vector<Eigen::MatrixXd>> pooled_;
  std::map<std::string, EmbeddingSet> doc2vec_cache_;
};

std::string doc2vec_key(const doc2vec::Doc2VecConfig& c);

struct RunOutputs {
  nlohmann::json report;
  std::string table;    // stability table
  std::string roc_csv;  // held-out ROC curve
  std::string c_sweep;  // "c,validation_accuracy" rows
  nlohmann::json model;
};

/// Steps: split, search on train + validation, fit the winner on train +
/// validation, score the test set, then (optionally) the stability study
/// with the winner.
RunOutputs run_pipeline(Experiment& ex, bool with_stability = true);

struct StabilityOutputs {
  nlohmann::json report;
  std::string table;
};

/// Each arm is tuned by its own search on the first split, then all arms are
/// evaluated together on every repetition.
StabilityOutputs run_stability(Experiment& ex, const std::vector<features::Pipeline>& arms);

/// The c-sweep table of a search: validation accuracy per c at the winning
/// Doc2Vec setting.
std::string c_sweep_table(const evaluation::SearchResult& result);

}  // namespace adscan::pipeline
