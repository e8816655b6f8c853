#pragma once

// Featurization and model fitting for the four pipelines, plus the versioned
// model container.

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adscan/chat.hpp"
#include "adscan/classifiers.hpp"
#include "adscan/context_embedder.hpp"
#include "adscan/doc2vec.hpp"
#include "adscan/features.hpp"

namespace adscan::pipeline {

// ------------------------------------------------------------------- data

/// Reads metadata records from a JSON array or an object with "records".
std::vector<chat::SidecarRecord> read_metadata(const std::filesystem::path& path);

/// Parses <dir>/<id>.cha for every metadata record and applies the record.
/// Errors carry the offending path.
std::vector<chat::Transcript> load_transcripts(const std::filesystem::path& dir,
                                               const std::filesystem::path& metadata);

struct Dataset {
  std::vector<chat::Transcript> docs;
  std::vector<int> labels;  // 1 = dementia
};

/// Keeps the transcripts with a known diagnosis.
Dataset labeled(std::vector<chat::Transcript> docs);

// -------------------------------------------------------------- embedders

/// Unsupervised models shared by the P3/P4 blocks. Either may be null.
struct Embedders {
  std::shared_ptr<const doc2vec::Doc2VecModel> doc2vec;
  std::shared_ptr<const context::BiLMModel> bilm;
};

/// Doc2Vec is trained on each document's cleaned participant tokens, the biLM
/// on the cleaned participant utterances.
Embedders fit_embedders(std::span<const chat::Transcript> corpus, const doc2vec::Doc2VecConfig* doc2vec_config,
                        const context::BiLMConfig* bilm_config);

/// Per-document embedding inputs: the inferred document vector and the pooled
/// biLM layers ((L+1) x 2h). Empty when the model is absent.
struct DocEmbeddings {
  Eigen::VectorXd doc_vector;
  Eigen::MatrixXd pooled;
};

/// A document whose tokens are all unknown to Doc2Vec gets a zero vector.
DocEmbeddings embed(const chat::Transcript& t, const Embedders& e, bool layer_norm);

// ----------------------------------------------------------------- models

struct Classifier {
  enum class Kind { Logistic, Tree };
  Kind kind = Kind::Logistic;
  classifiers::LogisticModel logistic;
  classifiers::DecisionTreeModel tree;

  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct FitOptions {
  double c = 1.0;
  std::string classifier = "logistic";
  classifiers::Criterion criterion = classifiers::Criterion::Gini;
  std::optional<int> max_depth;
  std::size_t min_df = 1;
  bool standardize_embeddings = true;
  bool joint_mixing = true;
  bool layer_norm = false;
};

/// Everything needed to score a new transcript.
struct FittedPipeline {
  features::Pipeline pipeline = features::Pipeline::P4;
  features::Vocabulary vocabulary;
  features::Standardizer linguistic;
  features::Standardizer demographic;  // age only; gender passes through
  features::Standardizer doc_vectors;
  std::vector<features::Standardizer> context_layers;  // one per biLM layer
  context::MixingHead head;
  Classifier classifier;
  features::FeatureSchema schema;
  Embedders embedders;
};

/// Full feature vector under the model's schema.
Eigen::VectorXd featurize(const FittedPipeline& model, const chat::Transcript& t, const DocEmbeddings& emb);
Eigen::VectorXd featurize(const FittedPipeline& model, const chat::Transcript& t);

double predict_proba(const FittedPipeline& model, const chat::Transcript& t, const DocEmbeddings& emb);
double predict_proba(const FittedPipeline& model, const chat::Transcript& t);

/// Training-split state shared by every pipeline and every c: vocabulary,
/// standardizers and the standardized training rows.
struct PreparedSplit {
  FittedPipeline shared;           // classifier, head and schema unset
  Eigen::MatrixXd base;            // training rows, all columns up to the Doc2Vec block
  std::vector<Eigen::MatrixXd> layers;  // standardized pooled layers of the training rows
  std::vector<int> labels;
  std::size_t doc2vec_size = 0;
  std::size_t context_size = 0;
};

/// Fits the vocabulary and standardizers on `train` rows. `emb` holds one
/// entry per dataset document.
PreparedSplit prepare_split(const Dataset& data, const std::vector<DocEmbeddings>& emb, const Embedders& embedders,
                            std::span<const std::size_t> train, const FitOptions& options);

/// Trains the classifier (and for P4 the mixing head) of one pipeline.
/// Throws Error{InvalidConfig} when the embeddings it needs are missing.
FittedPipeline fit_pipeline(const PreparedSplit& prepared, features::Pipeline p, const FitOptions& options);

// -------------------------------------------------------------- container

inline constexpr int kContainerFormatVersion = 1;

/// Self-describing JSON with format_version, config_hash, content hashes and
/// a container_hash over everything else.
nlohmann::json model_to_json(const FittedPipeline& model, std::uint64_t config_hash);

/// Verifies versions and every hash. Throws Error{SchemaMismatch} on any
/// inconsistency.
FittedPipeline model_from_json(const nlohmann::json& j);

/// container_hash of a serialized model, as hex.
std::string container_version(const nlohmann::json& j);

}  // namespace adscan::pipeline
