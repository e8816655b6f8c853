#pragma once

// Plain "key = value" run configuration. Lines starting with '#' are
// comments; list values are comma separated.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adscan/context_embedder.hpp"
#include "adscan/doc2vec.hpp"
#include "adscan/synthetic.hpp"

namespace adscan::pipeline {

/// Default inverse-regularization values swept by the search.
inline const std::vector<double> kTableCValues{0.01, 0.05, 0.25, 0.5, 0.75, 0.99, 10, 1000, 1e6, 1e10};
inline const std::vector<double> kTableVecSizes{40, 100, 200, 500, 750, 1000, 1250, 1500};
inline const std::vector<double> kTableAlphas{0.001, 0.025, 0.01, 0.25, 0.35, 0.05, 0.1, 0.5};
inline const std::vector<double> kTableMinAlphas{0.00025, 0.0025, 0.005, 0.01, 0.05, 0.1, 0.2, 0.5};

enum class EmbedderFit {
  Background,  // embedders trained once on an unlabeled background corpus
  TrainSplit,  // embedders retrained on every training split
};

struct PipelineConfig {
  int pipeline = 4;
  std::string corpus_dir;
  std::string metadata;        // default <corpus_dir>/metadata.json
  std::string background_dir;  // unlabeled corpus for EmbedderFit::Background
  std::string out_dir = "out";

  EmbedderFit embedder_fit = EmbedderFit::Background;
  std::string classifier = "logistic";  // or "tree"
  std::string criterion = "gini";
  int max_depth = 0;  // 0: unlimited
  double c = 1.0;
  std::size_t min_df = 1;
  bool standardize_embeddings = true;

  doc2vec::Doc2VecConfig doc2vec;
  context::BiLMConfig bilm;
  bool layer_norm = false;
  bool joint_mixing = true;

  std::size_t repetitions = 100;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t folds = 10;
  bool stratified = true;

  std::vector<double> search_c = kTableCValues;
  std::vector<double> search_vec_size;   // empty: fixed at doc2vec.vec_size
  std::vector<double> search_alpha;      // empty: fixed at doc2vec.alpha
  std::vector<double> search_min_alpha;  // empty: fixed at doc2vec.min_alpha
  std::optional<std::size_t> random_budget;

  synthetic::SyntheticCorpusSpec synthetic;
  std::size_t background_docs = 300;

  /// Sets one key from its text form. Throws Error{InvalidConfig} for unknown
  /// keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  /// Throws Error{InvalidConfig}.
  void validate() const;

  /// Every key in a fixed order, as text.
  std::vector<std::pair<std::string, std::string>> entries() const;
  nlohmann::json to_json() const;
  /// Hash of the entries that affect results (workers and paths excluded).
  std::uint64_t hash() const;
};

PipelineConfig parse_config(const std::string& text);
/// Throws Error{Io} when the file cannot be read.
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace adscan::pipeline
