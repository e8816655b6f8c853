#pragma once

// Paragraph vectors trained with a full softmax over the vocabulary.
//
// Words and documents share one n-dimensional space. The context of word i
// is the set of words seen within `window` positions of any occurrence of i,
// plus every document containing i. Training minimizes
//
//   sum_i sum_{u in C_i} -log( exp(v_i . u) / sum_k exp(v_k . u) )
//
// where k runs over the M vocabulary words only (document vectors never
// appear in the denominator).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adscan/token_index.hpp"

namespace adscan::doc2vec {

struct Doc2VecConfig {
  int vec_size = 40;
  double alpha = 0.025;       // initial learning rate
  double min_alpha = 0.0025;  // final learning rate, reached on the last step
  int window = 2;
  int epochs = 20;
  std::uint64_t seed = 1;
  /// Sampled-softmax approximation for large vocabularies. Off by default:
  /// the exact objective above is the reference.
  bool negative_sampling = false;
  int negatives = 5;
  int infer_epochs = 0;     // 0: same as `epochs`
  bool track_loss = true;   // record the objective after every epoch

  /// Throws Error{InvalidConfig}.
  void validate() const;
};

struct ContextSet {
  std::vector<int> words;  // sorted, unique
  std::vector<int> docs;   // sorted, unique
  friend bool operator==(const ContextSet&, const ContextSet&) = default;
};

/// One context set per vocabulary index.
std::vector<ContextSet> build_context(const std::vector<std::vector<int>>& docs, std::size_t vocab_size, int window);

struct Doc2VecModel {
  TokenIndex vocabulary;
  Eigen::MatrixXd word_vectors;  // M x n
  Eigen::MatrixXd doc_vectors;   // D x n
  Doc2VecConfig config;
  /// Objective after initialization and after each epoch (empty unless
  /// config.track_loss).
  std::vector<double> loss_history;
};

/// exp(v_i . u) / sum_k exp(v_k . u), computed with max-subtraction.
double softmax_factor(const Eigen::MatrixXd& words, int target, const Eigen::Ref<const Eigen::VectorXd>& context);

/// Product of the softmax factors of word `target` over its context set.
double softmax_context_prob(const Doc2VecModel& model, int target, const ContextSet& context);

/// Per-pair term -log softmax_factor, with optional gradients (grad_words is
/// dense M x n; both are overwritten).
double pair_loss(const Eigen::MatrixXd& words, int target, const Eigen::Ref<const Eigen::VectorXd>& context,
                 Eigen::MatrixXd* grad_words = nullptr, Eigen::VectorXd* grad_context = nullptr);

/// Full objective over all context sets, with optional gradients.
double context_objective(const Eigen::MatrixXd& words, const Eigen::MatrixXd& docs,
                         const std::vector<ContextSet>& contexts, Eigen::MatrixXd* grad_words = nullptr,
                         Eigen::MatrixXd* grad_docs = nullptr);

/// Builds the vocabulary from `docs` and trains on them. Throws
/// Error{EmptyCorpus}, Error{InvalidConfig} or Error{DivergenceDetected}.
Doc2VecModel train(const std::vector<std::vector<std::string>>& docs, const Doc2VecConfig& config);

/// Fits a fresh document vector against frozen word vectors with the same
/// objective and schedule. Deterministic for a given config.seed. Throws
/// Error{AllTokensOOV}.
Eigen::VectorXd infer_doc_vector(std::span<const std::string> tokens, const Doc2VecModel& model,
                                 const Doc2VecConfig& config);

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace adscan::doc2vec
