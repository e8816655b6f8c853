#pragma once

// Contextual token embeddings from a small bidirectional LSTM language model.
//
// Each token k has L+1 mixable layers: layer 0 is the token embedding
// duplicated as [x_k; x_k], layer j >= 1 is [fwd_h_k^j; bwd_h_k^j]. A mixing
// head combines them as gamma * sum_j softmax(w)_j * layer_j, and a document
// is the mean of its mixed token vectors.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adscan/classifiers.hpp"
#include "adscan/token_index.hpp"

namespace adscan::context {

// ------------------------------------------------------------------- LSTM

/// Gate rows are stacked in the order input, forget, cell, output.
struct LstmLayer {
  Eigen::MatrixXd w;  // 4h x in
  Eigen::MatrixXd u;  // 4h x h
  Eigen::MatrixXd b;  // 4h x 1
  int hidden() const noexcept { return static_cast<int>(u.cols()); }
};

/// Activations kept for the backward pass. Column t is time step t.
struct LstmTrace {
  Eigen::MatrixXd x;      // in x T
  Eigen::MatrixXd gates;  // 4h x T, after the nonlinearities
  Eigen::MatrixXd c;      // h x T
  Eigen::MatrixXd h;      // h x T
};

struct LstmGrad {
  Eigen::MatrixXd w, u, b;
  Eigen::MatrixXd x;  // gradient w.r.t. the inputs
};

/// Runs from zero initial state over the columns of x.
LstmTrace lstm_forward(const LstmLayer& layer, const Eigen::MatrixXd& x);

/// Backpropagation through time given dLoss/dh for every step.
LstmGrad lstm_backward(const LstmLayer& layer, const LstmTrace& trace, const Eigen::MatrixXd& dh);

// ------------------------------------------------------------------- biLM

struct BiLMConfig {
  int layers = 2;
  int hidden = 16;
  int embedding = 16;  // must equal hidden so that [x; x] matches [fwd; bwd]
  int epochs = 10;
  double learning_rate = 0.01;  // Adam step size
  int batch_size = 8;           // utterances per update
  double clip_norm = 5.0;
  std::size_t min_count = 1;  // tokens seen in fewer utterances map to <unk>
  std::uint64_t seed = 1;

  /// Throws Error{InvalidConfig} or Error{DimensionMismatch}.
  void validate() const;
};

struct BiLMModel {
  BiLMConfig config;
  TokenIndex vocabulary;
  Eigen::MatrixXd embedding;  // (3 + |vocabulary|) x e; rows 0..2 are <unk>, <s>, </s>
  std::vector<LstmLayer> forward, backward;
  Eigen::MatrixXd forward_out, forward_bias;    // V x h, V x 1
  Eigen::MatrixXd backward_out, backward_bias;  // V x h, V x 1
  /// Mean training cross-entropy per epoch, per direction.
  std::vector<double> forward_loss, backward_loss;

  static constexpr int kUnk = 0, kBos = 1, kEos = 2;
  int token_id(const std::string& token) const;
  int output_size() const noexcept { return static_cast<int>(embedding.rows()); }
  int layer_width() const noexcept { return 2 * config.hidden; }
};

/// Trains both directions on the given utterances. Throws Error{EmptyCorpus},
/// Error{InvalidConfig}, Error{DimensionMismatch} or Error{DivergenceDetected}.
BiLMModel train_bilm(const std::vector<std::vector<std::string>>& utterances, const BiLMConfig& config);

struct DirectionLoss {
  double forward = 0.0;
  double backward = 0.0;
};

/// Mean per-token cross-entropy (nats) of each direction, including the
/// end-of-sequence prediction.
DirectionLoss bilm_cross_entropy(const BiLMModel& model, const std::vector<std::vector<std::string>>& utterances);

/// L+1 vectors of width 2h per token. Unknown tokens read as <unk>.
/// Throws Error{EmptySequence}.
std::vector<std::vector<Eigen::VectorXd>> layer_representations(std::span<const std::string> tokens,
                                                                const BiLMModel& model);

// ------------------------------------------------------------------ mixing

struct MixingHead {
  Eigen::VectorXd logits;  // w, length L+1
  double gamma = 1.0;
  bool layer_norm = false;  // normalize each layer vector before mixing

  static MixingHead uniform(int layers);
  Eigen::VectorXd weights() const;  // softmax(w)
};

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& w);

/// Zero mean, unit population variance. A constant vector maps to zeros.
Eigen::VectorXd normalize_layer(const Eigen::Ref<const Eigen::VectorXd>& v);

/// gamma * sum_j softmax(w)_j * layers[j]. Throws Error{DimensionMismatch}.
Eigen::VectorXd mix(const std::vector<Eigen::VectorXd>& layers, const MixingHead& head);

/// (L+1) x 2h matrix whose row j is layer j averaged over every token of
/// every utterance (normalized per token first when layer_norm is set).
/// Throws Error{EmptySequence}.
Eigen::MatrixXd pooled_layers(const std::vector<std::vector<std::string>>& utterances, const BiLMModel& model,
                              bool layer_norm);

/// Mean of the mixed token vectors of a document. Throws Error{EmptySequence}.
Eigen::VectorXd embed_document(const std::vector<std::vector<std::string>>& utterances, const BiLMModel& model,
                               const MixingHead& head);

/// Applies a head to pooled layers.
Eigen::VectorXd mix_pooled(const Eigen::MatrixXd& pooled, const MixingHead& head);

// ---------------------------------------------------- joint head fitting

/// Training data for fitting the head together with a logistic regression.
/// Row i of `other` holds the features preceding the contextual block;
/// layers[j] row i is document i's pooled layer j.
struct MixingProblem {
  Eigen::MatrixXd other;                // n x d (d may be 0)
  std::vector<Eigen::MatrixXd> layers;  // L+1 matrices, n x m
  std::vector<int> labels;
  double c = 1.0;
};

struct JointParams {
  Eigen::VectorXd weights;  // d + m logistic weights
  double bias = 0.0;
  Eigen::VectorXd logits;   // L+1
  double gamma = 1.0;
};

/// Mean log loss + (1/(2c)) * (||weights||^2 + (gamma - 1)^2), evaluated
/// with the contextual block built by the head. Writes the gradient when set.
double joint_objective(const MixingProblem& problem, const JointParams& params, JointParams* grad = nullptr);

/// Feature matrix [other, mixed contextual block] for a given head.
Eigen::MatrixXd joint_features(const MixingProblem& problem, const MixingHead& head);

struct JointFit {
  MixingHead head;
  classifiers::LogisticModel logistic;
  double frozen_loss = 0.0;  // objective with the initial head held fixed
  double loss = 0.0;
};

/// Trains the logistic model with `initial` frozen, then, when `joint` is set,
/// continues on weights, bias, logits and gamma together from that point.
/// Throws Error{DivergenceDetected} and the logistic training errors.
JointFit fit_mixing_head(const MixingProblem& problem, const MixingHead& initial, bool joint = true,
                         int max_iterations = 2000);

}  // namespace adscan::context
