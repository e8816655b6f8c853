#pragma once

// L2-regularized logistic regression and a CART-style decision tree.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace adscan::classifiers {

double sigmoid(double z) noexcept;

// ---------------------------------------------------------------- logistic

/// Minimizes mean log loss + (1/c) * 0.5 * ||w||^2; the bias is not penalized.
struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double c = 1.0;  // inverse regularization strength
  std::uint64_t schema_hash = 0;
};

struct LogisticOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;
  /// Starting point [w; b]; zero when absent.
  std::optional<Eigen::VectorXd> initial;
};

/// Objective value at (w, b). Gradients are written when the pointers are set.
double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> y, double c, const Eigen::VectorXd& w,
                          double b, Eigen::VectorXd* grad_w = nullptr, double* grad_b = nullptr);

/// Throws Error{SingleClassTraining}, Error{NonFiniteFeatures},
/// Error{LengthMismatch} or Error{InvalidConfig} (c <= 0).
LogisticModel logreg_train(const Eigen::MatrixXd& x, std::span<const int> y, double c,
                           const LogisticOptions& options = {});

/// Throws Error{SchemaMismatch} when x has the wrong dimension.
double logreg_predict_proba(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd logreg_predict_batch(const LogisticModel& model, const Eigen::MatrixXd& x);

// ------------------------------------------------------------------- tree

enum class Criterion { Gini, Entropy };

/// Impurity of a node holding `positives` of `total` samples.
double impurity(Criterion criterion, double positives, double total) noexcept;

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double p1 = 0.0;  // class-1 share of the training samples at the node
  std::size_t samples = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  Criterion criterion = Criterion::Gini;
  std::optional<int> max_depth;
  std::size_t n_features = 0;
};

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;
};

/// Best non-trivial split of the given rows: largest impurity decrease, ties
/// broken by lowest feature index then lowest threshold. Thresholds are
/// midpoints between consecutive distinct values. nullopt if no feature varies.
std::optional<SplitChoice> best_split(const Eigen::MatrixXd& x, std::span<const int> y,
                                      std::span<const std::size_t> rows, Criterion criterion);

/// Single-class input yields a single constant leaf.
DecisionTreeModel tree_train(const Eigen::MatrixXd& x, std::span<const int> y, Criterion criterion,
                             std::optional<int> max_depth = std::nullopt);

double tree_predict_proba(const DecisionTreeModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd tree_predict_batch(const DecisionTreeModel& model, const Eigen::MatrixXd& x);

}  // namespace adscan::classifiers
