#include "adscan/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adscan/error.hpp"
#include "adscan/optimize.hpp"

namespace adscan::classifiers {

namespace {

// log(1 + exp(z)) without overflow
double softplus(double z) noexcept { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_training_input(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(x.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteFeatures, "feature matrix has NaN or Inf");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::InvalidConfig, "labels must be 0 or 1");
    (v ? has1 : has0) = true;
  }
  if (!(has0 && has1)) throw Error(ErrorCode::SingleClassTraining, "training labels contain one class");
}

}  // namespace

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> y, double c, const Eigen::VectorXd& w,
                          double b, Eigen::VectorXd* grad_w, double* grad_b) {
  const auto n = x.rows();
  Eigen::VectorXd z = x * w;
  z.array() += b;
  double loss = 0.0;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    loss += softplus(z[i]) - y[static_cast<std::size_t>(i)] * z[i];
    r[i] = sigmoid(z[i]) - y[static_cast<std::size_t>(i)];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss = loss * inv_n + 0.5 / c * w.squaredNorm();
  if (grad_w) *grad_w = x.transpose() * r * inv_n + w / c;
  if (grad_b) *grad_b = r.sum() * inv_n;
  return loss;
}

LogisticModel logreg_train(const Eigen::MatrixXd& x, std::span<const int> y, double c,
                           const LogisticOptions& options) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::InvalidConfig, "c must be positive and finite");
  check_training_input(x, y);
  const auto d = x.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  if (options.initial) {
    if (options.initial->size() != d + 1) throw Error(ErrorCode::DimensionMismatch, "initial point size");
    theta = *options.initial;
  }
  optim::Objective f = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
    Eigen::VectorXd gw;
    double gb = 0.0;
    const double v = logistic_objective(x, y, c, t.head(d), t[d], &gw, &gb);
    g.head(d) = gw;
    g[d] = gb;
    return v;
  };
  optim::LbfgsOptions lo;
  lo.max_iterations = options.max_iterations;
  lo.gradient_tolerance = options.gradient_tolerance;
  auto res = optim::minimize_lbfgs(f, theta, lo);
  if (!res.x.allFinite()) throw Error(ErrorCode::DivergenceDetected, "logistic weights became non-finite");

  LogisticModel m;
  m.weights = res.x.head(d);
  m.bias = res.x[d];
  m.c = c;
  return m;
}

double logreg_predict_proba(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.weights.size())
    throw Error(ErrorCode::SchemaMismatch, "vector has " + std::to_string(x.size()) + " features, model expects " +
                                               std::to_string(model.weights.size()));
  return sigmoid(model.weights.dot(x) + model.bias);
}

Eigen::VectorXd logreg_predict_batch(const LogisticModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.weights.size())
    throw Error(ErrorCode::SchemaMismatch, "matrix has " + std::to_string(x.cols()) + " features, model expects " +
                                               std::to_string(model.weights.size()));
  Eigen::VectorXd z = x * model.weights;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sigmoid(z[i] + model.bias);
  return z;
}

// ------------------------------------------------------------------- tree

double impurity(Criterion criterion, double positives, double total) noexcept {
  if (total <= 0) return 0.0;
  const double p = positives / total;
  const double q = 1.0 - p;
  if (criterion == Criterion::Gini) return 1.0 - p * p - q * q;
  double h = 0.0;
  if (p > 0) h -= p * std::log2(p);
  if (q > 0) h -= q * std::log2(q);
  return h;
}

std::optional<SplitChoice> best_split(const Eigen::MatrixXd& x, std::span<const int> y,
                                      std::span<const std::size_t> rows, Criterion criterion) {
  const double n = static_cast<double>(rows.size());
  double pos = 0;
  for (auto r : rows) pos += y[r];
  const double parent = impurity(criterion, pos, n);

  std::optional<SplitChoice> best;
  std::vector<std::size_t> order(rows.begin(), rows.end());
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
    double left_n = 0, left_pos = 0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      left_n += 1;
      left_pos += y[order[k]];
      const double v = x(order[k], f), next = x(order[k + 1], f);
      if (!(v < next)) continue;
      const double right_n = n - left_n;
      const double dec = parent - (left_n / n) * impurity(criterion, left_pos, left_n) -
                         (right_n / n) * impurity(criterion, pos - left_pos, right_n);
      if (!best || dec > best->decrease + 1e-12) best = SplitChoice{static_cast<std::size_t>(f), 0.5 * (v + next), dec};
    }
  }
  return best;
}

namespace {

int grow(DecisionTreeModel& model, const Eigen::MatrixXd& x, std::span<const int> y, std::vector<std::size_t> rows,
         int depth) {
  TreeNode node;
  node.samples = rows.size();
  double pos = 0;
  for (auto r : rows) pos += y[r];
  node.p1 = rows.empty() ? 0.0 : pos / static_cast<double>(rows.size());
  const int id = static_cast<int>(model.nodes.size());
  model.nodes.push_back(node);

  const bool pure = pos == 0 || pos == static_cast<double>(rows.size());
  if (pure || rows.size() < 2 || (model.max_depth && depth >= *model.max_depth)) return id;
  auto split = best_split(x, y, rows, model.criterion);
  if (!split) return id;

  std::vector<std::size_t> left, right;
  for (auto r : rows) (x(r, static_cast<Eigen::Index>(split->feature)) <= split->threshold ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  const int l = grow(model, x, y, std::move(left), depth + 1);
  const int r = grow(model, x, y, std::move(right), depth + 1);
  auto& n = model.nodes[static_cast<std::size_t>(id)];
  n.feature = static_cast<int>(split->feature);
  n.threshold = split->threshold;
  n.left = l;
  n.right = r;
  return id;
}

}  // namespace

DecisionTreeModel tree_train(const Eigen::MatrixXd& x, std::span<const int> y, Criterion criterion,
                             std::optional<int> max_depth) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::LengthMismatch, "rows vs labels");
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteFeatures, "feature matrix has NaN or Inf");
  if (y.empty()) throw Error(ErrorCode::TooFewSamples, "no training samples");
  DecisionTreeModel model;
  model.criterion = criterion;
  model.max_depth = max_depth;
  model.n_features = static_cast<std::size_t>(x.cols());
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), 0);
  grow(model, x, y, std::move(rows), 0);
  return model;
}

double tree_predict_proba(const DecisionTreeModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != model.n_features)
    throw Error(ErrorCode::SchemaMismatch, "vector has " + std::to_string(x.size()) + " features, tree expects " +
                                               std::to_string(model.n_features));
  std::size_t i = 0;
  while (!model.nodes[i].is_leaf()) {
    const auto& n = model.nodes[i];
    i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
  }
  return model.nodes[i].p1;
}

Eigen::VectorXd tree_predict_batch(const DecisionTreeModel& model, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[r] = tree_predict_proba(model, x.row(r).transpose());
  return out;
}

}  // namespace adscan::classifiers
