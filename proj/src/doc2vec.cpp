#include "adscan/doc2vec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "adscan/error.hpp"

namespace adscan::doc2vec {

namespace {

// Softmax of V u in place; returns log-sum-exp.
double softmax_scores(const Eigen::MatrixXd& words, const Eigen::Ref<const Eigen::VectorXd>& u, Eigen::VectorXd& p) {
  p.noalias() = words * u;
  const double mx = p.maxCoeff();
  p.array() = (p.array() - mx).exp();
  const double z = p.sum();
  p /= z;
  return mx + std::log(z);
}

void init_uniform(Eigen::MatrixXd& m, std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-0.5 / n, 0.5 / n);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = u(rng);
}

struct Pair {
  int target;
  int context;
  bool is_doc;
};

class NegativeSampler {
 public:
  NegativeSampler(const std::vector<std::vector<int>>& docs, std::size_t vocab) {
    std::vector<double> counts(vocab, 0.0);
    for (const auto& d : docs)
      for (int w : d) counts[static_cast<std::size_t>(w)] += 1;
    for (auto& c : counts) c = std::pow(c, 0.75);
    dist_ = std::discrete_distribution<int>(counts.begin(), counts.end());
  }
  int operator()(std::mt19937_64& rng) { return dist_(rng); }

 private:
  std::discrete_distribution<int> dist_;
};

double sigmoid(double z) { return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z)); }

// Row holding the context vector of a pair.
Eigen::Block<Eigen::MatrixXd, 1, Eigen::Dynamic> context_row(Eigen::MatrixXd& words, Eigen::MatrixXd& docs,
                                                             const Pair& pr) {
  return pr.is_doc ? docs.row(pr.context) : words.row(pr.context);
}

// One SGD step on -log softmax(target | u). Both gradients use the values
// from before the step; when u is itself a word row it receives both updates.
void sgd_full(Eigen::MatrixXd& words, Eigen::MatrixXd& docs, const Pair& pr, double lr, Eigen::VectorXd& p,
              Eigen::VectorXd& grad_u) {
  const Eigen::VectorXd u = context_row(words, docs, pr).transpose();
  softmax_scores(words, u, p);
  grad_u.noalias() = words.transpose() * p;
  grad_u -= words.row(pr.target).transpose();
  p[pr.target] -= 1.0;
  words.noalias() -= lr * p * u.transpose();
  context_row(words, docs, pr) -= lr * grad_u.transpose();
}

void sgd_negative(Eigen::MatrixXd& words, Eigen::MatrixXd& docs, const Pair& pr, double lr, int negatives,
                  NegativeSampler& sampler, std::mt19937_64& rng, Eigen::VectorXd& grad_u) {
  const Eigen::VectorXd u = context_row(words, docs, pr).transpose();
  grad_u.setZero(u.size());
  auto apply = [&](int k, double label) {
    const double g = sigmoid(words.row(k).dot(u)) - label;
    grad_u += g * words.row(k).transpose();
    words.row(k) -= lr * g * u.transpose();
  };
  apply(pr.target, 1.0);
  for (int s = 0; s < negatives; ++s) {
    const int k = sampler(rng);
    if (k != pr.target) apply(k, 0.0);
  }
  context_row(words, docs, pr) -= lr * grad_u.transpose();
}

}  // namespace

void Doc2VecConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "doc2vec: " + m); };
  if (vec_size < 1) bad("vec_size must be >= 1");
  if (window < 0) bad("window must be >= 0");
  if (epochs < 1) bad("epochs must be >= 1");
  if (infer_epochs < 0) bad("infer_epochs must be >= 0");
  if (!(alpha > 0) || !std::isfinite(alpha)) bad("alpha must be positive");
  if (!(min_alpha > 0) || min_alpha > alpha) bad("min_alpha must lie in (0, alpha]");
  if (negative_sampling && negatives < 1) bad("negatives must be >= 1");
}

std::vector<ContextSet> build_context(const std::vector<std::vector<int>>& docs, std::size_t vocab_size, int window) {
  std::vector<std::set<int>> words(vocab_size), ids(vocab_size);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    const auto len = static_cast<int>(doc.size());
    for (int p = 0; p < len; ++p) {
      const auto i = static_cast<std::size_t>(doc[static_cast<std::size_t>(p)]);
      ids[i].insert(static_cast<int>(d));
      for (int q = std::max(0, p - window); q <= std::min(len - 1, p + window); ++q)
        if (q != p) words[i].insert(doc[static_cast<std::size_t>(q)]);
    }
  }
  std::vector<ContextSet> out(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    out[i].words.assign(words[i].begin(), words[i].end());
    out[i].docs.assign(ids[i].begin(), ids[i].end());
  }
  return out;
}

double softmax_factor(const Eigen::MatrixXd& words, int target, const Eigen::Ref<const Eigen::VectorXd>& context) {
  Eigen::VectorXd p;
  softmax_scores(words, context, p);
  return p[target];
}

double softmax_context_prob(const Doc2VecModel& model, int target, const ContextSet& context) {
  double prob = 1.0;
  for (int j : context.words) prob *= softmax_factor(model.word_vectors, target, model.word_vectors.row(j).transpose());
  for (int d : context.docs) prob *= softmax_factor(model.word_vectors, target, model.doc_vectors.row(d).transpose());
  return prob;
}

double pair_loss(const Eigen::MatrixXd& words, int target, const Eigen::Ref<const Eigen::VectorXd>& context,
                 Eigen::MatrixXd* grad_words, Eigen::VectorXd* grad_context) {
  Eigen::VectorXd p;
  const double lse = softmax_scores(words, context, p);
  const double loss = lse - words.row(target).dot(context);
  if (grad_context) *grad_context = words.transpose() * p - words.row(target).transpose();
  if (grad_words) {
    p[target] -= 1.0;
    *grad_words = p * context.transpose();
  }
  return loss;
}

double context_objective(const Eigen::MatrixXd& words, const Eigen::MatrixXd& docs,
                         const std::vector<ContextSet>& contexts, Eigen::MatrixXd* grad_words,
                         Eigen::MatrixXd* grad_docs) {
  if (grad_words) grad_words->setZero(words.rows(), words.cols());
  if (grad_docs) grad_docs->setZero(docs.rows(), docs.cols());
  const bool want = grad_words || grad_docs;
  Eigen::MatrixXd gw;
  Eigen::VectorXd gu;
  double total = 0.0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const int target = static_cast<int>(i);
    for (int j : contexts[i].words) {
      total += pair_loss(words, target, words.row(j).transpose(), want ? &gw : nullptr, want ? &gu : nullptr);
      if (grad_words) {
        *grad_words += gw;
        grad_words->row(j) += gu.transpose();
      }
    }
    for (int d : contexts[i].docs) {
      total += pair_loss(words, target, docs.row(d).transpose(), want ? &gw : nullptr, want ? &gu : nullptr);
      if (grad_words) *grad_words += gw;
      if (grad_docs) grad_docs->row(d) += gu.transpose();
    }
  }
  return total;
}

Doc2VecModel train(const std::vector<std::vector<std::string>>& docs, const Doc2VecConfig& config) {
  config.validate();
  Doc2VecModel model;
  model.config = config;
  model.vocabulary = TokenIndex::from_documents(docs);
  if (model.vocabulary.empty()) throw Error(ErrorCode::EmptyCorpus, "doc2vec: corpus has no tokens");

  std::vector<std::vector<int>> encoded;
  encoded.reserve(docs.size());
  for (const auto& d : docs) encoded.push_back(model.vocabulary.encode(d));

  const auto m = static_cast<Eigen::Index>(model.vocabulary.size());
  const int n = config.vec_size;
  std::mt19937_64 rng(config.seed);
  model.word_vectors.resize(m, n);
  model.doc_vectors.resize(static_cast<Eigen::Index>(docs.size()), n);
  init_uniform(model.word_vectors, rng, n);
  init_uniform(model.doc_vectors, rng, n);

  const auto contexts = build_context(encoded, model.vocabulary.size(), config.window);
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    for (int j : contexts[i].words) pairs.push_back({static_cast<int>(i), j, false});
    for (int d : contexts[i].docs) pairs.push_back({static_cast<int>(i), d, true});
  }
  if (config.track_loss)
    model.loss_history.push_back(context_objective(model.word_vectors, model.doc_vectors, contexts));

  std::optional<NegativeSampler> sampler;
  if (config.negative_sampling) sampler.emplace(encoded, model.vocabulary.size());

  const double total_steps = static_cast<double>(pairs.size()) * config.epochs;
  double step = 0;
  Eigen::VectorXd p, grad_u;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (const auto& pr : pairs) {
      const double lr = config.alpha - (config.alpha - config.min_alpha) * (step / std::max(1.0, total_steps - 1));
      step += 1;
      if (sampler)
        sgd_negative(model.word_vectors, model.doc_vectors, pr, lr, config.negatives, *sampler, rng, grad_u);
      else
        sgd_full(model.word_vectors, model.doc_vectors, pr, lr, p, grad_u);
    }
    if (!model.word_vectors.allFinite() || !model.doc_vectors.allFinite())
      throw Error(ErrorCode::DivergenceDetected, "doc2vec: non-finite vectors after epoch " + std::to_string(epoch + 1));
    if (config.track_loss) {
      const double loss = context_objective(model.word_vectors, model.doc_vectors, contexts);
      if (!std::isfinite(loss))
        throw Error(ErrorCode::DivergenceDetected, "doc2vec: non-finite loss after epoch " + std::to_string(epoch + 1));
      model.loss_history.push_back(loss);
    }
  }
  return model;
}

Eigen::VectorXd infer_doc_vector(std::span<const std::string> tokens, const Doc2VecModel& model,
                                 const Doc2VecConfig& config) {
  config.validate();
  std::set<int> unique;
  for (const auto& t : tokens)
    if (auto i = model.vocabulary.find(t)) unique.insert(static_cast<int>(*i));
  if (unique.empty()) throw Error(ErrorCode::AllTokensOOV, "doc2vec: no known tokens to infer from");
  std::vector<int> targets(unique.begin(), unique.end());

  const int n = static_cast<int>(model.word_vectors.cols());
  std::mt19937_64 rng(config.seed);
  Eigen::MatrixXd u(1, n);
  init_uniform(u, rng, n);
  Eigen::VectorXd v = u.row(0).transpose();

  const int epochs = config.infer_epochs > 0 ? config.infer_epochs : config.epochs;
  const double total_steps = static_cast<double>(targets.size()) * epochs;
  double step = 0;
  Eigen::VectorXd p, grad;
  const auto& words = model.word_vectors;
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(targets.begin(), targets.end(), rng);
    for (int t : targets) {
      const double lr = config.alpha - (config.alpha - config.min_alpha) * (step / std::max(1.0, total_steps - 1));
      step += 1;
      softmax_scores(words, v, p);
      grad.noalias() = words.transpose() * p;
      grad -= words.row(t).transpose();
      v -= lr * grad;
    }
  }
  if (!v.allFinite()) throw Error(ErrorCode::DivergenceDetected, "doc2vec: inferred vector is non-finite");
  return v;
}

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double den = a.norm() * b.norm();
  return den > 0 ? a.dot(b) / den : 0.0;
}

}  // namespace adscan::doc2vec
