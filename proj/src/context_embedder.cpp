#include "adscan/context_embedder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adscan/error.hpp"
#include "adscan/optimize.hpp"

namespace adscan::context {

namespace {

double sigm(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

// ------------------------------------------------------------------- LSTM

LstmTrace lstm_forward(const LstmLayer& layer, const Eigen::MatrixXd& x) {
  const int h = layer.hidden();
  const auto steps = x.cols();
  LstmTrace t;
  t.x = x;
  t.gates = layer.w * x;
  t.gates.colwise() += layer.b.col(0);
  t.c.resize(h, steps);
  t.h.resize(h, steps);
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h), c_prev = Eigen::VectorXd::Zero(h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    auto g = t.gates.col(s);
    g.noalias() += layer.u * h_prev;
    for (int k = 0; k < h; ++k) {
      g[k] = sigm(g[k]);
      g[h + k] = sigm(g[h + k]);
      g[2 * h + k] = std::tanh(g[2 * h + k]);
      g[3 * h + k] = sigm(g[3 * h + k]);
    }
    c_prev = g.segment(h, h).cwiseProduct(c_prev) + g.head(h).cwiseProduct(g.segment(2 * h, h));
    h_prev = g.tail(h).cwiseProduct(c_prev.array().tanh().matrix());
    t.c.col(s) = c_prev;
    t.h.col(s) = h_prev;
  }
  return t;
}

LstmGrad lstm_backward(const LstmLayer& layer, const LstmTrace& trace, const Eigen::MatrixXd& dh) {
  const int h = layer.hidden();
  const auto steps = trace.x.cols();
  Eigen::MatrixXd dpre(4 * h, steps);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h), dc_next = Eigen::VectorXd::Zero(h);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const auto g = trace.gates.col(s);
    const Eigen::VectorXd tc = trace.c.col(s).array().tanh();
    const Eigen::VectorXd dht = dh.col(s) + dh_next;
    Eigen::VectorXd dc = dc_next + dht.cwiseProduct(g.tail(h)).cwiseProduct((1.0 - tc.array().square()).matrix());
    for (int k = 0; k < h; ++k) {
      const double i = g[k], f = g[h + k], gg = g[2 * h + k], o = g[3 * h + k];
      const double c_prev = s > 0 ? trace.c(k, s - 1) : 0.0;
      dpre(k, s) = dc[k] * gg * i * (1 - i);
      dpre(h + k, s) = dc[k] * c_prev * f * (1 - f);
      dpre(2 * h + k, s) = dc[k] * i * (1 - gg * gg);
      dpre(3 * h + k, s) = dht[k] * tc[k] * o * (1 - o);
    }
    dc_next = dc.cwiseProduct(g.segment(h, h));
    dh_next.noalias() = layer.u.transpose() * dpre.col(s);
  }
  LstmGrad grad;
  grad.w.noalias() = dpre * trace.x.transpose();
  grad.u = Eigen::MatrixXd::Zero(4 * h, h);
  if (steps > 1) grad.u.noalias() = dpre.rightCols(steps - 1) * trace.h.leftCols(steps - 1).transpose();
  grad.b = dpre.rowwise().sum();
  grad.x.noalias() = layer.w.transpose() * dpre;
  return grad;
}

// ------------------------------------------------------------------- biLM

void BiLMConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "bilm: " + m); };
  if (layers < 1) bad("layers must be >= 1");
  if (hidden < 1 || embedding < 1) bad("sizes must be >= 1");
  if (epochs < 0) bad("epochs must be >= 0");
  if (!(learning_rate > 0)) bad("learning_rate must be positive");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (!(clip_norm > 0)) bad("clip_norm must be positive");
  if (embedding != hidden)
    throw Error(ErrorCode::DimensionMismatch, "bilm: embedding size " + std::to_string(embedding) +
                                                  " must equal hidden size " + std::to_string(hidden));
}

int BiLMModel::token_id(const std::string& token) const {
  auto i = vocabulary.find(token);
  return i ? 3 + static_cast<int>(*i) : kUnk;
}

namespace {

std::vector<int> encode(const BiLMModel& m, std::span<const std::string> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(m.token_id(t));
  return ids;
}

struct DirectionTrace {
  std::vector<LstmTrace> layers;
};

// Runs one direction over `ids` (already in reading order).
DirectionTrace run_direction(const BiLMModel& m, const std::vector<LstmLayer>& stack, const std::vector<int>& ids) {
  Eigen::MatrixXd x(m.config.embedding, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t s = 0; s < ids.size(); ++s) x.col(static_cast<Eigen::Index>(s)) = m.embedding.row(ids[s]).transpose();
  DirectionTrace tr;
  tr.layers.reserve(stack.size());
  for (const auto& layer : stack) {
    tr.layers.push_back(lstm_forward(layer, tr.layers.empty() ? x : tr.layers.back().h));
  }
  return tr;
}

// Softmax cross-entropy summed over steps; writes dLoss/dlogits in place.
double output_loss(const Eigen::MatrixXd& out, const Eigen::MatrixXd& bias, const Eigen::MatrixXd& top,
                   const std::vector<int>& targets, Eigen::MatrixXd* dlogits) {
  Eigen::MatrixXd logits = out * top;
  logits.colwise() += bias.col(0);
  double loss = 0;
  for (Eigen::Index s = 0; s < logits.cols(); ++s) {
    auto col = logits.col(s);
    const double mx = col.maxCoeff();
    col.array() = (col.array() - mx).exp();
    const double z = col.sum();
    const int t = targets[static_cast<std::size_t>(s)];
    loss += std::log(z) - std::log(col[t]);
    col /= z;
    col[t] -= 1.0;
  }
  if (dlogits) *dlogits = std::move(logits);
  return loss;
}

struct Gradients {
  Eigen::MatrixXd embedding, forward_out, forward_bias, backward_out, backward_bias;
  std::vector<LstmGrad> forward, backward;

  explicit Gradients(const BiLMModel& m)
      : embedding(Eigen::MatrixXd::Zero(m.embedding.rows(), m.embedding.cols())),
        forward_out(Eigen::MatrixXd::Zero(m.forward_out.rows(), m.forward_out.cols())),
        forward_bias(Eigen::MatrixXd::Zero(m.forward_bias.rows(), 1)),
        backward_out(Eigen::MatrixXd::Zero(m.backward_out.rows(), m.backward_out.cols())),
        backward_bias(Eigen::MatrixXd::Zero(m.backward_bias.rows(), 1)) {
    for (const auto* stack : {&m.forward, &m.backward}) {
      auto& dst = stack == &m.forward ? forward : backward;
      for (const auto& l : *stack)
        dst.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()), Eigen::MatrixXd::Zero(l.u.rows(), l.u.cols()),
                       Eigen::MatrixXd::Zero(l.b.rows(), 1), {}});
    }
  }

  std::vector<Eigen::MatrixXd*> all() {
    std::vector<Eigen::MatrixXd*> p{&embedding, &forward_out, &forward_bias, &backward_out, &backward_bias};
    for (auto* stack : {&forward, &backward})
      for (auto& g : *stack) p.insert(p.end(), {&g.w, &g.u, &g.b});
    return p;
  }
};

std::vector<Eigen::MatrixXd*> parameters(BiLMModel& m) {
  std::vector<Eigen::MatrixXd*> p{&m.embedding, &m.forward_out, &m.forward_bias, &m.backward_out, &m.backward_bias};
  for (auto* stack : {&m.forward, &m.backward})
    for (auto& l : *stack) p.insert(p.end(), {&l.w, &l.u, &l.b});
  return p;
}

// Loss and gradient of one direction; accumulates into the given slots.
double direction_step(const BiLMModel& m, bool fwd, const std::vector<int>& ids, Gradients* g) {
  std::vector<int> seq = ids, targets;
  if (!fwd) std::reverse(seq.begin(), seq.end());
  targets.assign(seq.begin() + 1, seq.end());
  targets.push_back(fwd ? BiLMModel::kEos : BiLMModel::kBos);

  const auto& stack = fwd ? m.forward : m.backward;
  const auto& out = fwd ? m.forward_out : m.backward_out;
  const auto& bias = fwd ? m.forward_bias : m.backward_bias;
  auto tr = run_direction(m, stack, seq);
  Eigen::MatrixXd dlogits;
  const double loss = output_loss(out, bias, tr.layers.back().h, targets, g ? &dlogits : nullptr);
  if (!g) return loss;

  (fwd ? g->forward_out : g->backward_out).noalias() += dlogits * tr.layers.back().h.transpose();
  (fwd ? g->forward_bias : g->backward_bias) += dlogits.rowwise().sum();
  Eigen::MatrixXd dh = out.transpose() * dlogits;
  auto& gstack = fwd ? g->forward : g->backward;
  for (std::size_t l = stack.size(); l-- > 0;) {
    auto lg = lstm_backward(stack[l], tr.layers[l], dh);
    gstack[l].w += lg.w;
    gstack[l].u += lg.u;
    gstack[l].b += lg.b;
    dh = std::move(lg.x);
  }
  for (std::size_t s = 0; s < seq.size(); ++s) g->embedding.row(seq[s]) += dh.col(static_cast<Eigen::Index>(s)).transpose();
  return loss;
}

void init_uniform(Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-r, r);
  m.resize(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
}

LstmLayer make_layer(int in, int h, std::mt19937_64& rng) {
  LstmLayer l;
  const double r = 1.0 / std::sqrt(static_cast<double>(h));
  init_uniform(l.w, 4 * h, in, r, rng);
  init_uniform(l.u, 4 * h, h, r, rng);
  l.b = Eigen::MatrixXd::Zero(4 * h, 1);
  l.b.block(h, 0, h, 1).setOnes();  // forget gate starts open
  return l;
}

}  // namespace

BiLMModel train_bilm(const std::vector<std::vector<std::string>>& utterances, const BiLMConfig& config) {
  config.validate();
  std::vector<std::vector<std::string>> kept;
  for (const auto& u : utterances)
    if (!u.empty()) kept.push_back(u);
  if (kept.empty()) throw Error(ErrorCode::EmptyCorpus, "bilm: no non-empty utterances");

  BiLMModel m;
  m.config = config;
  m.vocabulary = TokenIndex::from_documents(kept, config.min_count);
  std::mt19937_64 rng(config.seed);
  const int h = config.hidden, v = 3 + static_cast<int>(m.vocabulary.size());
  init_uniform(m.embedding, v, config.embedding, 0.1, rng);
  for (int l = 0; l < config.layers; ++l) m.forward.push_back(make_layer(l == 0 ? config.embedding : h, h, rng));
  for (int l = 0; l < config.layers; ++l) m.backward.push_back(make_layer(l == 0 ? config.embedding : h, h, rng));
  const double r = 1.0 / std::sqrt(static_cast<double>(h));
  init_uniform(m.forward_out, v, h, r, rng);
  init_uniform(m.backward_out, v, h, r, rng);
  m.forward_bias = Eigen::MatrixXd::Zero(v, 1);
  m.backward_bias = Eigen::MatrixXd::Zero(v, 1);

  std::vector<std::vector<int>> seqs;
  for (const auto& u : kept) seqs.push_back(encode(m, u));
  std::size_t total_tokens = 0;
  for (const auto& s : seqs) total_tokens += s.size();

  // Adam
  auto params = parameters(m);
  std::vector<Eigen::MatrixXd> m1, m2;
  for (auto* p : params) {
    m1.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    m2.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double lf = 0, lb = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      Gradients g(m);
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::size_t batch_tokens = 0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& ids = seqs[order[k]];
        lf += direction_step(m, true, ids, &g);
        lb += direction_step(m, false, ids, &g);
        batch_tokens += ids.size();
      }
      auto grads = g.all();
      double norm2 = 0;
      for (auto* gr : grads) {
        *gr /= static_cast<double>(batch_tokens);
        norm2 += gr->squaredNorm();
      }
      const double norm = std::sqrt(norm2);
      if (!std::isfinite(norm))
        throw Error(ErrorCode::DivergenceDetected, "bilm: non-finite gradient in epoch " + std::to_string(epoch + 1));
      const double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
      ++step;
      const double c1 = 1 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        const Eigen::MatrixXd gr = *grads[p] * scale;
        m1[p] = beta1 * m1[p] + (1 - beta1) * gr;
        m2[p] = beta2 * m2[p] + (1 - beta2) * gr.cwiseAbs2();
        params[p]->array() -=
            config.learning_rate * (m1[p].array() / c1) / ((m2[p].array() / c2).sqrt() + eps);
      }
    }
    lf /= static_cast<double>(total_tokens);
    lb /= static_cast<double>(total_tokens);
    if (!std::isfinite(lf) || !std::isfinite(lb))
      throw Error(ErrorCode::DivergenceDetected, "bilm: non-finite loss in epoch " + std::to_string(epoch + 1));
    m.forward_loss.push_back(lf);
    m.backward_loss.push_back(lb);
  }
  return m;
}

DirectionLoss bilm_cross_entropy(const BiLMModel& model, const std::vector<std::vector<std::string>>& utterances) {
  DirectionLoss loss;
  std::size_t n = 0;
  for (const auto& u : utterances) {
    if (u.empty()) continue;
    auto ids = encode(model, u);
    loss.forward += direction_step(model, true, ids, nullptr);
    loss.backward += direction_step(model, false, ids, nullptr);
    n += ids.size();
  }
  if (n == 0) throw Error(ErrorCode::EmptySequence, "bilm: nothing to score");
  loss.forward /= static_cast<double>(n);
  loss.backward /= static_cast<double>(n);
  return loss;
}

std::vector<std::vector<Eigen::VectorXd>> layer_representations(std::span<const std::string> tokens,
                                                                const BiLMModel& model) {
  if (tokens.empty()) throw Error(ErrorCode::EmptySequence, "bilm: empty token sequence");
  auto ids = encode(model, tokens);
  auto fwd = run_direction(model, model.forward, ids);
  std::vector<int> rev(ids.rbegin(), ids.rend());
  auto bwd = run_direction(model, model.backward, rev);

  const auto n = static_cast<Eigen::Index>(ids.size());
  const int h = model.config.hidden;
  std::vector<std::vector<Eigen::VectorXd>> out(ids.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    auto& r = out[static_cast<std::size_t>(k)];
    Eigen::VectorXd x0(2 * h);
    x0 << model.embedding.row(ids[static_cast<std::size_t>(k)]).transpose(),
        model.embedding.row(ids[static_cast<std::size_t>(k)]).transpose();
    r.push_back(std::move(x0));
    for (std::size_t l = 0; l < model.forward.size(); ++l) {
      Eigen::VectorXd v(2 * h);
      v << fwd.layers[l].h.col(k), bwd.layers[l].h.col(n - 1 - k);
      r.push_back(std::move(v));
    }
  }
  return out;
}

// ------------------------------------------------------------------ mixing

MixingHead MixingHead::uniform(int layers) {
  MixingHead h;
  h.logits = Eigen::VectorXd::Zero(layers + 1);
  return h;
}

Eigen::VectorXd MixingHead::weights() const { return softmax(logits); }

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& w) {
  Eigen::VectorXd s = (w.array() - w.maxCoeff()).exp();
  return s / s.sum();
}

Eigen::VectorXd normalize_layer(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double mean = v.mean();
  Eigen::VectorXd c = v.array() - mean;
  const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(v.size()));
  if (sd == 0.0) return Eigen::VectorXd::Zero(v.size());
  return c / sd;
}

Eigen::VectorXd mix(const std::vector<Eigen::VectorXd>& layers, const MixingHead& head) {
  if (static_cast<Eigen::Index>(layers.size()) != head.logits.size())
    throw Error(ErrorCode::DimensionMismatch, "mixing head has " + std::to_string(head.logits.size()) +
                                                  " weights for " + std::to_string(layers.size()) + " layers");
  if (layers.empty()) throw Error(ErrorCode::DimensionMismatch, "no layers to mix");
  const Eigen::VectorXd s = head.weights();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layers[0].size());
  for (std::size_t j = 0; j < layers.size(); ++j) {
    if (layers[j].size() != out.size()) throw Error(ErrorCode::DimensionMismatch, "layer widths differ");
    out += s[static_cast<Eigen::Index>(j)] * (head.layer_norm ? normalize_layer(layers[j]) : layers[j]);
  }
  return head.gamma * out;
}

Eigen::MatrixXd pooled_layers(const std::vector<std::vector<std::string>>& utterances, const BiLMModel& model,
                              bool layer_norm) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(model.config.layers + 1, model.layer_width());
  std::size_t n = 0;
  for (const auto& u : utterances) {
    if (u.empty()) continue;
    for (const auto& r : layer_representations(u, model)) {
      for (std::size_t j = 0; j < r.size(); ++j)
        sum.row(static_cast<Eigen::Index>(j)) += (layer_norm ? normalize_layer(r[j]) : r[j]).transpose();
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptySequence, "document has no tokens");
  return sum / static_cast<double>(n);
}

Eigen::VectorXd mix_pooled(const Eigen::MatrixXd& pooled, const MixingHead& head) {
  if (pooled.rows() != head.logits.size())
    throw Error(ErrorCode::DimensionMismatch, "mixing head has " + std::to_string(head.logits.size()) +
                                                  " weights for " + std::to_string(pooled.rows()) + " layers");
  return head.gamma * (pooled.transpose() * head.weights());
}

Eigen::VectorXd embed_document(const std::vector<std::vector<std::string>>& utterances, const BiLMModel& model,
                               const MixingHead& head) {
  return mix_pooled(pooled_layers(utterances, model, head.layer_norm), head);
}

// ---------------------------------------------------- joint head fitting

namespace {

void check_problem(const MixingProblem& p) {
  if (p.layers.empty()) throw Error(ErrorCode::DimensionMismatch, "mixing problem has no layers");
  const auto n = p.layers[0].rows();
  for (const auto& l : p.layers)
    if (l.rows() != n || l.cols() != p.layers[0].cols()) throw Error(ErrorCode::DimensionMismatch, "layer blocks differ");
  if (p.other.rows() != n || static_cast<std::size_t>(n) != p.labels.size())
    throw Error(ErrorCode::LengthMismatch, "mixing problem row counts differ");
}

}  // namespace

Eigen::MatrixXd joint_features(const MixingProblem& problem, const MixingHead& head) {
  check_problem(problem);
  if (static_cast<std::size_t>(head.logits.size()) != problem.layers.size())
    throw Error(ErrorCode::DimensionMismatch, "head size does not match layer count");
  const Eigen::VectorXd s = head.weights();
  const auto n = problem.other.rows(), d = problem.other.cols(), m = problem.layers[0].cols();
  Eigen::MatrixXd x(n, d + m);
  x.leftCols(d) = problem.other;
  x.rightCols(m).setZero();
  for (std::size_t j = 0; j < problem.layers.size(); ++j)
    x.rightCols(m) += head.gamma * s[static_cast<Eigen::Index>(j)] * problem.layers[j];
  return x;
}

double joint_objective(const MixingProblem& problem, const JointParams& params, JointParams* grad) {
  const auto n = problem.other.rows(), d = problem.other.cols(), m = problem.layers[0].cols();
  const auto layers = static_cast<Eigen::Index>(problem.layers.size());
  const Eigen::VectorXd s = softmax(params.logits);
  const auto wc = params.weights.tail(m);

  // q.col(j) = Z_j wc, the contextual score each layer would contribute alone
  Eigen::MatrixXd q(n, layers);
  for (Eigen::Index j = 0; j < layers; ++j) q.col(j) = problem.layers[static_cast<std::size_t>(j)] * wc;
  Eigen::VectorXd z = problem.other * params.weights.head(d) + params.gamma * (q * s);
  z.array() += params.bias;

  double loss = 0;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = z[i];
    const int yi = problem.labels[static_cast<std::size_t>(i)];
    loss += (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) - yi * zi;
    r[i] = sigm(zi) - yi;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double dg = params.gamma - 1.0;
  loss = loss * inv_n + 0.5 / problem.c * (params.weights.squaredNorm() + dg * dg);
  if (!grad) return loss;

  r *= inv_n;
  grad->weights.resize(d + m);
  grad->weights.head(d) = problem.other.transpose() * r;
  Eigen::VectorXd gc = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < layers; ++j)
    gc += params.gamma * s[j] * (problem.layers[static_cast<std::size_t>(j)].transpose() * r);
  grad->weights.tail(m) = gc;
  grad->weights += params.weights / problem.c;
  grad->bias = r.sum();
  const Eigen::VectorXd qs = q * s;  // per document, sum_l s_l q_l
  grad->gamma = r.dot(qs) + dg / problem.c;
  grad->logits.resize(layers);
  for (Eigen::Index j = 0; j < layers; ++j) grad->logits[j] = params.gamma * s[j] * r.dot(q.col(j) - qs);
  return loss;
}

JointFit fit_mixing_head(const MixingProblem& problem, const MixingHead& initial, bool joint, int max_iterations) {
  JointFit fit;
  classifiers::LogisticOptions lo;
  lo.max_iterations = max_iterations;
  fit.logistic = classifiers::logreg_train(joint_features(problem, initial), problem.labels, problem.c, lo);
  fit.head = initial;

  JointParams start{fit.logistic.weights, fit.logistic.bias, initial.logits, initial.gamma};
  fit.frozen_loss = joint_objective(problem, start);
  fit.loss = fit.frozen_loss;
  if (!joint) return fit;

  const auto nw = start.weights.size(), nl = start.logits.size();
  auto unpack = [&](const Eigen::VectorXd& t) {
    return JointParams{t.head(nw), t[nw], t.segment(nw + 1, nl), t[nw + 1 + nl]};
  };
  optim::Objective f = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
    JointParams gp;
    const double v = joint_objective(problem, unpack(t), &gp);
    g << gp.weights, gp.bias, gp.logits, gp.gamma;
    return v;
  };
  Eigen::VectorXd x0(nw + nl + 2);
  x0 << start.weights, start.bias, start.logits, start.gamma;
  optim::LbfgsOptions opt;
  opt.max_iterations = max_iterations;
  auto res = optim::minimize_lbfgs(f, x0, opt);
  if (!res.x.allFinite() || !std::isfinite(res.value))
    throw Error(ErrorCode::DivergenceDetected, "mixing head fit became non-finite");
  auto p = unpack(res.x);
  fit.logistic.weights = p.weights;
  fit.logistic.bias = p.bias;
  fit.head.logits = p.logits;
  fit.head.gamma = p.gamma;
  fit.loss = res.value;
  return fit;
}

}  // namespace adscan::context
