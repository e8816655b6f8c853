// Acceptance run: one PASS/FAIL line per criterion; exits nonzero when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "adscan/chat.hpp"
#include "adscan/classifiers.hpp"
#include "adscan/context_embedder.hpp"
#include "adscan/doc2vec.hpp"
#include "adscan/error.hpp"
#include "adscan/evaluation.hpp"
#include "adscan/experiment.hpp"
#include "adscan/synthetic.hpp"
#include "oracles.hpp"

using namespace adscan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------------ parsing

Outcome chat_parsing() {
  using namespace chat;
  Outcome o;
  auto kinds = [](const Utterance& u) {
    std::vector<EventKind> k;
    for (const auto& e : u.events) k.push_back(e.kind);
    return k;
  };

  const auto gab = parse_chat(RawChatDocument::from_text("***GAB: I want xxx .**", "gab"));
  const bool gab_ok = gab.utterances.size() == 1 && gab.utterances[0].speaker == "GAB" &&
                      gab.utterances[0].tokens == std::vector<std::string>{"I", "want"} &&
                      kinds(gab.utterances[0]) == std::vector<EventKind>{EventKind::Unintelligible};

  const auto dav = parse_chat(RawChatDocument::from_text("***DAV: <but but but> [/] but (.) it's a cat.**", "dav"));
  const bool dav_ok = dav.utterances.size() == 1 && dav.utterances[0].speaker == "DAV" &&
                      dav.utterances[0].tokens == std::vector<std::string>{"but", "it's", "a", "cat"} &&
                      kinds(dav.utterances[0]) == std::vector<EventKind>{EventKind::Retracing, EventKind::Pause};

  const auto dialogue = read_file(fs::path(ADSCAN_FIXTURES) / "dialogue_xxx.cha");
  const auto retrace = read_file(fs::path(ADSCAN_FIXTURES) / "retracing.cha");
  const auto both = parse_chat(RawChatDocument::from_text(dialogue + retrace, "both"));
  const auto counts = event_counts(both);
  const bool counts_ok = counts[EventKind::Unintelligible] == 2 && counts[EventKind::Retracing] == 1 &&
                         counts[EventKind::Pause] == 1 && counts[EventKind::Filler] == 0 &&
                         counts[EventKind::TrailingOff] == 0;

  // Arbitrary bytes: a Transcript or an adscan::Error, nothing else.
  std::mt19937_64 rng(20240601);
  const std::string alphabet = "*<>[]()/.&x: \t\n\r@%+\\-PARINVGAB";
  std::size_t parsed = 0, rejected = 0, crashed = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const auto len = rng() % 256;
    const bool raw = i % 2 == 0;
    for (std::size_t k = 0; k < len; ++k)
      s.push_back(raw ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()]);
    try {
      const auto t = parse_chat(RawChatDocument::from_text(s, "fuzz"));
      for (const auto& u : t.utterances)
        if (u.speaker.empty()) ++crashed;
      ++parsed;
    } catch (const Error&) {
      ++rejected;
    } catch (...) {
      ++crashed;
    }
  }
  o.pass = gab_ok && dav_ok && counts_ok && crashed == 0;
  o.detail = std::string("GAB ") + (gab_ok ? "ok" : "WRONG") + ", DAV " + (dav_ok ? "ok" : "WRONG") +
             ", dialogue counts " + (counts_ok ? "ok" : "WRONG") + "; fuzz 10000 inputs: " + std::to_string(parsed) +
             " parsed, " + std::to_string(rejected) + " structured errors, " + std::to_string(crashed) +
             " other failures";
  return o;
}

// ------------------------------------------------------------------ metrics

Outcome metric_oracles() {
  // Enumeration: sizes 2..6 take every label pattern with both classes and
  // every score vector over {0, 1, 2}; sizes 7..12 take every label pattern
  // with both classes and 8 fixed tie-heavy score vectors.
  std::size_t cases = 0;
  double worst = 0;
  auto check = [&](const std::vector<int>& y, const std::vector<double>& s) {
    const double got = evaluation::roc_auc(y, s).auc;
    worst = std::max(worst, std::abs(got - oracle::pair_count_auc(y, s)));
    ++cases;
  };
  std::mt19937_64 rng(77);
  for (int n = 2; n <= 12; ++n) {
    std::vector<std::vector<double>> score_sets;
    if (n <= 6) {
      std::size_t total = 1;
      for (int i = 0; i < n; ++i) total *= 3;
      for (std::size_t code = 0; code < total; ++code) {
        std::vector<double> s(n);
        auto c = code;
        for (int i = 0; i < n; ++i, c /= 3) s[i] = static_cast<double>(c % 3);
        score_sets.push_back(s);
      }
    } else {
      for (int k = 0; k < 8; ++k) {
        std::vector<double> s(n);
        for (auto& v : s) v = static_cast<double>(rng() % 5) * 0.25;
        score_sets.push_back(s);
      }
    }
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) y[i] = (mask >> i) & 1;
      for (const auto& s : score_sets) check(y, s);
    }
  }

  std::size_t confusion_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng() % 2);
      pred[i] = static_cast<int>(rng() % 2);
    }
    const auto c = evaluation::confusion(truth, pred);
    const auto r = oracle::brute_confusion(truth, pred);
    if (c.tp != r.tp || c.tn != r.tn || c.fp != r.fp || c.fn != r.fn) ++confusion_bad;
  }
  Outcome o;
  o.pass = cases >= 5000 && worst <= 1e-12 && confusion_bad == 0;
  o.detail = "AUC " + std::to_string(cases) + " enumerated cases, max |diff| " + sci(worst) +
             " (tol 1e-12); confusion 1000 cases, " + std::to_string(confusion_bad) + " mismatches";
  return o;
}

// ---------------------------------------------------------------- gradients

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 0.5) {
  std::normal_distribution<double> g(0.0, sd);
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return g(rng); });
}

double logistic_gradient_error(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const int n = 20 + static_cast<int>(rng() % 20), d = 1 + static_cast<int>(rng() % 6);
  const Eigen::MatrixXd x = random_matrix(n, d, rng, 1.0);
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng() % 2);
  const double c = std::exp(2.0 * normal(rng));
  Eigen::VectorXd theta = random_matrix(d + 1, 1, rng, 1.0).col(0);
  Eigen::VectorXd gw;
  double gb = 0;
  classifiers::logistic_objective(x, y, c, theta.head(d), theta[d], &gw, &gb);
  Eigen::VectorXd analytic(d + 1);
  analytic << gw, gb;
  auto f = [&](const Eigen::VectorXd& t) { return classifiers::logistic_objective(x, y, c, t.head(d), t[d]); };
  return oracle::relative_error(analytic, oracle::numeric_gradient(f, theta, 1e-5));
}

double doc2vec_gradient_error(std::mt19937_64& rng) {
  const int m = 3 + static_cast<int>(rng() % 6), n = 1 + static_cast<int>(rng() % 6);
  const int docs_n = 1 + static_cast<int>(rng() % 3);
  std::vector<std::vector<int>> docs(docs_n);
  for (auto& d : docs)
    for (int k = 0, len = 2 + static_cast<int>(rng() % 6); k < len; ++k) d.push_back(static_cast<int>(rng() % m));
  const auto ctx = doc2vec::build_context(docs, m, 1 + static_cast<int>(rng() % 2));
  const Eigen::MatrixXd w = random_matrix(m, n, rng), dv = random_matrix(docs_n, n, rng);
  Eigen::MatrixXd gw, gd;
  doc2vec::context_objective(w, dv, ctx, &gw, &gd);
  Eigen::VectorXd theta(w.size() + dv.size()), analytic(w.size() + dv.size());
  theta << w.reshaped(), dv.reshaped();
  analytic << gw.reshaped(), gd.reshaped();
  auto f = [&](const Eigen::VectorXd& t) {
    Eigen::MatrixXd ww = t.head(w.size()).reshaped(m, n);
    Eigen::MatrixXd dd = t.tail(dv.size()).reshaped(docs_n, n);
    return doc2vec::context_objective(ww, dd, ctx);
  };
  return oracle::relative_error(analytic, oracle::numeric_gradient(f, theta));
}

double lstm_gradient_error(std::mt19937_64& rng) {
  using context::LstmLayer;
  const int in = 1 + static_cast<int>(rng() % 4), h = 1 + static_cast<int>(rng() % 4);
  const int steps = 1 + static_cast<int>(rng() % 5);
  LstmLayer layer{random_matrix(4 * h, in, rng), random_matrix(4 * h, h, rng), random_matrix(4 * h, 1, rng)};
  const Eigen::MatrixXd x = random_matrix(in, steps, rng, 1.0);
  const Eigen::MatrixXd r = random_matrix(h, steps, rng, 1.0);  // loss = sum r .* h
  const auto g = context::lstm_backward(layer, context::lstm_forward(layer, x), r);
  Eigen::VectorXd analytic(g.w.size() + g.u.size() + g.b.size() + g.x.size());
  analytic << g.w.reshaped(), g.u.reshaped(), g.b.reshaped(), g.x.reshaped();
  Eigen::VectorXd theta(analytic.size());
  theta << layer.w.reshaped(), layer.u.reshaped(), layer.b.reshaped(), x.reshaped();
  auto f = [&](const Eigen::VectorXd& t) {
    Eigen::Index o = 0;
    auto take = [&](Eigen::Index rows, Eigen::Index cols) {
      Eigen::MatrixXd m = t.segment(o, rows * cols).reshaped(rows, cols);
      o += rows * cols;
      return m;
    };
    LstmLayer l;
    l.w = take(4 * h, in);
    l.u = take(4 * h, h);
    l.b = take(4 * h, 1);
    const Eigen::MatrixXd xx = take(in, steps);
    return (context::lstm_forward(l, xx).h.array() * r.array()).sum();
  };
  return oracle::relative_error(analytic, oracle::numeric_gradient(f, theta));
}

double mixing_gradient_error(std::mt19937_64& rng) {
  using namespace context;
  const int n = 6 + static_cast<int>(rng() % 10), d = static_cast<int>(rng() % 3), m = 1 + static_cast<int>(rng() % 4);
  const int layers = 1 + static_cast<int>(rng() % 3);
  MixingProblem p;
  p.other = random_matrix(n, d, rng);
  for (int j = 0; j <= layers; ++j) p.layers.push_back(random_matrix(n, m, rng));
  for (int i = 0; i < n; ++i) p.labels.push_back(static_cast<int>(rng() % 2));
  p.c = 0.1 + static_cast<double>(rng() % 100) / 10.0;
  JointParams x{random_matrix(d + m, 1, rng).col(0), 0.3, random_matrix(layers + 1, 1, rng).col(0),
                0.5 + static_cast<double>(rng() % 10) / 10.0};
  JointParams g;
  joint_objective(p, x, &g);
  Eigen::VectorXd analytic(d + m + layers + 3), theta(d + m + layers + 3);
  analytic << g.weights, g.bias, g.logits, g.gamma;
  theta << x.weights, x.bias, x.logits, x.gamma;
  auto f = [&](const Eigen::VectorXd& t) {
    JointParams q{t.head(d + m), t[d + m], t.segment(d + m + 1, layers + 1), t[d + m + layers + 2]};
    return joint_objective(p, q);
  };
  return oracle::relative_error(analytic, oracle::numeric_gradient(f, theta));
}

Outcome gradient_checks() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4242);
  struct Check {
    const char* name;
    double (*run)(std::mt19937_64&);
  };
  const Check checks[] = {{"logistic", logistic_gradient_error},
                          {"doc2vec", doc2vec_gradient_error},
                          {"lstm", lstm_gradient_error},
                          {"mixing", mixing_gradient_error}};
  Outcome o;
  for (const auto& c : checks) {
    double worst = 0;
    for (int i = 0; i < 100; ++i) worst = std::max(worst, c.run(rng));
    o.pass = o.pass && worst < 1e-4;
    o.detail += std::string(c.name) + " max rel err " + sci(worst) + ", ";
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 60.0;
  o.detail += "100 points each, " + num(secs, 1) + " s (tol 1e-4, < 60 s)";
  return o;
}

Outcome convexity() {
  std::mt19937_64 rng(50);
  std::normal_distribution<double> normal;
  const int n = 50, d = 5;
  Eigen::MatrixXd x(n, d);
  std::vector<int> y(n);
  Eigen::VectorXd truth = random_matrix(d, 1, rng, 1.0).col(0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
    y[i] = (x.row(i).dot(truth) + 0.8 * normal(rng)) > 0 ? 1 : 0;
  }
  classifiers::LogisticOptions opt;
  opt.gradient_tolerance = 1e-10;
  std::vector<Eigen::VectorXd> solutions;
  for (int k = 0; k < 10; ++k) {
    opt.initial = random_matrix(d + 1, 1, rng, 3.0).col(0);
    const auto m = classifiers::logreg_train(x, y, 1.0, opt);
    Eigen::VectorXd s(d + 1);
    s << m.weights, m.bias;
    solutions.push_back(s);
  }
  double spread = 0;
  for (const auto& a : solutions)
    for (const auto& b : solutions) spread = std::max(spread, (a - b).cwiseAbs().maxCoeff());
  return {spread <= 1e-4, "10 initializations on a 50-sample problem, max weight difference " + sci(spread) +
                              " (tol 1e-4)"};
}

Outcome softmax_normalization() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 5.0);
  double doc2vec_worst = 0;
  for (int t = 0; t < 500; ++t) {
    const int m = 2 + static_cast<int>(rng() % 40), n = 1 + static_cast<int>(rng() % 10);
    const Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return g(rng); });
    const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
    double sum = 0;
    for (int i = 0; i < m; ++i) sum += doc2vec::softmax_factor(w, i, u);
    doc2vec_worst = std::max(doc2vec_worst, std::abs(sum - 1.0));
  }
  double mix_worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(1 + static_cast<int>(rng() % 8), [&] { return 6 * g(rng); });
    mix_worst = std::max(mix_worst, std::abs(context::softmax(w).sum() - 1.0));
  }
  bool uniform = true;
  for (int layers = 1; layers <= 6; ++layers) {
    const auto s = context::MixingHead::uniform(layers).weights();
    for (Eigen::Index j = 0; j < s.size(); ++j) uniform = uniform && s[j] == 1.0 / (layers + 1);
  }
  return {doc2vec_worst <= 1e-9 && mix_worst <= 1e-12 && uniform,
          "Doc2Vec factor sums max |1 - sum| " + sci(doc2vec_worst) + " (tol 1e-9); mixing weights " +
              sci(mix_worst) + " (tol 1e-12); w = 0 uniform exactly: " + (uniform ? "yes" : "NO")};
}

Outcome tree_oracle() {
  std::mt19937_64 rng(200);
  std::uniform_int_distribution<int> small(0, 4);
  std::normal_distribution<double> normal;
  std::size_t compared = 0, mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd x(8, 2);
    std::vector<int> y(8);
    for (int i = 0; i < 8; ++i) {
      x(i, 0) = trial % 2 ? small(rng) : normal(rng);
      x(i, 1) = trial % 3 ? small(rng) : normal(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5, 6, 7};
    for (auto crit : {classifiers::Criterion::Gini, classifiers::Criterion::Entropy}) {
      const auto got = classifiers::best_split(x, y, rows, crit);
      const auto want = oracle::enumerate_root_split(x, y, crit == classifiers::Criterion::Gini);
      ++compared;
      if (got.has_value() != want.has_value()) {
        ++mismatches;
        continue;
      }
      if (got && (got->feature != want->feature || got->threshold != want->threshold ||
                  std::abs(got->decrease - want->decrease) > 1e-12))
        ++mismatches;
    }
  }
  return {mismatches == 0, "200 datasets x {gini, entropy}: " + std::to_string(compared) + " root splits, " +
                               std::to_string(mismatches) + " mismatches"};
}

// -------------------------------------------------------------- experiments

pipeline::PipelineConfig standard_config() { return pipeline::PipelineConfig{}; }

pipeline::Experiment standard_experiment(const pipeline::PipelineConfig& c) {
  auto docs = synthetic::to_transcripts(synthetic::generate_synthetic_corpus(c.synthetic));
  auto bg = synthetic::to_transcripts(synthetic::generate_background(c.synthetic, c.background_docs));
  return pipeline::Experiment(c, pipeline::labeled(std::move(docs)), std::move(bg));
}

const std::vector<features::Pipeline> kAllArms{features::Pipeline::P1, features::Pipeline::P2,
                                               features::Pipeline::P3, features::Pipeline::P4};

std::vector<nlohmann::json> aggregates(const pipeline::StabilityOutputs& out) {
  return out.report.at("stability").at("aggregates").get<std::vector<nlohmann::json>>();
}

Outcome ordering() {
  const auto t0 = Clock::now();
  auto cfg = standard_config();
  cfg.repetitions = 100;
  auto ex = standard_experiment(cfg);
  const auto out = pipeline::run_stability(ex, kAllArms);
  const double secs = seconds_since(t0);
  const auto agg = aggregates(out);
  Outcome o;
  std::vector<double> auc;
  for (const auto& a : agg) {
    const double mean = a.at("accuracy_mean"), sd = a.at("accuracy_std"), am = a.at("auc_mean");
    auc.push_back(am);
    const bool stable = a.at("successful") == 100 && sd / mean < 0.05;
    o.pass = o.pass && stable;
    o.detail += a.at("arm").get<std::string>() + " AUC " + num(am) + " acc " + num(mean) + " std/mean " +
                num(sd / mean) + "; ";
  }
  const bool ordered = auc[0] <= auc[1] && auc[1] <= auc[2] && auc[2] <= auc[3];
  const bool gap = auc[3] - auc[0] >= 0.03;
  o.pass = o.pass && ordered && gap && secs < 1800.0;
  o.detail += std::string("ordered ") + (ordered ? "yes" : "NO") + ", P4 - P1 = " + num(auc[3] - auc[0]) +
              " (>= 0.03), N = 100, " + num(secs, 1) + " s (< 1800 s)";
  std::cerr << out.table;
  return o;
}

Outcome null_signal() {
  auto cfg = standard_config();
  cfg.repetitions = 200;
  cfg.synthetic.null_signal = true;
  auto ex = standard_experiment(cfg);
  const auto out = pipeline::run_stability(ex, kAllArms);
  Outcome o;
  for (const auto& a : aggregates(out)) {
    const double am = a.at("auc_mean");
    o.pass = o.pass && a.at("successful") == 200 && std::abs(am - 0.5) <= 0.1;
    o.detail += a.at("arm").get<std::string>() + " AUC " + num(am) + "; ";
  }
  o.detail += "N = 200, tolerance 0.5 +/- 0.1";
  std::cerr << out.table;
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ADSCAN_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Shared by the determinism and c-sweep criteria: the CLI writes the
// standard corpus and runs `evaluate` on it.
struct CliRun {
  fs::path dir;
  int generate_rc = -1, evaluate_rc = -1;
};

const CliRun& cli_run() {
  static const CliRun run = [] {
    CliRun r;
    r.dir = fs::temp_directory_path() / ("adscan_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(r.dir);
    r.generate_rc = run_cli("generate --out \"" + (r.dir / "corpus").string() + "\"");
    r.evaluate_rc = run_cli("evaluate --corpus \"" + (r.dir / "corpus").string() + "\" --out \"" +
                            (r.dir / "out").string() + "\" --workers 2");
    return r;
  }();
  return run;
}

Outcome determinism() {
  auto cfg = standard_config();
  std::vector<std::string> reports;
  for (std::size_t workers : {1u, 1u, 4u}) {
    cfg.workers = workers;
    auto ex = standard_experiment(cfg);
    reports.push_back(pipeline::run_pipeline(ex).report.dump(2) + "\n");
  }
  const auto& cli = cli_run();
  const auto cli_report = read_file(cli.dir / "out" / "report.json");
  const bool repeat = reports[0] == reports[1];
  const bool workers = reports[0] == reports[2];
  const bool via_cli = cli.evaluate_rc == 0 && cli_report == reports[0];
  return {repeat && workers && via_cli,
          std::string("run twice: ") + (repeat ? "identical" : "DIFFERENT") + "; workers 1 vs 4: " +
              (workers ? "identical" : "DIFFERENT") + "; CLI evaluate (workers 2, corpus from disk): " +
              (via_cli ? "identical" : "DIFFERENT") + " (" + std::to_string(reports[0].size()) + " bytes)"};
}

Outcome c_sweep() {
  const auto& cli = cli_run();
  if (cli.generate_rc != 0 || cli.evaluate_rc != 0)
    return {false, "CLI exit codes generate " + std::to_string(cli.generate_rc) + ", evaluate " +
                       std::to_string(cli.evaluate_rc)};
  std::istringstream in(read_file(cli.dir / "out" / "c_sweep.csv"));
  std::string line;
  bool header_ok = false, versioned = false;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    if (line.rfind("# format_version=", 0) == 0) {
      versioned = line.find("config_hash=") != std::string::npos;
      continue;
    }
    if (line == "c,validation_accuracy") {
      header_ok = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    try {
      rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      rows.emplace_back(std::stod(line.substr(0, comma)), NAN);
    }
  }
  bool all = rows.size() == pipeline::kTableCValues.size();
  for (std::size_t i = 0; all && i < rows.size(); ++i)
    all = rows[i].first == pipeline::kTableCValues[i] && std::isfinite(rows[i].second) && rows[i].second >= 0 &&
          rows[i].second <= 1;
  std::string values;
  for (const auto& [c, acc] : rows) values += num(acc, 3) + " ";
  fs::remove_all(cli.dir);
  return {header_ok && versioned && all, std::to_string(rows.size()) + " rows over the ten c values, all finite: " +
                                             (all ? "yes" : "NO") + "; accuracies " + values};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"chat-parsing-fixtures-and-fuzz", chat_parsing},
      {"metric-oracle-equivalence", metric_oracles},
      {"gradient-checks", gradient_checks},
      {"logistic-convexity", convexity},
      {"softmax-normalizations", softmax_normalization},
      {"decision-tree-oracle", tree_oracle},
      {"pipeline-ordering-experiment", ordering},
      {"null-signal-sanity", null_signal},
      {"determinism", determinism},
      {"c-sweep-artifact", c_sweep},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " of " << std::size(criteria) << " criteria failed"
            << std::endl;
  return failed ? 1 : 0;
}
