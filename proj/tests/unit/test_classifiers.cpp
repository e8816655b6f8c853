#include <doctest.h>

#include <random>

#include "adscan/classifiers.hpp"
#include "adscan/error.hpp"
#include "oracles.hpp"

using namespace adscan;
using namespace adscan::classifiers;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

// Noisy linear problem; never separable thanks to label flips.
Problem random_problem(int n, int d, std::uint64_t seed, double flip = 0.15) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Eigen::VectorXd truth(d);
  for (int j = 0; j < d; ++j) truth[j] = normal(rng);
  Problem p{Eigen::MatrixXd(n, d), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) p.x(i, j) = normal(rng);
    int label = p.x.row(i).dot(truth) > 0 ? 1 : 0;
    if (unit(rng) < flip) label = 1 - label;
    p.y[i] = label;
  }
  p.y[0] = 0;
  p.y[1] = 1;
  return p;
}

double objective(const Problem& p, double c, const Eigen::VectorXd& theta) {
  const auto d = p.x.cols();
  return logistic_objective(p.x, p.y, c, theta.head(d), theta[d]);
}

}  // namespace

TEST_CASE("zero weights predict one half") {
  LogisticModel m;
  m.weights = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd x(3);
  x << 4, -2, 9;
  CHECK(logreg_predict_proba(m, x) == 0.5);
}

TEST_CASE("probability saturates without NaN") {
  LogisticModel m;
  m.weights = Eigen::VectorXd::Constant(1, 1e300);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1e10);
  CHECK(logreg_predict_proba(m, x) == 1.0);
  CHECK(logreg_predict_proba(m, Eigen::VectorXd(-x)) == 0.0);
}

TEST_CASE("hand-computed two-feature probability") {
  LogisticModel m;
  m.weights = Eigen::Vector2d(0.5, -1.25);
  m.bias = 0.3;
  Eigen::Vector2d x(2.0, 0.4);
  // z = 1.0 - 0.5 + 0.3 = 0.8
  CHECK(logreg_predict_proba(m, x) == doctest::Approx(1.0 / (1.0 + std::exp(-0.8))).epsilon(1e-12));
  CHECK(std::abs(logreg_predict_proba(m, x) - 0.6899744811276125) < 1e-12);
}

TEST_CASE("separable two points reach perfect training accuracy") {
  Eigen::MatrixXd x(2, 1);
  x << -1, 1;
  std::vector<int> y{0, 1};
  auto m = logreg_train(x, y, 1e10);
  auto p = logreg_predict_batch(m, x);
  CHECK(p[0] < 0.5);
  CHECK(p[1] > 0.5);
}

TEST_CASE("trained loss matches an exhaustive grid oracle on a 2-feature problem") {
  auto p = random_problem(20, 2, 11, 0.25);
  const double c = 1.0;
  auto m = logreg_train(p.x, p.y, c);
  const double trained = logistic_objective(p.x, p.y, c, m.weights, m.bias);

  // bias minimized exactly (1-D convex) for each grid point
  auto best_over_bias = [&](double w1, double w2) {
    Eigen::Vector2d w(w1, w2);
    double b = 0;
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd z = p.x * w;
      double g = 0, h = 0;
      for (int i = 0; i < 20; ++i) {
        double s = 1 / (1 + std::exp(-(z[i] + b)));
        g += s - p.y[i];
        h += s * (1 - s);
      }
      b -= g / h;
    }
    return logistic_objective(p.x, p.y, c, w, b);
  };
  double best = 1e300, bw1 = 0, bw2 = 0;
  for (double w1 = -4; w1 <= 4; w1 += 0.05)
    for (double w2 = -4; w2 <= 4; w2 += 0.05) {
      double v = best_over_bias(w1, w2);
      if (v < best) best = v, bw1 = w1, bw2 = w2;
    }
  const double c1 = bw1, c2 = bw2;
  for (double w1 = c1 - 0.05; w1 <= c1 + 0.05; w1 += 0.002)
    for (double w2 = c2 - 0.05; w2 <= c2 + 0.05; w2 += 0.002) best = std::min(best, best_over_bias(w1, w2));
  CHECK(std::abs(trained - best) < 1e-3);
  CHECK(trained <= best + 1e-9);
}

TEST_CASE("logistic gradient matches central differences") {
  auto p = random_problem(30, 4, 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const double c = std::exp(normal(rng) * 2);
    Eigen::VectorXd theta(5);
    for (int k = 0; k < 5; ++k) theta[k] = normal(rng);
    Eigen::VectorXd gw;
    double gb;
    logistic_objective(p.x, p.y, c, theta.head(4), theta[4], &gw, &gb);
    Eigen::VectorXd analytic(5);
    analytic << gw, gb;
    auto numeric = oracle::numeric_gradient([&](const Eigen::VectorXd& t) { return objective(p, c, t); }, theta, 1e-5);
    CHECK(oracle::relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("different starting points reach the same optimum") {
  auto p = random_problem(50, 5, 17);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0, 3);
  LogisticOptions opt;
  opt.gradient_tolerance = 1e-10;
  auto ref = logreg_train(p.x, p.y, 1.0, opt);
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd init(6);
    for (int j = 0; j < 6; ++j) init[j] = normal(rng);
    opt.initial = init;
    auto m = logreg_train(p.x, p.y, 1.0, opt);
    CHECK((m.weights - ref.weights).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(std::abs(m.bias - ref.bias) < 1e-4);
  }
}

TEST_CASE("weight norm shrinks as c decreases over the tuning grid") {
  auto p = random_problem(60, 6, 23, 0.3);
  const std::vector<double> grid{1e10, 1e6, 1000, 10, 0.99, 0.75, 0.5, 0.25, 0.05, 0.01};
  LogisticOptions opt;
  opt.gradient_tolerance = 1e-10;
  opt.max_iterations = 20000;
  double prev = std::numeric_limits<double>::infinity();
  for (double c : grid) {
    const double norm = logreg_train(p.x, p.y, c, opt).weights.norm();
    CHECK(norm <= prev + 1e-6);
    prev = norm;
  }
}

TEST_CASE("an appended all-zero column does not change predictions") {
  auto p = random_problem(40, 3, 31);
  LogisticOptions opt;
  opt.gradient_tolerance = 1e-10;
  auto m = logreg_train(p.x, p.y, 0.5, opt);
  Eigen::MatrixXd wide(40, 4);
  wide << p.x, Eigen::VectorXd::Zero(40);
  auto m2 = logreg_train(wide, p.y, 0.5, opt);
  CHECK((logreg_predict_batch(m, p.x) - logreg_predict_batch(m2, wide)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(m2.weights[3] == 0.0);
}

TEST_CASE("logistic training errors") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  std::vector<int> same{1, 1, 1};
  CHECK_THROWS_AS(logreg_train(x, same, 1.0), Error);
  try {
    logreg_train(x, same, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClassTraining);
  }
  std::vector<int> y{0, 1, 0};
  x(1, 1) = std::nan("");
  try {
    logreg_train(x, y, 1.0);
    FAIL("expected NonFiniteFeatures");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteFeatures);
  }
  LogisticModel m;
  m.weights = Eigen::VectorXd::Zero(2);
  try {
    logreg_predict_proba(m, Eigen::VectorXd::Zero(3));
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
  }
}

// ------------------------------------------------------------------- tree

TEST_CASE("impurity closed forms") {
  CHECK(impurity(Criterion::Gini, 0, 10) == 0.0);
  CHECK(impurity(Criterion::Entropy, 10, 10) == 0.0);
  CHECK(impurity(Criterion::Gini, 5, 10) == doctest::Approx(0.5));
  CHECK(impurity(Criterion::Entropy, 5, 10) == doctest::Approx(1.0));
}

TEST_CASE("root split equals exhaustive enumeration") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> small(0, 4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 60; ++trial) {
    Eigen::MatrixXd x(8, 2);
    std::vector<int> y(8);
    for (int i = 0; i < 8; ++i) {
      // mix of continuous and repeated values to exercise ties
      x(i, 0) = trial % 2 ? small(rng) : normal(rng);
      x(i, 1) = small(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5, 6, 7};
    for (auto crit : {Criterion::Gini, Criterion::Entropy}) {
      auto got = best_split(x, y, rows, crit);
      auto want = oracle::enumerate_root_split(x, y, crit == Criterion::Gini);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      CHECK(got->feature == want->feature);
      CHECK(got->threshold == want->threshold);
      CHECK(got->decrease == doctest::Approx(want->decrease).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-class training gives a constant leaf") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
  std::vector<int> y(5, 1);
  auto t = tree_train(x, y, Criterion::Gini);
  CHECK(t.nodes.size() == 1);
  CHECK(tree_predict_proba(t, Eigen::Vector2d(3, 3)) == 1.0);
}

TEST_CASE("depth-1 stump matches hand computation") {
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  std::vector<int> y{0, 0, 1, 0, 1, 1};
  auto t = tree_train(x, y, Criterion::Gini, 1);
  REQUIRE(t.nodes.size() == 3);
  // candidates: 1.5 -> dec 0.1, 2.5 -> 0.25, 3.5 -> 0.0556, 4.5 -> 0.25, 5.5 -> 0.1; lowest wins the tie
  CHECK(t.nodes[0].threshold == 2.5);
  CHECK(tree_predict_proba(t, Eigen::VectorXd::Constant(1, 2.0)) == 0.0);
  CHECK(tree_predict_proba(t, Eigen::VectorXd::Constant(1, 5.0)) == doctest::Approx(0.75));
}

TEST_CASE("unlimited depth fits any consistent dataset, including XOR") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  std::vector<int> y{0, 1, 1, 0};
  for (auto crit : {Criterion::Gini, Criterion::Entropy}) {
    auto t = tree_train(x, y, crit);
    auto p = tree_predict_batch(t, x);
    for (int i = 0; i < 4; ++i) CHECK(p[i] == static_cast<double>(y[i]));
  }
  std::mt19937_64 rng(4);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(60, 3);
  std::vector<int> ry(60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = static_cast<double>(rng() % 1000);
    ry[i] = static_cast<int>(rng() % 2);
  }
  auto t = tree_train(r, ry, Criterion::Entropy);
  auto p = tree_predict_batch(t, r);
  for (int i = 0; i < 60; ++i) CHECK(p[i] == static_cast<double>(ry[i]));
  for (const auto& n : t.nodes) {
    CHECK(n.p1 >= 0.0);
    CHECK(n.p1 <= 1.0);
    if (!n.is_leaf()) {
      CHECK(t.nodes[n.left].samples > 0);
      CHECK(t.nodes[n.right].samples > 0);
    }
  }
}

TEST_CASE("training rows routed through a depth-limited tree reproduce leaf frequencies") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(40, 2);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
    y[i] = static_cast<int>(rng() % 2);
  }
  auto t = tree_train(x, y, Criterion::Gini, 2);
  std::vector<double> pos(t.nodes.size()), cnt(t.nodes.size());
  for (int i = 0; i < 40; ++i) {
    std::size_t k = 0;
    while (!t.nodes[k].is_leaf())
      k = static_cast<std::size_t>(x(i, t.nodes[k].feature) <= t.nodes[k].threshold ? t.nodes[k].left : t.nodes[k].right);
    pos[k] += y[i];
    cnt[k] += 1;
  }
  for (std::size_t k = 0; k < t.nodes.size(); ++k)
    if (t.nodes[k].is_leaf()) {
      CHECK(cnt[k] == static_cast<double>(t.nodes[k].samples));
      CHECK(pos[k] / cnt[k] == doctest::Approx(t.nodes[k].p1));
    }
}
