#include "adscan/optimize.hpp"

#include <cmath>
#include <deque>

namespace adscan::optim {

LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options) {
  const auto n = x0.size();
  LbfgsResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(n);
  r.value = f(r.x, g);
  r.gradient_norm = g.norm();

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd g_new(n), x_new(n), d(n);
  std::vector<double> alpha(static_cast<std::size_t>(options.history));

  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    if (!std::isfinite(r.value) || r.gradient_norm <= options.gradient_tolerance) break;

    // two-loop recursion
    d = -g;
    const auto m = s_hist.size();
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (m > 0) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = m == 0 ? std::min(1.0, 1.0 / std::max(r.gradient_norm, 1e-300)) : 1.0;
    bool accepted = false;
    double f_new = 0.0;
    for (int k = 0; k < options.max_backtracks; ++k) {
      x_new = r.x + step * d;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd s = x_new - r.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    r.x.swap(x_new);
    g.swap(g_new);
    r.value = f_new;
    r.gradient_norm = g.norm();
  }
  r.converged = r.gradient_norm <= options.gradient_tolerance;
  return r;
}

}  // namespace adscan::optim
