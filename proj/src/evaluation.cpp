#include "adscan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "adscan/error.hpp"

namespace adscan::evaluation {

namespace {

// Largest-remainder allocation of n items over the ratios. Remainder ties go
// to the earlier set.
std::array<std::size_t, 3> allocate(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * ratios[i];
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[i] = exact - static_cast<double>(sizes[i]);
    used += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++sizes[order[k % 3]];
  return sizes;
}

void check_binary(std::span<const int> y) {
  for (int v : y)
    if (v != 0 && v != 1) throw Error(ErrorCode::InvalidConfig, "labels must be 0 or 1");
}

}  // namespace

std::vector<std::size_t> SplitPlan::train_and_validation() const {
  std::vector<std::size_t> out = train;
  out.insert(out.end(), validation.begin(), validation.end());
  return out;
}

SplitPlan split(std::span<const int> labels, std::uint64_t seed, std::array<double, 3> ratios, bool stratified) {
  if (labels.size() < 10) throw Error(ErrorCode::TooFewSamples, std::to_string(labels.size()) + " samples, need 10");
  check_binary(labels);
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9 || *std::min_element(ratios.begin(), ratios.end()) < 0)
    throw Error(ErrorCode::InvalidConfig, "split ratios must be non-negative and sum to 1");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == labels.size())
    throw Error(ErrorCode::SingleClassLabels, "both classes are needed to split");

  SplitPlan plan;
  plan.seed = seed;
  plan.ratios = ratios;
  plan.stratified = stratified;
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    groups.resize(2);
    for (std::size_t i = 0; i < labels.size(); ++i) groups[static_cast<std::size_t>(labels[i])].push_back(i);
  } else {
    groups.emplace_back(labels.size());
    std::iota(groups[0].begin(), groups[0].end(), 0);
  }
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    const auto sizes = allocate(g.size(), ratios);
    auto it = g.begin();
    for (auto* dst : {&plan.train, &plan.validation, &plan.test}) {
      const auto n = sizes[static_cast<std::size_t>(dst == &plan.train ? 0 : dst == &plan.validation ? 1 : 2)];
      dst->insert(dst->end(), it, it + static_cast<std::ptrdiff_t>(n));
      it += static_cast<std::ptrdiff_t>(n);
    }
  }
  for (auto* s : {&plan.train, &plan.validation, &plan.test}) std::sort(s->begin(), s->end());
  return plan;
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> k_folds(
    std::span<const std::size_t> pool, std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 folds");
  if (pool.size() < k) throw Error(ErrorCode::TooFewSamples, "fewer samples than folds");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> assignment(pool.size());
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < pool.size(); ++i) by_class[static_cast<std::size_t>(labels[pool[i]] == 1)].push_back(i);
  std::size_t next = 0;
  for (auto& g : by_class) {
    std::shuffle(g.begin(), g.end(), rng);
    for (auto i : g) assignment[i] = next++ % k;
  }
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds(k);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t f = 0; f < k; ++f) (assignment[i] == f ? folds[f].second : folds[f].first).push_back(pool[i]);
  return folds;
}

// ----------------------------------------------------------------- metrics

double Confusion::accuracy() const noexcept {
  return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
}
double Confusion::tpr() const noexcept { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
double Confusion::fpr() const noexcept { return fp + tn ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0; }

Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(y_true.size()) + " labels vs " +
                                               std::to_string(y_pred.size()) + " predictions");
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) (y_pred[i] == 1 ? c.tp : c.fn)++;
    else (y_pred[i] == 1 ? c.fp : c.tn)++;
  }
  return c;
}

RocResult roc_auc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw Error(ErrorCode::LengthMismatch, "labels vs scores");
  check_binary(y_true);
  const auto p = static_cast<std::uint64_t>(std::count(y_true.begin(), y_true.end(), 1));
  const auto n = static_cast<std::uint64_t>(y_true.size()) - p;
  if (p == 0 || n == 0) throw Error(ErrorCode::SingleClassLabels, "ROC needs both classes");

  std::vector<std::size_t> order(y_true.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult r;
  r.curve.fpr.push_back(0.0);
  r.curve.tpr.push_back(0.0);
  r.curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::uint64_t tp = 0, fp = 0, twice_area = 0;  // area in units of 1/(2PN)
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::uint64_t dtp = 0, dfp = 0;
    for (; i < order.size() && scores[order[i]] == s; ++i) (y_true[order[i]] == 1 ? dtp : dfp)++;
    twice_area += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    r.curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n));
    r.curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(p));
    r.curve.thresholds.push_back(s);
  }
  r.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(p) * static_cast<double>(n));
  return r;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "threshold,fpr,tpr\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", curve.thresholds[i], curve.fpr[i], curve.tpr[i]);
    out << buf;
  }
}

// ------------------------------------------------------------------ search

std::optional<double> Candidate::get(const std::string& name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  return std::nullopt;
}

std::string Candidate::describe() const {
  std::string s;
  char buf[64];
  for (const auto& [k, v] : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += (s.empty() ? "" : " ") + k + "=" + buf;
  }
  return s;
}

std::vector<Candidate> SearchSpace::grid() const {
  std::vector<Candidate> out;
  if (dimensions.empty()) return out;
  for (const auto& [name, vals] : dimensions)
    if (vals.empty()) throw Error(ErrorCode::InvalidConfig, "search dimension '" + name + "' is empty");
  std::vector<std::size_t> pos(dimensions.size(), 0);
  for (std::size_t idx = 0;; ++idx) {
    Candidate c;
    c.index = idx;
    for (std::size_t d = 0; d < dimensions.size(); ++d) c.values.emplace_back(dimensions[d].first, dimensions[d].second[pos[d]]);
    out.push_back(std::move(c));
    std::size_t d = dimensions.size();
    while (d-- > 0) {
      if (++pos[d] < dimensions[d].second.size()) break;
      pos[d] = 0;
    }
    if (d == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

std::vector<Candidate> SearchSpace::sample(std::size_t budget, std::uint64_t seed) const {
  auto all = grid();
  if (budget >= all.size()) return all;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(budget);
  std::sort(idx.begin(), idx.end());
  std::vector<Candidate> out;
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

std::optional<std::size_t> select_best(const std::vector<CandidateResult>& results) {
  std::optional<std::size_t> best;
  auto key = [](const CandidateResult& r, const char* name) {
    return r.candidate.get(name).value_or(0.0);
  };
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.failed) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = results[*best];
    if (r.mean_accuracy > b.mean_accuracy + 1e-12) {
      best = i;
    } else if (std::abs(r.mean_accuracy - b.mean_accuracy) <= 1e-12) {
      const auto rk = std::tuple{key(r, "c"), key(r, "vec_size"), r.candidate.index};
      const auto bk = std::tuple{key(b, "c"), key(b, "vec_size"), b.candidate.index};
      if (rk < bk) best = i;
    }
  }
  return best;
}

SearchResult cv_search(std::span<const std::size_t> pool, std::span<const int> labels, const SearchSpace& space,
                       const SearchOptions& options, FoldEvaluator& evaluator) {
  auto candidates = options.random_budget ? space.sample(*options.random_budget, options.seed) : space.grid();
  if (candidates.empty()) throw Error(ErrorCode::InvalidConfig, "search space is empty");
  const auto folds = k_folds(pool, labels, options.folds, options.seed);

  SearchResult out;
  out.results.resize(candidates.size());
  std::vector<std::string> keys;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.results[i].candidate = candidates[i];
    auto k = evaluator.feature_key(candidates[i]);
    if (!groups.count(k)) keys.push_back(k);
    groups[k].push_back(i);
  }
  for (const auto& k : keys) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      for (auto i : groups[k]) {
        auto& r = out.results[i];
        if (r.failed) continue;
        try {
          r.fold_accuracies.push_back(evaluator.evaluate(r.candidate, f, folds[f].first, folds[f].second));
        } catch (const std::exception& e) {
          r.failed = true;
          r.error = e.what();
        }
      }
    }
  }
  for (auto& r : out.results) {
    if (r.failed) continue;
    r.mean_accuracy = std::accumulate(r.fold_accuracies.begin(), r.fold_accuracies.end(), 0.0) /
                      static_cast<double>(r.fold_accuracies.size());
  }
  out.best = select_best(out.results);
  return out;
}

// --------------------------------------------------------------- stability

std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

std::vector<Aggregate> aggregate(const StabilityReport& report) {
  std::vector<Aggregate> out(report.arms.size());
  for (std::size_t a = 0; a < report.arms.size(); ++a) {
    std::vector<double> acc, auc;
    for (const auto& r : report.runs) {
      if (r.failed) continue;
      acc.push_back(r.arms[a].accuracy);
      auc.push_back(r.arms[a].auc);
    }
    std::tie(out[a].accuracy_mean, out[a].accuracy_std) = mean_std(acc);
    std::tie(out[a].auc_mean, out[a].auc_std) = mean_std(auc);
    out[a].successful = acc.size();
  }
  return out;
}

StabilityReport stability_run(std::span<const int> labels, const std::vector<std::string>& arms,
                              const StabilityOptions& options,
                              const std::function<std::vector<ArmOutcome>(const SplitPlan&)>& run_one) {
  if (options.repetitions < 2) throw Error(ErrorCode::TooFewSamples, "stability needs at least 2 repetitions");
  StabilityReport report;
  report.arms = arms;
  report.repetitions = options.repetitions;
  report.base_seed = options.base_seed;
  report.runs.resize(options.repetitions);

  auto work = [&](std::size_t i) {
    auto& r = report.runs[i];
    r.index = i;
    r.seed = options.fixed_seed ? *options.fixed_seed : options.base_seed + i;
    try {
      auto plan = split(labels, r.seed, options.ratios, options.stratified);
      r.arms = run_one(plan);
      if (r.arms.size() != arms.size()) throw Error(ErrorCode::LengthMismatch, "arm count");
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
      r.arms.assign(arms.size(), {});
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, options.repetitions));
  if (workers == 1) {
    for (std::size_t i = 0; i < options.repetitions; ++i) work(i);
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(m);
            if (next >= options.repetitions) return;
            i = next++;
          }
          work(i);
        }
      });
    for (auto& t : pool) t.join();
  }
  report.aggregates = aggregate(report);
  return report;
}

nlohmann::json to_json(const StabilityReport& report) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : report.runs) {
    nlohmann::json arms = nlohmann::json::array();
    for (std::size_t a = 0; a < report.arms.size(); ++a)
      arms.push_back({{"arm", report.arms[a]}, {"accuracy", r.arms[a].accuracy}, {"auc", r.arms[a].auc}});
    nlohmann::json j{{"index", r.index}, {"seed", r.seed}, {"failed", r.failed}, {"arms", arms}};
    if (r.failed) j["error"] = r.error;
    runs.push_back(std::move(j));
  }
  nlohmann::json aggs = nlohmann::json::array();
  for (std::size_t a = 0; a < report.arms.size(); ++a) {
    const auto& g = report.aggregates[a];
    aggs.push_back({{"arm", report.arms[a]},
                    {"accuracy_mean", g.accuracy_mean},
                    {"accuracy_std", g.accuracy_std},
                    {"auc_mean", g.auc_mean},
                    {"auc_std", g.auc_std},
                    {"successful", g.successful}});
  }
  return {{"repetitions", report.repetitions},
          {"base_seed", report.base_seed},
          {"std", "population"},
          {"aggregates", aggs},
          {"runs", runs}};
}

std::string format_table(const StabilityReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %14s %13s %9s %8s %6s\n", "Pipeline", "Accuracy Mean", "Accuracy Std",
                "AUC Mean", "AUC Std", "Runs");
  out += buf;
  for (std::size_t a = 0; a < report.arms.size(); ++a) {
    const auto& g = report.aggregates[a];
    std::snprintf(buf, sizeof buf, "%-10s %14.4f %13.4f %9.4f %8.4f %6zu\n", report.arms[a].c_str(), g.accuracy_mean,
                  g.accuracy_std, g.auc_mean, g.auc_std, g.successful);
    out += buf;
  }
  return out;
}

}  // namespace adscan::evaluation
