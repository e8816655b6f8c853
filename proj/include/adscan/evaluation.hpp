#pragma once

// Splits, metrics, cross-validated search and repeated-split stability runs.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace adscan::evaluation {

// ------------------------------------------------------------------ splits

struct SplitPlan {
  std::vector<std::size_t> train, validation, test;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  bool stratified = true;

  /// train followed by validation.
  std::vector<std::size_t> train_and_validation() const;
};

/// Deterministic given seed. Set sizes use largest-remainder rounding (per
/// class when stratified). Throws Error{TooFewSamples} below 10 samples,
/// Error{SingleClassLabels} or Error{InvalidConfig} for bad ratios.
SplitPlan split(std::span<const int> labels, std::uint64_t seed, std::array<double, 3> ratios = {0.8, 0.1, 0.1},
                bool stratified = true);

/// K stratified folds over `pool`, each a (train, validation) pair.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> k_folds(
    std::span<const std::size_t> pool, std::span<const int> labels, std::size_t k, std::uint64_t seed);

// ----------------------------------------------------------------- metrics

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  double accuracy() const noexcept;
  double tpr() const noexcept;  // 0 when undefined
  double fpr() const noexcept;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Throws Error{LengthMismatch}.
Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred);

/// Points run from (0,0) to (1,1); thresholds[i] is the score cut producing
/// point i (predict positive when score >= threshold; +inf for the origin).
struct RocCurve {
  std::vector<double> fpr, tpr, thresholds;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

/// Trapezoidal area under the curve, computed in integer pair units so that it
/// equals the Mann-Whitney statistic with ties counted 1/2. Throws
/// Error{SingleClassLabels} or Error{LengthMismatch}.
RocResult roc_auc(std::span<const int> y_true, std::span<const double> scores);

/// Header "threshold,fpr,tpr".
void write_roc_csv(std::ostream& out, const RocCurve& curve);

// ------------------------------------------------------------------ search

struct Candidate {
  std::vector<std::pair<std::string, double>> values;  // in space declaration order
  std::size_t index = 0;                               // position in the full grid

  std::optional<double> get(const std::string& name) const;
  std::string describe() const;
};

/// Named hyperparameter lists; the grid is their cartesian product with the
/// last name varying fastest.
struct SearchSpace {
  std::vector<std::pair<std::string, std::vector<double>>> dimensions;

  std::vector<Candidate> grid() const;
  /// `budget` distinct grid points drawn without replacement, returned in
  /// grid order.
  std::vector<Candidate> sample(std::size_t budget, std::uint64_t seed) const;
};

/// Evaluates one candidate on one fold. Candidates with equal feature keys
/// are evaluated consecutively fold by fold so preparation can be reused.
class FoldEvaluator {
 public:
  virtual ~FoldEvaluator() = default;
  virtual std::string feature_key(const Candidate& c) const = 0;
  /// Validation accuracy. May throw; the candidate is then marked failed.
  virtual double evaluate(const Candidate& c, std::size_t fold, const std::vector<std::size_t>& train,
                          const std::vector<std::size_t>& validation) = 0;
};

struct CandidateResult {
  Candidate candidate;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  bool failed = false;
  std::string error;
};

struct SearchResult {
  std::vector<CandidateResult> results;  // in candidate order
  std::optional<std::size_t> best;       // index into results
};

struct SearchOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::optional<std::size_t> random_budget;  // grid when absent
};

/// Highest mean validation accuracy; ties go to smaller c, then smaller
/// vec_size, then earlier grid position. Throws Error{InvalidConfig} for an
/// empty space.
SearchResult cv_search(std::span<const std::size_t> pool, std::span<const int> labels, const SearchSpace& space,
                       const SearchOptions& options, FoldEvaluator& evaluator);

/// Index of the winning result under the tie-break rule.
std::optional<std::size_t> select_best(const std::vector<CandidateResult>& results);

// --------------------------------------------------------------- stability

struct ArmOutcome {
  double accuracy = 0.0;
  double auc = 0.0;
};

struct Repetition {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<ArmOutcome> arms;
};

struct Aggregate {
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
  std::size_t successful = 0;
};

struct StabilityReport {
  std::vector<std::string> arms;
  std::size_t repetitions = 0;
  std::uint64_t base_seed = 0;
  std::vector<Repetition> runs;
  std::vector<Aggregate> aggregates;  // one per arm
};

/// Mean and population standard deviation.
std::pair<double, double> mean_std(std::span<const double> v);

struct StabilityOptions {
  std::size_t repetitions = 100;
  std::uint64_t base_seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  bool stratified = true;
  std::size_t workers = 1;
  /// Use this seed for every repetition instead of base_seed + i.
  std::optional<std::uint64_t> fixed_seed;
};

/// Runs `run_one` on the split of every repetition (seed = base_seed + i) and
/// aggregates each arm over the successful repetitions. `run_one` must be
/// safe to call concurrently when workers > 1; the report does not depend on
/// the worker count. Throws Error{TooFewSamples} when repetitions < 2.
StabilityReport stability_run(std::span<const int> labels, const std::vector<std::string>& arms,
                              const StabilityOptions& options,
                              const std::function<std::vector<ArmOutcome>(const SplitPlan&)>& run_one);

/// Recomputes aggregates from the per-repetition list.
std::vector<Aggregate> aggregate(const StabilityReport& report);

nlohmann::json to_json(const StabilityReport& report);
/// Fixed-width table: arm, accuracy mean/std, AUC mean/std.
std::string format_table(const StabilityReport& report);

}  // namespace adscan::evaluation
