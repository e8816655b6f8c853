#include "adscan/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "adscan/error.hpp"
#include "adscan/hash.hpp"

namespace adscan::pipeline {

using features::Pipeline;

namespace {

bool needs_doc2vec(Pipeline p) { return p == Pipeline::P3 || p == Pipeline::P4; }
bool needs_context(Pipeline p) { return p == Pipeline::P4; }

std::string arm_name(Pipeline p) { return "P" + std::to_string(static_cast<int>(p)); }

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

nlohmann::json reported_config(const PipelineConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : c.entries()) {
    if (k == "workers" || k == "out_dir" || k == "corpus_dir" || k == "metadata" || k == "background_dir") continue;
    j[k] = v;
  }
  return j;
}

std::vector<int> labels_at(const Dataset& d, std::span<const std::size_t> rows) {
  std::vector<int> y;
  for (auto i : rows) y.push_back(d.labels[i]);
  return y;
}

nlohmann::json search_json(const evaluation::SearchResult& r, std::size_t folds, bool random) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.results) {
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [k, v] : c.candidate.values) values[k] = v;
    nlohmann::json j{{"index", c.candidate.index},
                     {"values", values},
                     {"fold_accuracies", c.fold_accuracies},
                     {"mean_accuracy", c.mean_accuracy},
                     {"failed", c.failed}};
    if (c.failed) j["error"] = c.error;
    cands.push_back(std::move(j));
  }
  return {{"mode", random ? "random" : "grid"},
          {"folds", folds},
          {"candidates", cands},
          {"best", r.best ? nlohmann::json(*r.best) : nlohmann::json(nullptr)}};
}

class PipelineEvaluator : public evaluation::FoldEvaluator {
 public:
  PipelineEvaluator(Experiment& ex, Pipeline p) : ex_(ex), p_(p) {}

  std::string feature_key(const evaluation::Candidate& c) const override {
    return needs_doc2vec(p_) ? doc2vec_key(ex_.hyper(c).doc2vec) : std::string("none");
  }

  double evaluate(const evaluation::Candidate& c, std::size_t fold, const std::vector<std::size_t>& train,
                  const std::vector<std::size_t>& validation) override {
    const auto h = ex_.hyper(c);
    const auto key = feature_key(c);
    if (!prepared_ || key != key_ || fold != fold_) {
      prepared_.reset();
      set_ = ex_.embeddings(h.doc2vec, needs_doc2vec(p_), needs_context(p_), train);
      prepared_ = prepare_split(ex_.data(), *set_.docs, set_.embedders, train, ex_.fit_options(h.c));
      key_ = key;
      fold_ = fold;
    }
    const auto model = fit_pipeline(*prepared_, p_, ex_.fit_options(h.c));
    std::size_t correct = 0;
    for (auto i : validation) {
      const int pred = predict_proba(model, ex_.data().docs[i], (*set_.docs)[i]) >= 0.5 ? 1 : 0;
      correct += pred == ex_.data().labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(validation.size());
  }

 private:
  Experiment& ex_;
  Pipeline p_;
  std::string key_;
  std::size_t fold_ = 0;
  EmbeddingSet set_;
  std::optional<PreparedSplit> prepared_;
};

Hyper best_hyper(Experiment& ex, const evaluation::SearchResult& r) {
  if (!r.best) {
    std::string why = r.results.empty() ? "no candidates" : r.results.front().error;
    throw Error(ErrorCode::DivergenceDetected, "every search candidate failed: " + why);
  }
  return ex.hyper(r.results[*r.best].candidate);
}

}  // namespace

nlohmann::json to_json(const Hyper& h) {
  return {{"c", h.c},
          {"doc2vec.vec_size", h.doc2vec.vec_size},
          {"doc2vec.alpha", h.doc2vec.alpha},
          {"doc2vec.min_alpha", h.doc2vec.min_alpha}};
}

std::string doc2vec_key(const doc2vec::Doc2VecConfig& c) {
  return std::to_string(c.vec_size) + "/" + fmt(c.alpha) + "/" + fmt(c.min_alpha) + "/" + std::to_string(c.window) +
         "/" + std::to_string(c.epochs) + "/" + std::to_string(c.infer_epochs) + "/" + std::to_string(c.seed) + "/" +
         (c.negative_sampling ? std::to_string(c.negatives) : "full");
}

Experiment::Experiment(PipelineConfig config, Dataset data, std::vector<chat::Transcript> background)
    : config_(std::move(config)), data_(std::move(data)), background_(std::move(background)) {
  config_.validate();
}

FitOptions Experiment::fit_options(double c) const {
  FitOptions o;
  o.c = c;
  o.classifier = config_.classifier;
  o.criterion = config_.criterion == "entropy" ? classifiers::Criterion::Entropy : classifiers::Criterion::Gini;
  if (config_.max_depth > 0) o.max_depth = config_.max_depth;
  o.min_df = config_.min_df;
  o.standardize_embeddings = config_.standardize_embeddings;
  o.joint_mixing = config_.joint_mixing;
  o.layer_norm = config_.layer_norm;
  return o;
}

EmbeddingSet Experiment::embeddings(const doc2vec::Doc2VecConfig& d2v, bool need_doc2vec, bool need_context,
                                    std::span<const std::size_t> train) {
  const auto n = data_.docs.size();
  if (!need_doc2vec && !need_context)
    return {{}, std::make_shared<const std::vector<DocEmbeddings>>(n)};

  if (config_.embedder_fit == EmbedderFit::TrainSplit) {
    std::vector<chat::Transcript> docs;
    for (auto i : train) docs.push_back(data_.docs[i]);
    auto e = fit_embedders(docs, need_doc2vec ? &d2v : nullptr, need_context ? &config_.bilm : nullptr);
    auto out = std::make_shared<std::vector<DocEmbeddings>>();
    for (const auto& t : data_.docs) out->push_back(embed(t, e, config_.layer_norm));
    return {e, out};
  }

  if (background_.empty())
    throw Error(ErrorCode::InvalidConfig, "embedders are fitted on a background corpus but none was given");
  const std::string key = (need_doc2vec ? doc2vec_key(d2v) : "-") + (need_context ? "|ctx" : "|-");
  std::lock_guard lock(mutex_);
  if (auto it = doc2vec_cache_.find(key); it != doc2vec_cache_.end()) return it->second;

  Embedders e;
  if (need_context) {
    if (!background_bilm_) {
      background_bilm_ = fit_embedders(background_, nullptr, &config_.bilm).bilm;
      Embedders only{nullptr, background_bilm_};
      auto pooled = std::make_shared<std::vector<Eigen::MatrixXd>>();
      for (const auto& t : data_.docs) pooled->push_back(embed(t, only, config_.layer_norm).pooled);
      pooled_ = pooled;
    }
    e.bilm = background_bilm_;
  }
  std::shared_ptr<const std::vector<DocEmbeddings>> d2v_docs;
  if (need_doc2vec) {
    const std::string d2v_key = doc2vec_key(d2v) + "|-";
    if (auto it = doc2vec_cache_.find(d2v_key); it != doc2vec_cache_.end()) {
      e.doc2vec = it->second.embedders.doc2vec;
      d2v_docs = it->second.docs;
    } else {
      e.doc2vec = fit_embedders(background_, &d2v, nullptr).doc2vec;
      Embedders only{e.doc2vec, nullptr};
      auto docs = std::make_shared<std::vector<DocEmbeddings>>();
      for (const auto& t : data_.docs) docs->push_back(embed(t, only, config_.layer_norm));
      d2v_docs = docs;
      doc2vec_cache_[d2v_key] = {only, d2v_docs};
    }
  }
  auto docs = std::make_shared<std::vector<DocEmbeddings>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (d2v_docs) (*docs)[i].doc_vector = (*d2v_docs)[i].doc_vector;
    if (need_context) (*docs)[i].pooled = (*pooled_)[i];
  }
  EmbeddingSet set{e, docs};
  doc2vec_cache_[key] = set;
  return set;
}

evaluation::SearchSpace Experiment::search_space() const {
  evaluation::SearchSpace s;
  if (!config_.search_vec_size.empty()) s.dimensions.push_back({"vec_size", config_.search_vec_size});
  if (!config_.search_alpha.empty()) s.dimensions.push_back({"alpha", config_.search_alpha});
  if (!config_.search_min_alpha.empty()) s.dimensions.push_back({"min_alpha", config_.search_min_alpha});
  s.dimensions.push_back({"c", config_.search_c});
  return s;
}

Hyper Experiment::hyper(const evaluation::Candidate& c) const {
  Hyper h;
  h.c = c.get("c").value_or(config_.c);
  h.doc2vec = config_.doc2vec;
  if (auto v = c.get("vec_size")) h.doc2vec.vec_size = static_cast<int>(*v);
  if (auto v = c.get("alpha")) h.doc2vec.alpha = *v;
  if (auto v = c.get("min_alpha")) h.doc2vec.min_alpha = *v;
  return h;
}

evaluation::SearchResult Experiment::search(Pipeline p, std::span<const std::size_t> pool, std::uint64_t seed) {
  auto space = search_space();
  // min_alpha above alpha would make the schedule increase; such grid points
  // are dropped before the search.
  auto grid = config_.random_budget ? space.sample(*config_.random_budget, seed) : space.grid();
  std::erase_if(grid, [&](const evaluation::Candidate& c) {
    const auto h = hyper(c);
    return h.doc2vec.min_alpha > h.doc2vec.alpha;
  });
  if (grid.empty()) throw Error(ErrorCode::InvalidConfig, "no valid search candidates");

  // Re-express the filtered list as an explicit space of one candidate
  // dimension so cv_search sees exactly these points.
  struct Filtered : evaluation::FoldEvaluator {
    PipelineEvaluator inner;
    const std::vector<evaluation::Candidate>& grid;
    Filtered(Experiment& ex, Pipeline p, const std::vector<evaluation::Candidate>& g) : inner(ex, p), grid(g) {}
    const evaluation::Candidate& at(const evaluation::Candidate& c) const {
      return grid[static_cast<std::size_t>(*c.get("#"))];
    }
    std::string feature_key(const evaluation::Candidate& c) const override { return inner.feature_key(at(c)); }
    double evaluate(const evaluation::Candidate& c, std::size_t fold, const std::vector<std::size_t>& train,
                    const std::vector<std::size_t>& val) override {
      return inner.evaluate(at(c), fold, train, val);
    }
  } evaluator(*this, p, grid);

  std::vector<double> positions(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) positions[i] = static_cast<double>(i);
  evaluation::SearchSpace indexed{{{"#", positions}}};
  evaluation::SearchOptions opt;
  opt.folds = config_.folds;
  opt.seed = seed;
  auto raw = evaluation::cv_search(pool, data_.labels, indexed, opt, evaluator);
  for (auto& r : raw.results) r.candidate = grid[static_cast<std::size_t>(*r.candidate.get("#"))];
  raw.best = evaluation::select_best(raw.results);
  return raw;
}

std::vector<ScoredArm> Experiment::fit_and_score(const std::vector<ArmSpec>& arms, std::span<const std::size_t> train,
                                                 std::span<const std::size_t> test) {
  // Group arms by the embeddings they need; arms without embeddings join the
  // first group.
  std::vector<std::string> keys;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const auto key = needs_doc2vec(arms[a].pipeline) ? doc2vec_key(arms[a].hyper.doc2vec) : std::string();
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(a);
  }
  if (groups.count("") && keys.size() > 1) {
    auto& first = groups[keys[0] == "" ? keys[1] : keys[0]];
    for (auto a : groups[""]) first.push_back(a);
    groups.erase("");
    std::erase(keys, std::string());
  }

  const auto y_test = labels_at(data_, test);
  std::vector<ScoredArm> out(arms.size());
  for (const auto& key : keys) {
    const auto& members = groups[key];
    bool d2v = false, ctx = false;
    doc2vec::Doc2VecConfig cfg = config_.doc2vec;
    for (auto a : members) {
      d2v |= needs_doc2vec(arms[a].pipeline);
      ctx |= needs_context(arms[a].pipeline);
      if (needs_doc2vec(arms[a].pipeline)) cfg = arms[a].hyper.doc2vec;
    }
    const auto set = embeddings(cfg, d2v, ctx, train);
    const auto prepared = prepare_split(data_, *set.docs, set.embedders, train, fit_options(1.0));
    for (auto a : members) {
      auto& s = out[a];
      s.model = fit_pipeline(prepared, arms[a].pipeline, fit_options(arms[a].hyper.c));
      s.scores.resize(static_cast<Eigen::Index>(test.size()));
      std::vector<int> pred;
      for (std::size_t r = 0; r < test.size(); ++r) {
        s.scores[static_cast<Eigen::Index>(r)] = predict_proba(s.model, data_.docs[test[r]], (*set.docs)[test[r]]);
        pred.push_back(s.scores[static_cast<Eigen::Index>(r)] >= 0.5 ? 1 : 0);
      }
      s.confusion = evaluation::confusion(y_test, pred);
      s.accuracy = s.confusion.accuracy();
      s.auc = evaluation::roc_auc(y_test, std::span<const double>(s.scores.data(), test.size())).auc;
    }
  }
  return out;
}

evaluation::StabilityReport Experiment::stability(const std::vector<ArmSpec>& arms, std::size_t repetitions,
                                                  std::uint64_t base_seed) {
  std::vector<std::string> names;
  for (const auto& a : arms) names.push_back(arm_name(a.pipeline));
  evaluation::StabilityOptions opt;
  opt.repetitions = repetitions;
  opt.base_seed = base_seed;
  opt.stratified = config_.stratified;
  opt.workers = config_.workers;
  return evaluation::stability_run(data_.labels, names, opt, [&](const evaluation::SplitPlan& plan) {
    const auto train = plan.train_and_validation();
    std::vector<evaluation::ArmOutcome> outcomes;
    for (const auto& s : fit_and_score(arms, train, plan.test)) outcomes.push_back({s.accuracy, s.auc});
    return outcomes;
  });
}

std::string c_sweep_table(const evaluation::SearchResult& result) {
  std::string out = "c,validation_accuracy\n";
  if (!result.best) return out;
  auto rest = [](const evaluation::Candidate& c) {
    std::vector<std::pair<std::string, double>> v;
    for (const auto& kv : c.values)
      if (kv.first != "c") v.push_back(kv);
    return v;
  };
  const auto target = rest(result.results[*result.best].candidate);
  for (const auto& r : result.results) {
    if (rest(r.candidate) != target) continue;
    out += fmt(r.candidate.get("c").value_or(0.0)) + "," + (r.failed ? std::string("failed") : fmt(r.mean_accuracy)) +
           "\n";
  }
  return out;
}

RunOutputs run_pipeline(Experiment& ex, bool with_stability) {
  const auto& cfg = ex.config();
  const auto p = *features::pipeline_from_int(cfg.pipeline);
  const auto plan = evaluation::split(ex.data().labels, cfg.seed, {0.8, 0.1, 0.1}, cfg.stratified);
  const auto pool = plan.train_and_validation();

  const auto search = ex.search(p, pool, cfg.seed);
  const auto best = best_hyper(ex, search);
  auto scored = ex.fit_and_score({{p, best}}, pool, plan.test);
  auto& arm = scored.front();
  const auto y_test = labels_at(ex.data(), plan.test);
  const auto roc = evaluation::roc_auc(y_test, std::span<const double>(arm.scores.data(), plan.test.size()));
  std::optional<evaluation::StabilityReport> stability;
  if (with_stability) stability = ex.stability({{p, best}}, cfg.repetitions, cfg.seed);

  RunOutputs out;
  std::ostringstream roc_csv;
  evaluation::write_roc_csv(roc_csv, roc.curve);
  out.roc_csv = roc_csv.str();
  out.c_sweep = c_sweep_table(search);
  if (stability) out.table = evaluation::format_table(*stability);
  out.model = model_to_json(arm.model, cfg.hash());

  const auto& schema = arm.model.schema;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : schema.blocks())
    blocks.push_back({{"kind", features::to_string(b.kind)}, {"offset", b.offset}, {"size", b.size}});
  out.report = {
      {"format_version", kReportFormatVersion},
      {"config_hash", hex64(cfg.hash())},
      {"config", reported_config(cfg)},
      {"pipeline", cfg.pipeline},
      {"schema", {{"dimension", schema.dimension()}, {"hash", hex64(schema.hash())}, {"blocks", blocks}}},
      {"split",
       {{"seed", plan.seed},
        {"train", plan.train.size()},
        {"validation", plan.validation.size()},
        {"test", plan.test.size()}}},
      {"search", search_json(search, cfg.folds, cfg.random_budget.has_value())},
      {"best", to_json(best)},
      {"test",
       {{"accuracy", arm.accuracy},
        {"auc", roc.auc},
        {"confusion",
         {{"tp", arm.confusion.tp}, {"tn", arm.confusion.tn}, {"fp", arm.confusion.fp}, {"fn", arm.confusion.fn}}}}},
      {"model_version", container_version(out.model)},
      {"stability", stability ? evaluation::to_json(*stability) : nlohmann::json(nullptr)}};
  return out;
}

StabilityOutputs run_stability(Experiment& ex, const std::vector<Pipeline>& arms) {
  const auto& cfg = ex.config();
  const auto plan = evaluation::split(ex.data().labels, cfg.seed, {0.8, 0.1, 0.1}, cfg.stratified);
  const auto pool = plan.train_and_validation();
  std::vector<ArmSpec> specs;
  nlohmann::json tuned = nlohmann::json::array();
  for (auto p : arms) {
    const auto search = ex.search(p, pool, cfg.seed);
    const auto best = best_hyper(ex, search);
    specs.push_back({p, best});
    tuned.push_back({{"arm", arm_name(p)},
                     {"best", to_json(best)},
                     {"validation_accuracy", search.results[*search.best].mean_accuracy}});
  }
  const auto report = ex.stability(specs, cfg.repetitions, cfg.seed);
  StabilityOutputs out;
  out.table = evaluation::format_table(report);
  out.report = {{"format_version", kReportFormatVersion},
                {"config_hash", hex64(cfg.hash())},
                {"config", reported_config(cfg)},
                {"tuning", tuned},
                {"stability", evaluation::to_json(report)}};
  return out;
}

}  // namespace adscan::pipeline
