#include "adscan/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "adscan/error.hpp"
#include "adscan/hash.hpp"

namespace adscan::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::InvalidConfig, "bad value for " + key + ": '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(key, v);
    return d;
  } catch (const std::logic_error&) {
    bad(key, v);
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad(key, v);
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (double d : v) s += (s.empty() ? "" : ",") + fmt(d);
  return s;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  static const std::map<std::string, std::function<void(PipelineConfig&, const std::string&, const std::string&)>>
      setters = {
          {"pipeline", [](auto& c, auto& k, auto& v) { c.pipeline = to_int(k, v); }},
          {"corpus_dir", [](auto& c, auto&, auto& v) { c.corpus_dir = v; }},
          {"metadata", [](auto& c, auto&, auto& v) { c.metadata = v; }},
          {"background_dir", [](auto& c, auto&, auto& v) { c.background_dir = v; }},
          {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
          {"embedder_fit",
           [](auto& c, auto& k, auto& v) {
             if (v == "background") c.embedder_fit = EmbedderFit::Background;
             else if (v == "train") c.embedder_fit = EmbedderFit::TrainSplit;
             else bad(k, v);
           }},
          {"classifier", [](auto& c, auto&, auto& v) { c.classifier = v; }},
          {"criterion", [](auto& c, auto&, auto& v) { c.criterion = v; }},
          {"max_depth", [](auto& c, auto& k, auto& v) { c.max_depth = to_int(k, v); }},
          {"c", [](auto& c, auto& k, auto& v) { c.c = to_double(k, v); }},
          {"min_df", [](auto& c, auto& k, auto& v) { c.min_df = to_u64(k, v); }},
          {"standardize_embeddings", [](auto& c, auto& k, auto& v) { c.standardize_embeddings = to_bool(k, v); }},
          {"doc2vec.vec_size", [](auto& c, auto& k, auto& v) { c.doc2vec.vec_size = to_int(k, v); }},
          {"doc2vec.alpha", [](auto& c, auto& k, auto& v) { c.doc2vec.alpha = to_double(k, v); }},
          {"doc2vec.min_alpha", [](auto& c, auto& k, auto& v) { c.doc2vec.min_alpha = to_double(k, v); }},
          {"doc2vec.window", [](auto& c, auto& k, auto& v) { c.doc2vec.window = to_int(k, v); }},
          {"doc2vec.epochs", [](auto& c, auto& k, auto& v) { c.doc2vec.epochs = to_int(k, v); }},
          {"doc2vec.infer_epochs", [](auto& c, auto& k, auto& v) { c.doc2vec.infer_epochs = to_int(k, v); }},
          {"doc2vec.seed", [](auto& c, auto& k, auto& v) { c.doc2vec.seed = to_u64(k, v); }},
          {"doc2vec.negative_sampling",
           [](auto& c, auto& k, auto& v) { c.doc2vec.negative_sampling = to_bool(k, v); }},
          {"doc2vec.negatives", [](auto& c, auto& k, auto& v) { c.doc2vec.negatives = to_int(k, v); }},
          {"bilm.layers", [](auto& c, auto& k, auto& v) { c.bilm.layers = to_int(k, v); }},
          {"bilm.hidden", [](auto& c, auto& k, auto& v) { c.bilm.hidden = to_int(k, v); }},
          {"bilm.embedding", [](auto& c, auto& k, auto& v) { c.bilm.embedding = to_int(k, v); }},
          {"bilm.epochs", [](auto& c, auto& k, auto& v) { c.bilm.epochs = to_int(k, v); }},
          {"bilm.learning_rate", [](auto& c, auto& k, auto& v) { c.bilm.learning_rate = to_double(k, v); }},
          {"bilm.batch_size", [](auto& c, auto& k, auto& v) { c.bilm.batch_size = to_int(k, v); }},
          {"bilm.clip_norm", [](auto& c, auto& k, auto& v) { c.bilm.clip_norm = to_double(k, v); }},
          {"bilm.min_count", [](auto& c, auto& k, auto& v) { c.bilm.min_count = to_u64(k, v); }},
          {"bilm.seed", [](auto& c, auto& k, auto& v) { c.bilm.seed = to_u64(k, v); }},
          {"layer_norm", [](auto& c, auto& k, auto& v) { c.layer_norm = to_bool(k, v); }},
          {"joint_mixing", [](auto& c, auto& k, auto& v) { c.joint_mixing = to_bool(k, v); }},
          {"repetitions", [](auto& c, auto& k, auto& v) { c.repetitions = to_u64(k, v); }},
          {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
          {"workers", [](auto& c, auto& k, auto& v) { c.workers = to_u64(k, v); }},
          {"folds", [](auto& c, auto& k, auto& v) { c.folds = to_u64(k, v); }},
          {"stratified", [](auto& c, auto& k, auto& v) { c.stratified = to_bool(k, v); }},
          {"search.c", [](auto& c, auto& k, auto& v) { c.search_c = to_list(k, v); }},
          {"search.vec_size", [](auto& c, auto& k, auto& v) { c.search_vec_size = to_list(k, v); }},
          {"search.alpha", [](auto& c, auto& k, auto& v) { c.search_alpha = to_list(k, v); }},
          {"search.min_alpha", [](auto& c, auto& k, auto& v) { c.search_min_alpha = to_list(k, v); }},
          {"search.random_budget",
           [](auto& c, auto& k, auto& v) {
             if (v.empty() || v == "none") c.random_budget.reset();
             else c.random_budget = to_u64(k, v);
           }},
          {"synthetic.control_docs", [](auto& c, auto& k, auto& v) { c.synthetic.control_docs = to_u64(k, v); }},
          {"synthetic.dementia_docs", [](auto& c, auto& k, auto& v) { c.synthetic.dementia_docs = to_u64(k, v); }},
          {"synthetic.seed", [](auto& c, auto& k, auto& v) { c.synthetic.seed = to_u64(k, v); }},
          {"synthetic.null_signal", [](auto& c, auto& k, auto& v) { c.synthetic.null_signal = to_bool(k, v); }},
          {"synthetic.lexical_skew", [](auto& c, auto& k, auto& v) { c.synthetic.lexical_skew = to_double(k, v); }},
          {"synthetic.mimic_rate", [](auto& c, auto& k, auto& v) { c.synthetic.mimic_rate = to_double(k, v); }},
          {"synthetic.event_skew", [](auto& c, auto& k, auto& v) { c.synthetic.event_skew = to_double(k, v); }},
          {"synthetic.scramble_base",
           [](auto& c, auto& k, auto& v) { c.synthetic.scramble_base = to_double(k, v); }},
          {"synthetic.scramble_skew",
           [](auto& c, auto& k, auto& v) { c.synthetic.scramble_skew = to_double(k, v); }},
          {"synthetic.comment_words", [](auto& c, auto& k, auto& v) { c.synthetic.comment_words = to_u64(k, v); }},
          {"synthetic.comment_leak", [](auto& c, auto& k, auto& v) { c.synthetic.comment_leak = to_double(k, v); }},
          {"synthetic.min_utterances",
           [](auto& c, auto& k, auto& v) { c.synthetic.min_utterances = to_u64(k, v); }},
          {"synthetic.max_utterances",
           [](auto& c, auto& k, auto& v) { c.synthetic.max_utterances = to_u64(k, v); }},
          {"background_docs", [](auto& c, auto& k, auto& v) { c.background_docs = to_u64(k, v); }},
      };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  it->second(*this, key, v);
}

void PipelineConfig::validate() const {
  if (pipeline < 1 || pipeline > 4) throw Error(ErrorCode::InvalidConfig, "pipeline must be 1..4");
  if (classifier != "logistic" && classifier != "tree")
    throw Error(ErrorCode::InvalidConfig, "classifier must be logistic or tree");
  if (criterion != "gini" && criterion != "entropy")
    throw Error(ErrorCode::InvalidConfig, "criterion must be gini or entropy");
  if (!(c > 0)) throw Error(ErrorCode::InvalidConfig, "c must be positive");
  if (min_df < 1) throw Error(ErrorCode::InvalidConfig, "min_df must be at least 1");
  if (max_depth < 0) throw Error(ErrorCode::InvalidConfig, "max_depth must be >= 0");
  if (folds < 2) throw Error(ErrorCode::InvalidConfig, "folds must be at least 2");
  if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be at least 1");
  if (search_c.empty()) throw Error(ErrorCode::InvalidConfig, "search.c is empty");
  for (double v : search_c)
    if (!(v > 0)) throw Error(ErrorCode::InvalidConfig, "search.c values must be positive");
  doc2vec.validate();
  bilm.validate();
  synthetic.validate();
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
  return {
      {"pipeline", std::to_string(pipeline)},
      {"corpus_dir", corpus_dir},
      {"metadata", metadata},
      {"background_dir", background_dir},
      {"out_dir", out_dir},
      {"embedder_fit", embedder_fit == EmbedderFit::Background ? "background" : "train"},
      {"classifier", classifier},
      {"criterion", criterion},
      {"max_depth", std::to_string(max_depth)},
      {"c", fmt(c)},
      {"min_df", std::to_string(min_df)},
      {"standardize_embeddings", fmt_bool(standardize_embeddings)},
      {"doc2vec.vec_size", std::to_string(doc2vec.vec_size)},
      {"doc2vec.alpha", fmt(doc2vec.alpha)},
      {"doc2vec.min_alpha", fmt(doc2vec.min_alpha)},
      {"doc2vec.window", std::to_string(doc2vec.window)},
      {"doc2vec.epochs", std::to_string(doc2vec.epochs)},
      {"doc2vec.infer_epochs", std::to_string(doc2vec.infer_epochs)},
      {"doc2vec.seed", std::to_string(doc2vec.seed)},
      {"doc2vec.negative_sampling", fmt_bool(doc2vec.negative_sampling)},
      {"doc2vec.negatives", std::to_string(doc2vec.negatives)},
      {"bilm.layers", std::to_string(bilm.layers)},
      {"bilm.hidden", std::to_string(bilm.hidden)},
      {"bilm.embedding", std::to_string(bilm.embedding)},
      {"bilm.epochs", std::to_string(bilm.epochs)},
      {"bilm.learning_rate", fmt(bilm.learning_rate)},
      {"bilm.batch_size", std::to_string(bilm.batch_size)},
      {"bilm.clip_norm", fmt(bilm.clip_norm)},
      {"bilm.min_count", std::to_string(bilm.min_count)},
      {"bilm.seed", std::to_string(bilm.seed)},
      {"layer_norm", fmt_bool(layer_norm)},
      {"joint_mixing", fmt_bool(joint_mixing)},
      {"repetitions", std::to_string(repetitions)},
      {"seed", std::to_string(seed)},
      {"workers", std::to_string(workers)},
      {"folds", std::to_string(folds)},
      {"stratified", fmt_bool(stratified)},
      {"search.c", fmt_list(search_c)},
      {"search.vec_size", fmt_list(search_vec_size)},
      {"search.alpha", fmt_list(search_alpha)},
      {"search.min_alpha", fmt_list(search_min_alpha)},
      {"search.random_budget", random_budget ? std::to_string(*random_budget) : "none"},
      {"synthetic.control_docs", std::to_string(synthetic.control_docs)},
      {"synthetic.dementia_docs", std::to_string(synthetic.dementia_docs)},
      {"synthetic.seed", std::to_string(synthetic.seed)},
      {"synthetic.null_signal", fmt_bool(synthetic.null_signal)},
      {"synthetic.lexical_skew", fmt(synthetic.lexical_skew)},
      {"synthetic.mimic_rate", fmt(synthetic.mimic_rate)},
      {"synthetic.event_skew", fmt(synthetic.event_skew)},
      {"synthetic.scramble_base", fmt(synthetic.scramble_base)},
      {"synthetic.scramble_skew", fmt(synthetic.scramble_skew)},
      {"synthetic.comment_words", std::to_string(synthetic.comment_words)},
      {"synthetic.comment_leak", fmt(synthetic.comment_leak)},
      {"synthetic.min_utterances", std::to_string(synthetic.min_utterances)},
      {"synthetic.max_utterances", std::to_string(synthetic.max_utterances)},
      {"background_docs", std::to_string(background_docs)},
  };
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : entries()) j[k] = v;
  return j;
}

std::uint64_t PipelineConfig::hash() const {
  Fnv1a h;
  for (const auto& [k, v] : entries()) {
    if (k == "workers" || k == "out_dir" || k == "corpus_dir" || k == "metadata" || k == "background_dir") continue;
    h.update(k).update(std::string_view("=")).update(v).update(std::string_view("\n"));
  }
  return h.digest();
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(ss, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(number) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot read config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace adscan::pipeline
