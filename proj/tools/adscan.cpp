// adscan: generate, dump, train, evaluate, stability and serve.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "adscan/chat_json.hpp"
#include "adscan/config.hpp"
#include "adscan/error.hpp"
#include "adscan/experiment.hpp"
#include "adscan/hash.hpp"
#include "adscan/screening_service.hpp"
#include "adscan/synthetic.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace adscan;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<int> pipeline;
  std::optional<std::size_t> repetitions;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> corpus;
  bool grid = false;
  std::optional<std::size_t> random_budget;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value config file");
  app->add_option("--set", c.overrides, "config override KEY=VALUE (repeatable)");
  app->add_option("--pipeline", c.pipeline, "pipeline 1..4")->check(CLI::Range(1, 4));
  app->add_option("--repetitions", c.repetitions, "stability repetitions");
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--workers", c.workers, "worker threads for the stability study");
  app->add_option("--corpus", c.corpus, "corpus directory (transcripts and metadata.json)");
  auto* grid = app->add_flag("--grid", c.grid, "exhaustive grid search (default)");
  app->add_option("--random-search", c.random_budget, "random search with BUDGET candidates")->excludes(grid);
}

pipeline::PipelineConfig resolve(const Common& c) {
  auto cfg = c.config_path.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "override '" + kv + "' is not KEY=VALUE");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.pipeline) cfg.pipeline = *c.pipeline;
  if (c.repetitions) cfg.repetitions = *c.repetitions;
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.workers) cfg.workers = *c.workers;
  if (c.corpus) cfg.corpus_dir = *c.corpus;
  if (c.grid) cfg.random_budget.reset();
  if (c.random_budget) cfg.random_budget = *c.random_budget;
  cfg.validate();
  return cfg;
}

std::string artifact_header(std::uint64_t config_hash) {
  return "# format_version=" + std::to_string(pipeline::kReportFormatVersion) + " config_hash=" + hex64(config_hash) +
         "\n";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw Error(ErrorCode::Io, path.string() + ": cannot write");
  std::cerr << "wrote " << path.string() << "\n";
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, dir.string() + ": " + ec.message());
}

pipeline::Experiment load_experiment(const pipeline::PipelineConfig& cfg) {
  if (cfg.corpus_dir.empty()) throw Error(ErrorCode::InvalidConfig, "no corpus directory (--corpus or corpus_dir)");
  const fs::path corpus = cfg.corpus_dir;
  const fs::path metadata = cfg.metadata.empty() ? corpus / "metadata.json" : fs::path(cfg.metadata);
  auto data = pipeline::labeled(pipeline::load_transcripts(corpus, metadata));
  std::vector<chat::Transcript> background;
  if (cfg.embedder_fit == pipeline::EmbedderFit::Background && cfg.pipeline >= 3) {
    const fs::path dir = cfg.background_dir.empty() ? corpus / "background" : fs::path(cfg.background_dir);
    if (!fs::exists(dir / "metadata.json"))
      throw Error(ErrorCode::InvalidConfig, dir.string() +
                                                ": no background corpus; set background_dir or embedder_fit = train");
    background = pipeline::load_transcripts(dir, dir / "metadata.json");
  }
  std::cerr << "loaded " << data.docs.size() << " labeled transcripts, " << background.size()
            << " background transcripts\n";
  return pipeline::Experiment(cfg, std::move(data), std::move(background));
}

// ------------------------------------------------------------------ commands

int cmd_generate(const Common& c, bool null_signal, std::optional<std::size_t> background_docs) {
  auto cfg = resolve(c);
  if (c.seed) cfg.synthetic.seed = *c.seed;
  if (null_signal) cfg.synthetic.null_signal = true;
  if (background_docs) cfg.background_docs = *background_docs;
  const fs::path out = cfg.out_dir;
  const json provenance{{"format_version", pipeline::kReportFormatVersion},
                        {"config_hash", hex64(cfg.hash())},
                        {"generator", cfg.synthetic.to_json()}};
  const auto docs = synthetic::generate_synthetic_corpus(cfg.synthetic);
  synthetic::write_corpus(out, docs, provenance);
  std::cerr << "wrote " << docs.size() << " transcripts to " << out.string() << "\n";
  if (cfg.background_docs > 0) {
    const auto bg = synthetic::generate_background(cfg.synthetic, cfg.background_docs);
    synthetic::write_corpus(out / "background", bg, provenance);
    std::cerr << "wrote " << bg.size() << " background transcripts to " << (out / "background").string() << "\n";
  }
  return kOk;
}

std::vector<chat::Transcript> read_inputs(const std::vector<std::string>& inputs, const std::string& metadata) {
  std::map<std::string, chat::SidecarRecord> records;
  if (!metadata.empty())
    for (auto& r : pipeline::read_metadata(metadata)) records[r.id] = r;
  std::vector<chat::Transcript> out;
  for (const auto& name : inputs) {
    const fs::path path = name;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot read");
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") {
      json j;
      try {
        j = json::parse(buf.str());
        if (j.is_array())
          for (const auto& t : j) out.push_back(t.get<chat::Transcript>());
        else
          out.push_back(j.get<chat::Transcript>());
      } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidMetadata, path.string() + ": " + e.what());
      }
      continue;
    }
    try {
      auto t = chat::parse_chat(chat::RawChatDocument::from_text(buf.str(), path.stem().string()));
      if (auto it = records.find(t.id); it != records.end()) chat::apply_sidecar(t, it->second);
      out.push_back(std::move(t));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.what());
    }
  }
  return out;
}

int cmd_dump(const std::vector<std::string>& inputs, const std::string& metadata, const std::string& out_path,
             const std::string& features_path, std::size_t min_df) {
  const auto docs = read_inputs(inputs, metadata);
  const std::string text = json(docs).dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  if (features_path.empty()) return kOk;

  // Counts, linguistic and demographic blocks, fitted on the dumped documents.
  pipeline::Dataset data{docs, std::vector<int>(docs.size(), 0)};
  std::vector<std::size_t> all(docs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  pipeline::FitOptions options;
  options.min_df = min_df;
  const auto prepared =
      pipeline::prepare_split(data, std::vector<pipeline::DocEmbeddings>(docs.size()), {}, all, options);
  const auto schema = features::make_schema(features::Pipeline::P2, prepared.shared.vocabulary, 0, 0);
  std::vector<std::string> ids;
  std::vector<std::optional<int>> labels;
  for (const auto& t : docs) {
    ids.push_back(t.id);
    labels.push_back(t.label == chat::Label::Unknown ? std::nullopt
                                                      : std::optional<int>(t.label == chat::Label::Dementia));
  }
  std::ostringstream csv;
  features::write_csv(csv, schema, prepared.base.leftCols(static_cast<Eigen::Index>(schema.dimension())), ids,
                      labels);
  write_file(features_path, csv.str());
  return kOk;
}

int cmd_train(const Common& c) {
  const auto cfg = resolve(c);
  auto ex = load_experiment(cfg);
  const auto out = pipeline::run_pipeline(ex, false);
  make_dir(cfg.out_dir);
  write_file(fs::path(cfg.out_dir) / "model.json", out.model.dump() + "\n");
  write_file(fs::path(cfg.out_dir) / "train_report.json", out.report.dump(2) + "\n");
  write_file(fs::path(cfg.out_dir) / "c_sweep.csv", artifact_header(cfg.hash()) + out.c_sweep);
  std::cout << "test accuracy " << out.report["test"]["accuracy"].get<double>() << ", AUC "
            << out.report["test"]["auc"].get<double>() << "\n";
  return kOk;
}

int cmd_evaluate(const Common& c) {
  const auto cfg = resolve(c);
  auto ex = load_experiment(cfg);
  const auto out = pipeline::run_pipeline(ex, true);
  const fs::path dir = cfg.out_dir;
  make_dir(dir);
  const auto header = artifact_header(cfg.hash());
  write_file(dir / "report.json", out.report.dump(2) + "\n");
  write_file(dir / "table.txt", header + out.table);
  write_file(dir / "roc.csv", header + out.roc_csv);
  write_file(dir / "c_sweep.csv", header + out.c_sweep);
  write_file(dir / "model.json", out.model.dump() + "\n");
  std::cout << out.table;
  return kOk;
}

int cmd_stability(const Common& c, const std::vector<int>& arm_ids) {
  const auto cfg = resolve(c);
  std::vector<features::Pipeline> arms;
  for (int id : arm_ids) arms.push_back(*features::pipeline_from_int(id));
  auto run_cfg = cfg;
  for (int id : arm_ids) run_cfg.pipeline = std::max(run_cfg.pipeline, id);  // loads the background when needed
  auto ex = load_experiment(run_cfg);
  const auto out = pipeline::run_stability(ex, arms);
  const fs::path dir = cfg.out_dir;
  make_dir(dir);
  write_file(dir / "stability.json", out.report.dump(2) + "\n");
  write_file(dir / "stability_table.txt", artifact_header(run_cfg.hash()) + out.table);
  std::cout << out.table;
  return kOk;
}

std::atomic<bool> g_reload{false};
httplib::Server* g_server = nullptr;

int cmd_serve(std::string model_path, std::string bind) {
  if (model_path.empty())
    if (const char* env = std::getenv("MODEL_PATH")) model_path = env;
  if (bind.empty()) {
    const char* env = std::getenv("BIND_ADDR");
    bind = env ? env : "127.0.0.1:8080";
  }
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "bind address must be HOST:PORT");
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad port in '" + bind + "'");
  }

  service::ScreeningService svc;
  if (!model_path.empty()) {
    try {
      svc.load(model_path);
      std::cerr << "loaded model " << svc.health()["version"].get<std::string>() << "\n";
    } catch (const Error& e) {
      std::cerr << "model not loaded: " << e.what() << "\n";
    }
  }
  httplib::Server server;
  service::register_routes(server, svc);
  g_server = &server;
  std::signal(SIGHUP, [](int) { g_reload = true; });
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });

  std::atomic<bool> running{true};
  std::thread watcher([&] {
    while (running) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      if (!g_reload.exchange(false) || model_path.empty()) continue;
      try {
        svc.load(model_path);
        std::cerr << "reloaded model " << svc.health()["version"].get<std::string>() << "\n";
      } catch (const Error& e) {
        std::cerr << "reload failed, keeping the previous model: " << e.what() << "\n";
      }
    }
  });
  std::cerr << "listening on " << host << ":" << port << "\n";
  const bool ok = server.listen(host, port);
  running = false;
  watcher.join();
  g_server = nullptr;
  if (!ok) throw Error(ErrorCode::Io, "cannot listen on " + bind);
  return kOk;
}

int exit_code(ErrorCode code) {
  if (code == ErrorCode::InvalidConfig) return kUsage;
  if (is_numeric_failure(code)) return kNumeric;
  return kData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech-based dementia screening: corpus tools, experiments and the scoring service"};
  app.require_subcommand(1);

  Common gen, trn, evl, stb;
  bool null_signal = false;
  std::optional<std::size_t> background_docs;
  auto* generate = app.add_subcommand("generate", "write a synthetic corpus and its background corpus");
  add_common(generate, gen);
  generate->add_flag("--null", null_signal, "both classes from one distribution");
  generate->add_option("--background", background_docs, "background documents (0 for none)");

  std::vector<std::string> inputs;
  std::string metadata, dump_out, features_csv;
  std::size_t min_df = 1;
  auto* dump = app.add_subcommand("dump", "parse transcripts and print them as JSON");
  dump->add_option("inputs", inputs, "CHAT files or transcript JSON")->required();
  dump->add_option("--metadata", metadata, "sidecar metadata JSON");
  dump->add_option("--out", dump_out, "write JSON here instead of stdout");
  dump->add_option("--features", features_csv, "also write a count/linguistic/demographic feature CSV");
  dump->add_option("--min-df", min_df, "vocabulary document-frequency cutoff for --features");

  auto* train = app.add_subcommand("train", "search, fit and write a model container");
  add_common(train, trn);
  auto* evaluate = app.add_subcommand("evaluate", "full run: search, test, stability, artifacts");
  add_common(evaluate, evl);
  std::vector<int> arms{1, 2, 3, 4};
  auto* stability = app.add_subcommand("stability", "repeated-split study of several pipelines");
  add_common(stability, stb);
  stability->add_option("--arms", arms, "pipelines to compare")->delimiter(',')->check(CLI::Range(1, 4));

  std::string model_path, bind;
  auto* serve = app.add_subcommand("serve", "HTTP scoring service");
  serve->add_option("--model", model_path, "model container (default $MODEL_PATH)");
  serve->add_option("--bind", bind, "HOST:PORT (default $BIND_ADDR or 127.0.0.1:8080)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*generate) return cmd_generate(gen, null_signal, background_docs);
    if (*dump) return cmd_dump(inputs, metadata, dump_out, features_csv, min_df);
    if (*train) return cmd_train(trn);
    if (*evaluate) return cmd_evaluate(evl);
    if (*stability) return cmd_stability(stb, arms);
    if (*serve) return cmd_serve(model_path, bind);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
