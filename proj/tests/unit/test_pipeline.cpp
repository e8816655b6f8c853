#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "adscan/error.hpp"
#include "adscan/experiment.hpp"
#include "adscan/hash.hpp"
#include "adscan/synthetic.hpp"
#include "small_run.hpp"

using namespace adscan;
using namespace adscan::pipeline;
using nlohmann::json;
using adscan::testing::small_config;
using adscan::testing::small_experiment;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

std::vector<std::size_t> range(std::size_t a, std::size_t b) {
  std::vector<std::size_t> v;
  for (auto i = a; i < b; ++i) v.push_back(i);
  return v;
}

// Shared fit used by the schema and container cases.
struct Fitted {
  PipelineConfig config = small_config();
  Experiment ex = small_experiment(config);
  std::vector<std::size_t> train = range(0, 45);
  EmbeddingSet set = ex.embeddings(config.doc2vec, true, true, train);
  PreparedSplit prepared = prepare_split(ex.data(), *set.docs, set.embedders, train, ex.fit_options(1.0));
};

Fitted& fitted() {
  static Fitted f;
  return f;
}

}  // namespace

TEST_CASE("generated corpus parses cleanly and is seed-determined") {
  synthetic::SyntheticCorpusSpec spec;
  spec.control_docs = 30;
  spec.dementia_docs = 30;
  const auto docs = synthetic::generate_synthetic_corpus(spec);
  REQUIRE(docs.size() == 60);
  std::size_t mimics = 0;
  for (const auto& d : docs) {
    chat::Transcript t;
    CHECK_NOTHROW(t = chat::parse_chat(chat::RawChatDocument::from_text(d.chat_text, d.id)));
    CHECK(t.id == d.id);
    CHECK(participant_utterance_count(t) >= spec.min_utterances + spec.comment_words);
    mimics += d.mimic;
  }
  CHECK(docs.front().metadata.label == chat::Label::Control);
  CHECK(docs.back().metadata.label == chat::Label::Dementia);
  CHECK(mimics < 30);

  const auto again = synthetic::generate_synthetic_corpus(spec);
  for (std::size_t i = 0; i < docs.size(); ++i) CHECK(again[i].chat_text == docs[i].chat_text);
  spec.seed = 2;
  CHECK(synthetic::generate_synthetic_corpus(spec)[0].chat_text != docs[0].chat_text);

  const auto bg = synthetic::generate_background(spec, 12);
  REQUIRE(bg.size() == 12);
  for (const auto& d : bg) {
    CHECK(d.id.rfind("bg", 0) == 0);
    CHECK(d.metadata.label == chat::Label::Unknown);
    CHECK(chat::parse_chat(chat::RawChatDocument::from_text(d.chat_text, d.id)).label == chat::Label::Unknown);
  }
}

TEST_CASE("written corpus reloads to the same transcripts") {
  synthetic::SyntheticCorpusSpec spec;
  spec.control_docs = 4;
  spec.dementia_docs = 5;
  const auto docs = synthetic::generate_synthetic_corpus(spec);
  const auto dir = std::filesystem::temp_directory_path() / "adscan_unit_corpus";
  std::filesystem::remove_all(dir);
  synthetic::write_corpus(dir, docs, {{"format_version", 1}});
  const auto loaded = load_transcripts(dir, dir / "metadata.json");
  CHECK(loaded == synthetic::to_transcripts(docs));

  std::filesystem::remove(dir / "syn0003.cha");
  try {
    load_transcripts(dir, dir / "metadata.json");
    FAIL("missing transcript accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("syn0003.cha") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("config text, overrides and hash") {
  const auto c = parse_config(
      "# run\n"
      "pipeline = 2\n"
      "search.c = 0.5, 10\n"
      "doc2vec.vec_size = 12   \n"
      "\n"
      "workers = 4\n");
  CHECK(c.pipeline == 2);
  CHECK(c.search_c == std::vector<double>{0.5, 10.0});
  CHECK(c.doc2vec.vec_size == 12);
  CHECK(c.workers == 4);

  CHECK(code_of([] { parse_config("nonsense = 1\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("pipeline = x\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("just a line\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("pipeline = 5\n").validate(); }) == ErrorCode::InvalidConfig);

  auto other = c;
  other.workers = 1;
  other.out_dir = "elsewhere";
  other.corpus_dir = "corpus";
  CHECK(other.hash() == c.hash());
  other.c = 2.0;
  CHECK(other.hash() != c.hash());

  // Every key written by entries() reads back to the same configuration.
  std::string text;
  for (const auto& [k, v] : c.entries()) text += k + " = " + v + "\n";
  const auto back = parse_config(text);
  CHECK(back.hash() == c.hash());
  CHECK(back.entries() == c.entries());
}

TEST_CASE("pipeline schemas nest and featurize reproduces the training rows") {
  auto& f = fitted();
  std::vector<FittedPipeline> models;
  for (int p = 1; p <= 4; ++p)
    models.push_back(fit_pipeline(f.prepared, *features::pipeline_from_int(p), f.ex.fit_options(1.0)));

  const auto& p1 = models[0].schema.column_names();
  for (const auto& name : p1) CHECK(name.rfind("bow:", 0) == 0);
  for (std::size_t k = 0; k + 1 < models.size(); ++k) {
    const auto& a = models[k].schema.column_names();
    const auto& b = models[k + 1].schema.column_names();
    REQUIRE(a.size() < b.size());
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  CHECK(models[1].schema.dimension() == p1.size() + 5 + 2);
  CHECK(models[2].schema.dimension() == models[1].schema.dimension() + 6);
  CHECK(models[3].schema.dimension() == models[2].schema.dimension() + 8);

  const auto& p3 = models[2];
  for (std::size_t r = 0; r < f.train.size(); ++r) {
    const auto i = f.train[r];
    const Eigen::VectorXd x = featurize(p3, f.ex.data().docs[i], (*f.set.docs)[i]);
    CHECK((x - f.prepared.base.row(static_cast<Eigen::Index>(r)).transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  // The one-argument form embeds on the fly.
  const auto& t = f.ex.data().docs[50];
  CHECK(std::abs(predict_proba(models[3], t) - predict_proba(models[3], t, (*f.set.docs)[50])) < 1e-9);
}

TEST_CASE("held-out documents do not influence the fit") {
  auto& f = fitted();
  const auto base = fit_pipeline(f.prepared, features::Pipeline::P2, f.ex.fit_options(1.0));

  auto data = f.ex.data();
  for (std::size_t i = 45; i < data.docs.size(); ++i) {
    data.docs[i].utterances.front().tokens.push_back("zzzleak");
    data.docs[i].demographics.age = 99.0;
    data.labels[i] = 1 - data.labels[i];
  }
  const auto prepared = prepare_split(data, *f.set.docs, f.set.embedders, f.train, f.ex.fit_options(1.0));
  const auto changed = fit_pipeline(prepared, features::Pipeline::P2, f.ex.fit_options(1.0));
  CHECK(model_to_json(changed, 1).dump() == model_to_json(base, 1).dump());
  CHECK(!changed.vocabulary.index.find("zzzleak"));
}

TEST_CASE("model container round trip and rejection") {
  auto& f = fitted();
  const auto model = fit_pipeline(f.prepared, features::Pipeline::P4, f.ex.fit_options(1.0));
  const auto j = model_to_json(model, 0x1234);
  CHECK(j.at("format_version") == kContainerFormatVersion);
  CHECK(j.at("config_hash") == "0000000000001234");

  const auto back = model_from_json(json::parse(j.dump()));
  CHECK(model_to_json(back, 0x1234).dump() == j.dump());
  for (std::size_t i = 45; i < f.ex.data().docs.size(); ++i) {
    const auto& t = f.ex.data().docs[i];
    CHECK(predict_proba(back, t) == doctest::Approx(predict_proba(model, t)).epsilon(1e-12));
  }

  auto reseal = [](json c) {
    c.erase("container_hash");
    c["container_hash"] = hex64(fnv1a(c.dump()));
    return c;
  };
  auto tampered = j;
  tampered["classifier"]["bias"] = tampered["classifier"]["bias"].get<double>() + 1.0;
  CHECK(code_of([&] { model_from_json(tampered); }) == ErrorCode::SchemaMismatch);

  auto vocab = j;
  vocab["doc2vec"]["vocabulary"][0] = "different";
  CHECK(code_of([&] { model_from_json(reseal(vocab)); }) == ErrorCode::SchemaMismatch);
  vocab["doc2vec"]["vocabulary_hash"] =
      hex64(TokenIndex(vocab["doc2vec"]["vocabulary"].get<std::vector<std::string>>()).hash());
  CHECK(code_of([&] { model_from_json(reseal(vocab)); }) == ErrorCode::SchemaMismatch);

  auto shape = j;
  shape["mixing"]["logits"].push_back(0.0);
  CHECK(code_of([&] { model_from_json(reseal(shape)); }) == ErrorCode::SchemaMismatch);

  auto version = j;
  version["format_version"] = 99;
  CHECK(code_of([&] { model_from_json(reseal(version)); }) == ErrorCode::SchemaMismatch);
  CHECK(code_of([&] { model_from_json(json::array()); }) == ErrorCode::SchemaMismatch);
  CHECK(code_of([&] { model_from_json(json{{"kind", "adscan-model"}}); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("run_pipeline reports are identical across worker counts") {
  auto c = small_config();
  c.pipeline = 4;
  std::string first;
  for (std::size_t workers : {1u, 3u}) {
    c.workers = workers;
    auto ex = small_experiment(c);
    const auto out = run_pipeline(ex);
    if (first.empty())
      first = out.report.dump();
    else
      CHECK(out.report.dump() == first);
    CHECK(out.report.at("format_version") == kReportFormatVersion);
    CHECK(out.report.at("config_hash") == hex64(c.hash()));
    CHECK(out.report.at("stability").at("repetitions") == 3);
  }
}

TEST_CASE("pipeline 1 report and c-sweep table") {
  auto c = small_config();
  c.pipeline = 1;
  c.search_c = kTableCValues;
  auto ex = small_experiment(c);
  const auto out = run_pipeline(ex, false);
  const auto& blocks = out.report.at("schema").at("blocks");
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].at("kind") == "bow");
  CHECK(out.report.at("stability").is_null());

  std::istringstream in(out.c_sweep);
  std::string line;
  std::getline(in, line);
  CHECK(line == "c,validation_accuracy");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) == kTableCValues[rows]);
    CHECK(std::isfinite(std::stod(line.substr(comma + 1))));
    ++rows;
  }
  CHECK(rows == kTableCValues.size());
}
