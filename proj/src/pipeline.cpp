#include "adscan/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "adscan/chat_json.hpp"
#include "adscan/error.hpp"

namespace adscan::pipeline {

using features::BlockKind;
using features::Pipeline;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot read");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

features::Standardizer identity(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
}

Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

bool uses(Pipeline p, BlockKind k) {
  const auto blocks = features::pipeline_blocks(p);
  return std::find(blocks.begin(), blocks.end(), k) != blocks.end();
}

}  // namespace

// ------------------------------------------------------------------- data

std::vector<chat::SidecarRecord> read_metadata(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidMetadata, path.string() + ": " + e.what());
  }
  const auto& records = j.is_object() && j.contains("records") ? j.at("records") : j;
  if (!records.is_array()) throw Error(ErrorCode::InvalidMetadata, path.string() + ": expected an array of records");
  std::vector<chat::SidecarRecord> out;
  try {
    for (const auto& r : records) out.push_back(r.get<chat::SidecarRecord>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidMetadata, path.string() + ": " + e.what());
  }
  return out;
}

std::vector<chat::Transcript> load_transcripts(const std::filesystem::path& dir,
                                               const std::filesystem::path& metadata) {
  std::vector<chat::Transcript> out;
  for (const auto& record : read_metadata(metadata)) {
    const auto path = dir / (record.id + ".cha");
    try {
      auto t = chat::parse_chat(chat::RawChatDocument::from_text(read_file(path), path.string()));
      t.id = record.id;
      chat::apply_sidecar(t, record);
      out.push_back(std::move(t));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Io) throw;
      throw Error(e.code(), path.string() + ": " + e.what());
    }
  }
  return out;
}

Dataset labeled(std::vector<chat::Transcript> docs) {
  Dataset d;
  for (auto& t : docs) {
    if (t.label == chat::Label::Unknown) continue;
    d.labels.push_back(t.label == chat::Label::Dementia ? 1 : 0);
    d.docs.push_back(std::move(t));
  }
  return d;
}

// -------------------------------------------------------------- embedders

Embedders fit_embedders(std::span<const chat::Transcript> corpus, const doc2vec::Doc2VecConfig* doc2vec_config,
                        const context::BiLMConfig* bilm_config) {
  Embedders e;
  if (doc2vec_config) {
    std::vector<std::vector<std::string>> docs;
    for (const auto& t : corpus) docs.push_back(chat::clean_text(t));
    auto cfg = *doc2vec_config;
    cfg.track_loss = false;
    e.doc2vec = std::make_shared<const doc2vec::Doc2VecModel>(doc2vec::train(docs, cfg));
  }
  if (bilm_config) {
    std::vector<std::vector<std::string>> utterances;
    for (const auto& t : corpus)
      for (auto& u : chat::clean_utterances(t)) utterances.push_back(std::move(u));
    e.bilm = std::make_shared<const context::BiLMModel>(context::train_bilm(utterances, *bilm_config));
  }
  return e;
}

DocEmbeddings embed(const chat::Transcript& t, const Embedders& e, bool layer_norm) {
  DocEmbeddings out;
  if (e.doc2vec) {
    const auto tokens = chat::clean_text(t);
    try {
      out.doc_vector = doc2vec::infer_doc_vector(tokens, *e.doc2vec, e.doc2vec->config);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::AllTokensOOV) throw;
      out.doc_vector = Eigen::VectorXd::Zero(e.doc2vec->word_vectors.cols());
    }
  }
  if (e.bilm) out.pooled = context::pooled_layers(chat::clean_utterances(t), *e.bilm, layer_norm);
  return out;
}

// ----------------------------------------------------------------- models

double Classifier::predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return kind == Kind::Logistic ? classifiers::logreg_predict_proba(logistic, x)
                                : classifiers::tree_predict_proba(tree, x);
}

namespace {

Eigen::MatrixXd standardized_layers(const FittedPipeline& m, const Eigen::MatrixXd& pooled) {
  Eigen::MatrixXd z(pooled.rows(), pooled.cols());
  for (Eigen::Index j = 0; j < pooled.rows(); ++j)
    z.row(j) = m.context_layers[static_cast<std::size_t>(j)].transform_row(pooled.row(j).transpose()).transpose();
  return z;
}

}  // namespace

Eigen::VectorXd featurize(const FittedPipeline& model, const chat::Transcript& t, const DocEmbeddings& emb) {
  std::vector<features::Block> blocks;
  for (auto kind : features::pipeline_blocks(model.pipeline)) {
    switch (kind) {
      case BlockKind::Bow:
        blocks.push_back({kind, features::bow_transform(t, model.vocabulary)});
        break;
      case BlockKind::Linguistic:
        blocks.push_back({kind, model.linguistic.transform_row(features::raw_linguistic(t))});
        break;
      case BlockKind::Demographic:
        blocks.push_back({kind, model.demographic.transform_row(features::raw_demographic(t))});
        break;
      case BlockKind::Doc2Vec:
        if (emb.doc_vector.size() == 0) throw Error(ErrorCode::SchemaMismatch, "document vector missing");
        blocks.push_back({kind, model.doc_vectors.transform_row(emb.doc_vector)});
        break;
      case BlockKind::ContextEmb:
        if (emb.pooled.size() == 0) throw Error(ErrorCode::SchemaMismatch, "context layers missing");
        if (static_cast<std::size_t>(emb.pooled.rows()) != model.context_layers.size())
          throw Error(ErrorCode::SchemaMismatch, "context layer count differs from the model");
        blocks.push_back({kind, context::mix_pooled(standardized_layers(model, emb.pooled), model.head)});
        break;
    }
  }
  return features::assemble(model.schema, blocks);
}

Eigen::VectorXd featurize(const FittedPipeline& model, const chat::Transcript& t) {
  Embedders needed;
  if (uses(model.pipeline, BlockKind::Doc2Vec)) needed.doc2vec = model.embedders.doc2vec;
  if (uses(model.pipeline, BlockKind::ContextEmb)) needed.bilm = model.embedders.bilm;
  return featurize(model, t, embed(t, needed, model.head.layer_norm));
}

double predict_proba(const FittedPipeline& model, const chat::Transcript& t, const DocEmbeddings& emb) {
  return model.classifier.predict_proba(featurize(model, t, emb));
}

double predict_proba(const FittedPipeline& model, const chat::Transcript& t) {
  return model.classifier.predict_proba(featurize(model, t));
}

PreparedSplit prepare_split(const Dataset& data, const std::vector<DocEmbeddings>& emb, const Embedders& embedders,
                            std::span<const std::size_t> train, const FitOptions& options) {
  if (emb.size() != data.docs.size()) throw Error(ErrorCode::LengthMismatch, "one embedding entry per document");
  PreparedSplit out;
  auto& m = out.shared;
  m.embedders = embedders;
  m.head = context::MixingHead::uniform(embedders.bilm ? embedders.bilm->config.layers : 0);
  m.head.layer_norm = options.layer_norm;

  std::vector<chat::Transcript> train_docs;
  std::vector<Eigen::VectorXd> ling, demo, vecs;
  for (auto i : train) {
    train_docs.push_back(data.docs[i]);
    ling.push_back(features::raw_linguistic(data.docs[i]));
    demo.push_back(features::raw_demographic(data.docs[i]));
    if (embedders.doc2vec) vecs.push_back(emb[i].doc_vector);
    out.labels.push_back(data.labels[i]);
  }
  m.vocabulary = features::fit_count_vectorizer(train_docs, options.min_df);
  m.linguistic = features::Standardizer::fit(stack_rows(ling));
  m.demographic = features::Standardizer::fit_columns(stack_rows(demo), {true, false});

  if (embedders.doc2vec) {
    const auto x = stack_rows(vecs);
    out.doc2vec_size = static_cast<std::size_t>(x.cols());
    m.doc_vectors = options.standardize_embeddings ? features::Standardizer::fit(x) : identity(x.cols());
  }
  if (embedders.bilm) {
    const auto layers = embedders.bilm->config.layers + 1;
    const auto width = embedders.bilm->layer_width();
    out.context_size = static_cast<std::size_t>(width);
    for (int j = 0; j < layers; ++j) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), width);
      for (std::size_t r = 0; r < train.size(); ++r) x.row(static_cast<Eigen::Index>(r)) = emb[train[r]].pooled.row(j);
      m.context_layers.push_back(options.standardize_embeddings ? features::Standardizer::fit(x) : identity(width));
      out.layers.push_back(m.context_layers.back().transform(x));
    }
  }

  // The widest schema that needs no context block; smaller pipelines use a
  // column prefix of it.
  m.pipeline = embedders.doc2vec ? Pipeline::P3 : Pipeline::P2;
  m.schema = features::make_schema(m.pipeline, m.vocabulary, out.doc2vec_size, 0);
  out.base.resize(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(m.schema.dimension()));
  for (std::size_t r = 0; r < train.size(); ++r)
    out.base.row(static_cast<Eigen::Index>(r)) = featurize(m, data.docs[train[r]], emb[train[r]]).transpose();
  return out;
}

FittedPipeline fit_pipeline(const PreparedSplit& prepared, Pipeline p, const FitOptions& options) {
  FittedPipeline m = prepared.shared;
  m.pipeline = p;
  const bool needs_d2v = uses(p, BlockKind::Doc2Vec), needs_ctx = uses(p, BlockKind::ContextEmb);
  if (needs_d2v && !m.embedders.doc2vec) throw Error(ErrorCode::InvalidConfig, "pipeline needs a Doc2Vec model");
  if (needs_ctx && !m.embedders.bilm) throw Error(ErrorCode::InvalidConfig, "pipeline needs a biLM");
  if (!needs_d2v) m.embedders.doc2vec.reset();
  if (!needs_ctx) {
    m.embedders.bilm.reset();
    m.context_layers.clear();
    m.head = context::MixingHead::uniform(0);
    m.head.layer_norm = options.layer_norm;
  }
  if (!needs_d2v) m.doc_vectors = {};
  m.schema = features::make_schema(p, m.vocabulary, needs_d2v ? prepared.doc2vec_size : 0,
                                   needs_ctx ? prepared.context_size : 0);
  const auto base_cols = static_cast<Eigen::Index>(m.schema.dimension() - (needs_ctx ? prepared.context_size : 0));
  const Eigen::MatrixXd other = prepared.base.leftCols(base_cols);

  const bool tree = options.classifier == "tree";
  m.classifier.kind = tree ? Classifier::Kind::Tree : Classifier::Kind::Logistic;
  if (needs_ctx) {
    context::MixingProblem problem{other, prepared.layers, prepared.labels, options.c};
    if (tree) {
      m.classifier.tree = classifiers::tree_train(context::joint_features(problem, m.head), prepared.labels,
                                                  options.criterion, options.max_depth);
    } else {
      auto fit = context::fit_mixing_head(problem, m.head, options.joint_mixing);
      m.head = fit.head;
      m.classifier.logistic = fit.logistic;
    }
  } else if (tree) {
    m.classifier.tree = classifiers::tree_train(other, prepared.labels, options.criterion, options.max_depth);
  } else {
    m.classifier.logistic = classifiers::logreg_train(other, prepared.labels, options.c);
  }
  m.classifier.logistic.schema_hash = m.schema.hash();
  return m;
}

}  // namespace adscan::pipeline
