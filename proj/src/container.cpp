#include <cmath>

#include "adscan/error.hpp"
#include "adscan/hash.hpp"
#include "adscan/pipeline.hpp"

namespace adscan::pipeline {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw Error(ErrorCode::SchemaMismatch, "matrix size does not match its data");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json standardizer_json(const features::Standardizer& s) {
  return {{"mean", vector_json(s.mean)}, {"scale", vector_json(s.scale)}};
}

features::Standardizer standardizer_from(const json& j) {
  features::Standardizer s{vector_from(j.at("mean")), vector_from(j.at("scale"))};
  if (s.mean.size() != s.scale.size()) throw Error(ErrorCode::SchemaMismatch, "standardizer sizes differ");
  return s;
}

json lstm_json(const std::vector<context::LstmLayer>& layers) {
  json out = json::array();
  for (const auto& l : layers) out.push_back({{"w", matrix_json(l.w)}, {"u", matrix_json(l.u)}, {"b", matrix_json(l.b)}});
  return out;
}

std::vector<context::LstmLayer> lstm_from(const json& j) {
  std::vector<context::LstmLayer> out;
  for (const auto& l : j) out.push_back({matrix_from(l.at("w")), matrix_from(l.at("u")), matrix_from(l.at("b"))});
  return out;
}

json doc2vec_json(const doc2vec::Doc2VecModel& m) {
  const auto& c = m.config;
  return {{"config",
           {{"vec_size", c.vec_size},
            {"alpha", c.alpha},
            {"min_alpha", c.min_alpha},
            {"window", c.window},
            {"epochs", c.epochs},
            {"infer_epochs", c.infer_epochs},
            {"seed", c.seed},
            {"negative_sampling", c.negative_sampling},
            {"negatives", c.negatives}}},
          {"vocabulary", m.vocabulary.tokens()},
          {"vocabulary_hash", hex64(m.vocabulary.hash())},
          {"word_vectors", matrix_json(m.word_vectors)}};
}

doc2vec::Doc2VecModel doc2vec_from(const json& j) {
  doc2vec::Doc2VecModel m;
  const auto& c = j.at("config");
  m.config.vec_size = c.at("vec_size").get<int>();
  m.config.alpha = c.at("alpha").get<double>();
  m.config.min_alpha = c.at("min_alpha").get<double>();
  m.config.window = c.at("window").get<int>();
  m.config.epochs = c.at("epochs").get<int>();
  m.config.infer_epochs = c.at("infer_epochs").get<int>();
  m.config.seed = c.at("seed").get<std::uint64_t>();
  m.config.negative_sampling = c.at("negative_sampling").get<bool>();
  m.config.negatives = c.at("negatives").get<int>();
  m.config.track_loss = false;
  m.vocabulary = TokenIndex(j.at("vocabulary").get<std::vector<std::string>>());
  if (hex64(m.vocabulary.hash()) != j.at("vocabulary_hash").get<std::string>())
    throw Error(ErrorCode::SchemaMismatch, "Doc2Vec vocabulary hash mismatch");
  m.word_vectors = matrix_from(j.at("word_vectors"));
  if (m.word_vectors.rows() != static_cast<Eigen::Index>(m.vocabulary.size()) ||
      m.word_vectors.cols() != m.config.vec_size)
    throw Error(ErrorCode::SchemaMismatch, "Doc2Vec word vectors do not match the vocabulary");
  m.doc_vectors = Eigen::MatrixXd(0, m.config.vec_size);
  return m;
}

json bilm_json(const context::BiLMModel& m) {
  const auto& c = m.config;
  return {{"config",
           {{"layers", c.layers},
            {"hidden", c.hidden},
            {"embedding", c.embedding},
            {"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"clip_norm", c.clip_norm},
            {"min_count", c.min_count},
            {"seed", c.seed}}},
          {"vocabulary", m.vocabulary.tokens()},
          {"vocabulary_hash", hex64(m.vocabulary.hash())},
          {"embedding", matrix_json(m.embedding)},
          {"forward", lstm_json(m.forward)},
          {"backward", lstm_json(m.backward)},
          {"forward_out", matrix_json(m.forward_out)},
          {"forward_bias", matrix_json(m.forward_bias)},
          {"backward_out", matrix_json(m.backward_out)},
          {"backward_bias", matrix_json(m.backward_bias)}};
}

context::BiLMModel bilm_from(const json& j) {
  context::BiLMModel m;
  const auto& c = j.at("config");
  m.config.layers = c.at("layers").get<int>();
  m.config.hidden = c.at("hidden").get<int>();
  m.config.embedding = c.at("embedding").get<int>();
  m.config.epochs = c.at("epochs").get<int>();
  m.config.learning_rate = c.at("learning_rate").get<double>();
  m.config.batch_size = c.at("batch_size").get<int>();
  m.config.clip_norm = c.at("clip_norm").get<double>();
  m.config.min_count = c.at("min_count").get<std::size_t>();
  m.config.seed = c.at("seed").get<std::uint64_t>();
  m.vocabulary = TokenIndex(j.at("vocabulary").get<std::vector<std::string>>());
  if (hex64(m.vocabulary.hash()) != j.at("vocabulary_hash").get<std::string>())
    throw Error(ErrorCode::SchemaMismatch, "biLM vocabulary hash mismatch");
  m.embedding = matrix_from(j.at("embedding"));
  m.forward = lstm_from(j.at("forward"));
  m.backward = lstm_from(j.at("backward"));
  m.forward_out = matrix_from(j.at("forward_out"));
  m.forward_bias = matrix_from(j.at("forward_bias"));
  m.backward_out = matrix_from(j.at("backward_out"));
  m.backward_bias = matrix_from(j.at("backward_bias"));

  const auto v = static_cast<Eigen::Index>(m.vocabulary.size() + 3);
  const Eigen::Index h = m.config.hidden;
  bool ok = m.embedding.rows() == v && m.embedding.cols() == m.config.embedding &&
            m.forward.size() == static_cast<std::size_t>(m.config.layers) && m.backward.size() == m.forward.size() &&
            m.forward_out.rows() == v && m.forward_out.cols() == h && m.backward_out.rows() == v &&
            m.backward_out.cols() == h && m.forward_bias.rows() == v && m.backward_bias.rows() == v;
  for (const auto* stack : {&m.forward, &m.backward})
    for (std::size_t l = 0; ok && l < stack->size(); ++l) {
      const auto& layer = (*stack)[l];
      const auto in = l == 0 ? m.config.embedding : h;
      ok = layer.w.rows() == 4 * h && layer.w.cols() == in && layer.u.rows() == 4 * h && layer.u.cols() == h &&
           layer.b.rows() == 4 * h && layer.b.cols() == 1;
    }
  if (!ok) throw Error(ErrorCode::SchemaMismatch, "biLM matrices have inconsistent shapes");
  return m;
}

json classifier_json(const Classifier& c) {
  if (c.kind == Classifier::Kind::Logistic)
    return {{"type", "logistic"},
            {"weights", vector_json(c.logistic.weights)},
            {"bias", c.logistic.bias},
            {"c", c.logistic.c},
            {"schema_hash", hex64(c.logistic.schema_hash)}};
  json nodes = json::array();
  for (const auto& n : c.tree.nodes)
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"p1", n.p1},
                     {"samples", n.samples}});
  return {{"type", "tree"},
          {"criterion", c.tree.criterion == classifiers::Criterion::Gini ? "gini" : "entropy"},
          {"max_depth", c.tree.max_depth ? json(*c.tree.max_depth) : json(nullptr)},
          {"n_features", c.tree.n_features},
          {"nodes", nodes}};
}

Classifier classifier_from(const json& j, const features::FeatureSchema& schema) {
  Classifier c;
  const auto type = j.at("type").get<std::string>();
  if (type == "logistic") {
    c.kind = Classifier::Kind::Logistic;
    c.logistic.weights = vector_from(j.at("weights"));
    c.logistic.bias = j.at("bias").get<double>();
    c.logistic.c = j.at("c").get<double>();
    if (j.at("schema_hash").get<std::string>() != hex64(schema.hash()))
      throw Error(ErrorCode::SchemaMismatch, "classifier was trained on a different schema");
    c.logistic.schema_hash = schema.hash();
    if (static_cast<std::size_t>(c.logistic.weights.size()) != schema.dimension())
      throw Error(ErrorCode::SchemaMismatch, "classifier weight count differs from the schema");
  } else if (type == "tree") {
    c.kind = Classifier::Kind::Tree;
    c.tree.criterion = j.at("criterion") == "gini" ? classifiers::Criterion::Gini : classifiers::Criterion::Entropy;
    if (!j.at("max_depth").is_null()) c.tree.max_depth = j.at("max_depth").get<int>();
    c.tree.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& n : j.at("nodes")) {
      classifiers::TreeNode node;
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      node.p1 = n.at("p1").get<double>();
      node.samples = n.at("samples").get<std::size_t>();
      c.tree.nodes.push_back(node);
    }
    const auto count = static_cast<int>(c.tree.nodes.size());
    for (const auto& n : c.tree.nodes)
      if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count ||
                           n.feature >= static_cast<int>(schema.dimension())))
        throw Error(ErrorCode::SchemaMismatch, "tree node references are out of range");
    if (c.tree.n_features != schema.dimension() || c.tree.nodes.empty())
      throw Error(ErrorCode::SchemaMismatch, "tree does not match the schema");
  } else {
    throw Error(ErrorCode::SchemaMismatch, "unknown classifier type '" + type + "'");
  }
  return c;
}

std::uint64_t content_hash(json j) {
  j.erase("container_hash");
  return fnv1a(j.dump());
}

}  // namespace

json model_to_json(const FittedPipeline& m, std::uint64_t config_hash) {
  json ctx = json::array();
  for (const auto& s : m.context_layers) ctx.push_back(standardizer_json(s));
  json j{{"format_version", kContainerFormatVersion},
         {"kind", "adscan-model"},
         {"config_hash", hex64(config_hash)},
         {"pipeline", static_cast<int>(m.pipeline)},
         {"schema", features::schema_to_json(m.schema)},
         {"vocabulary",
          {{"tokens", m.vocabulary.index.tokens()},
           {"min_df", m.vocabulary.min_df},
           {"fitted_on", hex64(m.vocabulary.fitted_on)}}},
         {"standardizers",
          {{"linguistic", standardizer_json(m.linguistic)},
           {"demographic", standardizer_json(m.demographic)},
           {"doc_vectors", standardizer_json(m.doc_vectors)},
           {"context_layers", ctx}}},
         {"mixing", {{"logits", vector_json(m.head.logits)}, {"gamma", m.head.gamma}, {"layer_norm", m.head.layer_norm}}},
         {"classifier", classifier_json(m.classifier)},
         {"doc2vec", m.embedders.doc2vec ? doc2vec_json(*m.embedders.doc2vec) : json(nullptr)},
         {"bilm", m.embedders.bilm ? bilm_json(*m.embedders.bilm) : json(nullptr)},
         {"hashes",
          {{"schema", hex64(m.schema.hash())},
           {"vocabulary", hex64(m.vocabulary.hash())},
           {"doc2vec_vocabulary", m.embedders.doc2vec ? json(hex64(m.embedders.doc2vec->vocabulary.hash())) : json(nullptr)},
           {"bilm_vocabulary", m.embedders.bilm ? json(hex64(m.embedders.bilm->vocabulary.hash())) : json(nullptr)}}}};
  j["container_hash"] = hex64(content_hash(j));
  return j;
}

std::string container_version(const json& j) { return j.at("container_hash").get<std::string>(); }

FittedPipeline model_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("kind", "") != "adscan-model")
      throw Error(ErrorCode::SchemaMismatch, "not a model container");
    if (j.at("format_version").get<int>() != kContainerFormatVersion)
      throw Error(ErrorCode::SchemaMismatch, "unsupported container version " + j.at("format_version").dump());
    if (hex64(content_hash(j)) != j.at("container_hash").get<std::string>())
      throw Error(ErrorCode::SchemaMismatch, "container hash mismatch");

    FittedPipeline m;
    const auto p = features::pipeline_from_int(j.at("pipeline").get<int>());
    if (!p) throw Error(ErrorCode::SchemaMismatch, "unknown pipeline id");
    m.pipeline = *p;

    const auto& vocab = j.at("vocabulary");
    m.vocabulary.index = TokenIndex(vocab.at("tokens").get<std::vector<std::string>>());
    m.vocabulary.min_df = vocab.at("min_df").get<std::size_t>();
    m.vocabulary.fitted_on = std::stoull(vocab.at("fitted_on").get<std::string>(), nullptr, 16);
    const auto& hashes = j.at("hashes");
    if (hex64(m.vocabulary.hash()) != hashes.at("vocabulary").get<std::string>())
      throw Error(ErrorCode::SchemaMismatch, "vocabulary hash mismatch");

    const auto& st = j.at("standardizers");
    m.linguistic = standardizer_from(st.at("linguistic"));
    m.demographic = standardizer_from(st.at("demographic"));
    m.doc_vectors = standardizer_from(st.at("doc_vectors"));
    for (const auto& s : st.at("context_layers")) m.context_layers.push_back(standardizer_from(s));

    const auto& mix = j.at("mixing");
    m.head.logits = vector_from(mix.at("logits"));
    m.head.gamma = mix.at("gamma").get<double>();
    m.head.layer_norm = mix.at("layer_norm").get<bool>();

    if (!j.at("doc2vec").is_null()) {
      auto d = doc2vec_from(j.at("doc2vec"));
      if (hex64(d.vocabulary.hash()) != hashes.at("doc2vec_vocabulary").get<std::string>())
        throw Error(ErrorCode::SchemaMismatch, "Doc2Vec vocabulary hash mismatch");
      m.embedders.doc2vec = std::make_shared<const doc2vec::Doc2VecModel>(std::move(d));
    }
    if (!j.at("bilm").is_null()) {
      auto b = bilm_from(j.at("bilm"));
      if (hex64(b.vocabulary.hash()) != hashes.at("bilm_vocabulary").get<std::string>())
        throw Error(ErrorCode::SchemaMismatch, "biLM vocabulary hash mismatch");
      m.embedders.bilm = std::make_shared<const context::BiLMModel>(std::move(b));
    }

    const std::size_t d2v = m.embedders.doc2vec ? static_cast<std::size_t>(m.embedders.doc2vec->config.vec_size) : 0;
    const std::size_t ctx = m.embedders.bilm ? static_cast<std::size_t>(m.embedders.bilm->layer_width()) : 0;
    m.schema = features::schema_from_json(j.at("schema"));
    if (!(m.schema == features::make_schema(m.pipeline, m.vocabulary, d2v, ctx)) ||
        hex64(m.schema.hash()) != hashes.at("schema").get<std::string>())
      throw Error(ErrorCode::SchemaMismatch, "schema does not match the container's components");
    if (m.linguistic.mean.size() != 5 || m.demographic.mean.size() != 2)
      throw Error(ErrorCode::SchemaMismatch, "standardizer sizes");
    if (d2v && m.doc_vectors.mean.size() != static_cast<Eigen::Index>(d2v))
      throw Error(ErrorCode::SchemaMismatch, "Doc2Vec standardizer size");
    if (ctx) {
      const auto layers = static_cast<std::size_t>(m.embedders.bilm->config.layers + 1);
      if (m.context_layers.size() != layers || m.head.logits.size() != static_cast<Eigen::Index>(layers))
        throw Error(ErrorCode::SchemaMismatch, "mixing head does not match the biLM");
      for (const auto& s : m.context_layers)
        if (s.mean.size() != static_cast<Eigen::Index>(ctx)) throw Error(ErrorCode::SchemaMismatch, "context standardizer size");
    }
    m.classifier = classifier_from(j.at("classifier"), m.schema);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed container: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::SchemaMismatch, "malformed container hash field");
  }
}

}  // namespace adscan::pipeline
