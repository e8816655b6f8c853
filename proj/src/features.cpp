#include "adscan/features.hpp"

#include <cmath>
#include <ostream>

#include "adscan/error.hpp"
#include "adscan/hash.hpp"

namespace adscan::features {

std::uint64_t Vocabulary::hash() const noexcept {
  Fnv1a h;
  h.update(index.hash()).update(fitted_on).update(static_cast<std::uint64_t>(min_df));
  return h.digest();
}

std::uint64_t corpus_fingerprint(std::span<const chat::Transcript> corpus) {
  Fnv1a h;
  for (const auto& t : corpus) {
    h.update(t.id).update(std::string_view("\0", 1));
    for (const auto& tok : chat::clean_text(t)) h.update(tok).update(std::string_view(" ", 1));
    h.update(std::string_view("\n", 1));
  }
  return h.digest();
}

Vocabulary fit_count_vectorizer(std::span<const chat::Transcript> train, std::size_t min_df) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(train.size());
  for (const auto& t : train) docs.push_back(chat::clean_text(t));
  Vocabulary v;
  v.index = TokenIndex::from_documents(docs, std::max<std::size_t>(1, min_df));
  v.min_df = min_df;
  v.fitted_on = corpus_fingerprint(train);
  if (v.index.empty()) throw Error(ErrorCode::EmptyCorpus, "no participant tokens to build a vocabulary from");
  return v;
}

Eigen::VectorXd bow_transform(const chat::Transcript& t, const Vocabulary& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.size()));
  for (const auto& tok : chat::clean_text(t))
    if (auto i = v.index.find(tok)) out[static_cast<Eigen::Index>(*i)] += 1.0;
  return out;
}

Eigen::VectorXd raw_linguistic(const chat::Transcript& t) {
  const double a = t.audio_length_seconds;
  if (!(a > 0) || !std::isfinite(a))
    throw Error(ErrorCode::NonPositiveAudioLength, t.id + ": audio length " + std::to_string(a));
  const auto ev = chat::event_counts(t);
  Eigen::VectorXd out(5);
  out << static_cast<double>(chat::clean_text(t).size()), static_cast<double>(chat::interviewer_utterance_count(t)),
      static_cast<double>(ev[chat::EventKind::Unintelligible]),
      static_cast<double>(ev[chat::EventKind::Pause] + ev[chat::EventKind::TrailingOff]),
      static_cast<double>(ev[chat::EventKind::Filler]);
  return out / a;
}

Eigen::VectorXd raw_demographic(const chat::Transcript& t) {
  if (!t.demographics.age || !t.demographics.gender)
    throw Error(ErrorCode::MissingDemographics, t.id + ": age or gender missing");
  Eigen::VectorXd out(2);
  out << *t.demographics.age, *t.demographics.gender == chat::Gender::Female ? 1.0 : 0.0;
  return out;
}

// ------------------------------------------------------------ standardizer

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  return fit_columns(x, std::vector<bool>(static_cast<std::size_t>(x.cols()), true));
}

Standardizer Standardizer::fit_columns(const Eigen::MatrixXd& x, const std::vector<bool>& columns) {
  if (x.rows() == 0) throw Error(ErrorCode::TooFewSamples, "cannot standardize zero rows");
  if (columns.size() != static_cast<std::size_t>(x.cols()))
    throw Error(ErrorCode::DimensionMismatch, "standardizer column mask size");
  Standardizer s;
  s.mean = Eigen::VectorXd::Zero(x.cols());
  s.scale = Eigen::VectorXd::Ones(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (!columns[static_cast<std::size_t>(c)]) continue;
    const double mu = x.col(c).mean();
    const double var = (x.col(c).array() - mu).square().mean();
    s.mean[c] = mu;
    s.scale[c] = var > 0 ? std::sqrt(var) : 0.0;
  }
  return s;
}

Eigen::VectorXd Standardizer::transform_row(const Eigen::Ref<const Eigen::VectorXd>& row) const {
  if (row.size() != mean.size()) throw Error(ErrorCode::SchemaMismatch, "standardizer width");
  Eigen::VectorXd out(row.size());
  for (Eigen::Index c = 0; c < row.size(); ++c) out[c] = scale[c] > 0 ? (row[c] - mean[c]) / scale[c] : 0.0;
  return out;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) out.row(r) = transform_row(x.row(r).transpose()).transpose();
  return out;
}

std::uint64_t Standardizer::hash() const noexcept {
  Fnv1a h;
  for (Eigen::Index i = 0; i < mean.size(); ++i) h.update(mean[i]).update(scale[i]);
  return h.digest();
}

// ------------------------------------------------------------------ schema

namespace {

constexpr std::array<std::string_view, 5> kBlockNames{"bow", "ling", "demo", "d2v", "ctx"};

}  // namespace

std::string_view to_string(BlockKind k) noexcept { return kBlockNames[static_cast<std::size_t>(k)]; }

std::optional<BlockKind> block_kind_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kBlockNames.size(); ++i)
    if (kBlockNames[i] == s) return static_cast<BlockKind>(i);
  return std::nullopt;
}

std::vector<BlockKind> pipeline_blocks(Pipeline p) {
  std::vector<BlockKind> b{BlockKind::Bow};
  if (p >= Pipeline::P2) b.insert(b.end(), {BlockKind::Linguistic, BlockKind::Demographic});
  if (p >= Pipeline::P3) b.push_back(BlockKind::Doc2Vec);
  if (p >= Pipeline::P4) b.push_back(BlockKind::ContextEmb);
  return b;
}

std::optional<Pipeline> pipeline_from_int(int id) noexcept {
  if (id < 1 || id > 4) return std::nullopt;
  return static_cast<Pipeline>(id);
}

FeatureSchema::FeatureSchema(std::vector<BlockKind> kinds, std::vector<std::vector<std::string>> columns) {
  if (kinds.size() != columns.size()) throw Error(ErrorCode::SchemaMismatch, "one column list per block");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    blocks_.push_back({kinds[i], offset, columns[i].size()});
    offset += columns[i].size();
    for (auto& c : columns[i]) names_.push_back(std::move(c));
  }
}

std::uint64_t FeatureSchema::hash() const noexcept {
  Fnv1a h;
  for (const auto& b : blocks_) h.update(to_string(b.kind)).update(static_cast<std::uint64_t>(b.size));
  for (const auto& n : names_) h.update(n).update(std::string_view("\0", 1));
  return h.digest();
}

const BlockSpec* FeatureSchema::find(BlockKind k) const noexcept {
  for (const auto& b : blocks_)
    if (b.kind == k) return &b;
  return nullptr;
}

FeatureSchema make_schema(Pipeline p, const Vocabulary& vocab, std::size_t doc2vec_size, std::size_t context_size) {
  std::vector<BlockKind> kinds = pipeline_blocks(p);
  std::vector<std::vector<std::string>> cols;
  auto numbered = [](std::string_view prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(prefix) + ":" + std::to_string(i));
    return out;
  };
  for (auto k : kinds) {
    switch (k) {
      case BlockKind::Bow: {
        std::vector<std::string> c;
        for (const auto& t : vocab.index.tokens()) c.push_back("bow:" + t);
        cols.push_back(std::move(c));
        break;
      }
      case BlockKind::Linguistic: {
        std::vector<std::string> c;
        for (auto n : kLinguisticNames) c.push_back("ling:" + std::string(n));
        cols.push_back(std::move(c));
        break;
      }
      case BlockKind::Demographic:
        cols.push_back({"demo:age", "demo:gender"});
        break;
      case BlockKind::Doc2Vec:
        cols.push_back(numbered("d2v", doc2vec_size));
        break;
      case BlockKind::ContextEmb:
        cols.push_back(numbered("ctx", context_size));
        break;
    }
  }
  return FeatureSchema(std::move(kinds), std::move(cols));
}

Eigen::VectorXd assemble(const FeatureSchema& schema, const std::vector<Block>& blocks) {
  const auto& spec = schema.blocks();
  if (blocks.size() != spec.size())
    throw Error(ErrorCode::SchemaMismatch, std::to_string(blocks.size()) + " blocks given, schema has " +
                                               std::to_string(spec.size()));
  Eigen::VectorXd out(static_cast<Eigen::Index>(schema.dimension()));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (blocks[i].kind != spec[i].kind)
      throw Error(ErrorCode::SchemaMismatch, "block " + std::to_string(i) + " is " +
                                                 std::string(to_string(blocks[i].kind)) + ", schema expects " +
                                                 std::string(to_string(spec[i].kind)));
    if (static_cast<std::size_t>(blocks[i].values.size()) != spec[i].size)
      throw Error(ErrorCode::SchemaMismatch, std::string(to_string(spec[i].kind)) + " block has size " +
                                                 std::to_string(blocks[i].values.size()) + ", schema expects " +
                                                 std::to_string(spec[i].size));
    out.segment(static_cast<Eigen::Index>(spec[i].offset), static_cast<Eigen::Index>(spec[i].size)) =
        blocks[i].values;
  }
  if (!out.allFinite()) throw Error(ErrorCode::NonFiniteFeatures, "assembled vector has NaN or Inf");
  return out;
}

// ------------------------------------------------------------------ export

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const FeatureSchema& schema, const Eigen::MatrixXd& x,
               const std::vector<std::string>& ids, const std::vector<std::optional<int>>& labels) {
  if (static_cast<std::size_t>(x.cols()) != schema.dimension())
    throw Error(ErrorCode::SchemaMismatch, "matrix width does not match schema");
  if (ids.size() != static_cast<std::size_t>(x.rows()) || labels.size() != ids.size())
    throw Error(ErrorCode::LengthMismatch, "ids/labels vs rows");
  out << "id,label";
  for (const auto& n : schema.column_names()) out << ',' << csv_field(n);
  out << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    out << csv_field(ids[i]) << ',';
    if (labels[i]) out << *labels[i];
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", x(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : schema.blocks()) {
    std::vector<std::string> cols(schema.column_names().begin() + static_cast<std::ptrdiff_t>(b.offset),
                                  schema.column_names().begin() + static_cast<std::ptrdiff_t>(b.offset + b.size));
    blocks.push_back({{"kind", to_string(b.kind)}, {"offset", b.offset}, {"size", b.size}, {"columns", cols}});
  }
  return {{"format_version", kSchemaFormatVersion},
          {"dimension", schema.dimension()},
          {"hash", hex64(schema.hash())},
          {"blocks", blocks}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kSchemaFormatVersion)
      throw Error(ErrorCode::SchemaMismatch, "unsupported schema format_version");
    std::vector<BlockKind> kinds;
    std::vector<std::vector<std::string>> cols;
    for (const auto& b : j.at("blocks")) {
      auto k = block_kind_from_string(b.at("kind").get<std::string>());
      if (!k) throw Error(ErrorCode::SchemaMismatch, "unknown block kind");
      kinds.push_back(*k);
      cols.push_back(b.at("columns").get<std::vector<std::string>>());
    }
    FeatureSchema s(std::move(kinds), std::move(cols));
    if (j.contains("hash") && j.at("hash").get<std::string>() != hex64(s.hash()))
      throw Error(ErrorCode::SchemaMismatch, "schema hash does not match its columns");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed schema: ") + e.what());
  }
}

}  // namespace adscan::features
