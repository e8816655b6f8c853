#pragma once

// Per-document feature blocks and their assembly into pipeline vectors.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adscan/chat.hpp"
#include "adscan/token_index.hpp"

namespace adscan::features {

// -------------------------------------------------------------- vocabulary

/// Bag-of-words columns: cleaned participant tokens in lexicographic order.
struct Vocabulary {
  TokenIndex index;
  std::uint64_t fitted_on = 0;  // fingerprint of the training transcripts
  std::size_t min_df = 1;

  std::size_t size() const noexcept { return index.size(); }
  std::uint64_t hash() const noexcept;
};

/// Fingerprint of a set of transcripts (ids and cleaned participant text).
std::uint64_t corpus_fingerprint(std::span<const chat::Transcript> corpus);

/// Throws Error{EmptyCorpus} when no participant token survives.
Vocabulary fit_count_vectorizer(std::span<const chat::Transcript> train, std::size_t min_df = 1);

/// Raw counts of each vocabulary token among the participant tokens.
Eigen::VectorXd bow_transform(const chat::Transcript& t, const Vocabulary& v);

// ------------------------------------------------------------- linguistic

inline constexpr std::array<std::string_view, 5> kLinguisticNames{
    "word_rate", "intervention_rate", "unintelligible_rate", "trailing_pause_rate", "filler_rate"};

/// Counts per second of audio, before standardization:
/// participant words, interviewer turns, unintelligible markers,
/// pauses plus trailing-off markers, fillers.
/// Throws Error{NonPositiveAudioLength}.
Eigen::VectorXd raw_linguistic(const chat::Transcript& t);

/// [age, gender] with male = 0, female = 1. Throws Error{MissingDemographics}.
Eigen::VectorXd raw_demographic(const chat::Transcript& t);

/// Column-wise z-score with population statistics. A column that is constant
/// on the fitting data maps to 0.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population standard deviation, 0 for constant columns

  static Standardizer fit(const Eigen::MatrixXd& x);
  /// Leaves the columns outside `columns` untouched when set.
  static Standardizer fit_columns(const Eigen::MatrixXd& x, const std::vector<bool>& columns);
  Eigen::VectorXd transform_row(const Eigen::Ref<const Eigen::VectorXd>& row) const;
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  std::uint64_t hash() const noexcept;
};

// ------------------------------------------------------------------ schema

enum class BlockKind { Bow, Linguistic, Demographic, Doc2Vec, ContextEmb };
std::string_view to_string(BlockKind k) noexcept;
std::optional<BlockKind> block_kind_from_string(std::string_view s) noexcept;

enum class Pipeline { P1 = 1, P2 = 2, P3 = 3, P4 = 4 };
/// Blocks used by a pipeline, in schema order.
std::vector<BlockKind> pipeline_blocks(Pipeline p);
std::optional<Pipeline> pipeline_from_int(int id) noexcept;

struct BlockSpec {
  BlockKind kind;
  std::size_t offset = 0;
  std::size_t size = 0;
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// One entry per block; `columns` holds the column names of each block.
  FeatureSchema(std::vector<BlockKind> kinds, std::vector<std::vector<std::string>> columns);

  const std::vector<BlockSpec>& blocks() const noexcept { return blocks_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  std::size_t dimension() const noexcept { return names_.size(); }
  std::uint64_t hash() const noexcept;
  const BlockSpec* find(BlockKind k) const noexcept;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<BlockSpec> blocks_;
  std::vector<std::string> names_;
};

/// Column names: "bow:<token>", "ling:<name>", "demo:age", "demo:gender",
/// "d2v:<i>", "ctx:<i>".
FeatureSchema make_schema(Pipeline p, const Vocabulary& vocab, std::size_t doc2vec_size, std::size_t context_size);

struct Block {
  BlockKind kind;
  Eigen::VectorXd values;
};

/// Concatenates blocks in schema order. Throws Error{SchemaMismatch} when the
/// kinds, order or sizes differ from the schema, or Error{NonFiniteFeatures}.
Eigen::VectorXd assemble(const FeatureSchema& schema, const std::vector<Block>& blocks);

// ------------------------------------------------------------------ export

/// Header "id,label,<schema columns>". Labels are 0/1 or empty when unknown.
void write_csv(std::ostream& out, const FeatureSchema& schema, const Eigen::MatrixXd& x,
               const std::vector<std::string>& ids, const std::vector<std::optional<int>>& labels);

inline constexpr int kSchemaFormatVersion = 1;
nlohmann::json schema_to_json(const FeatureSchema& schema);
/// Throws Error{SchemaMismatch} on an unknown version or inconsistent blocks.
FeatureSchema schema_from_json(const nlohmann::json& j);

}  // namespace adscan::features
