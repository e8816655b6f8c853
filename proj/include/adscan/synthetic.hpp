#pragma once

// Seeded generator of picture-description transcripts with plantable class
// signals: lexical choice, disfluency rates, word order and a sparse set of
// class-typical comment words.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "adscan/chat.hpp"

namespace adscan::synthetic {

struct SyntheticCorpusSpec {
  std::size_t control_docs = 100;
  std::size_t dementia_docs = 200;
  std::uint64_t seed = 1;
  /// Both classes drawn from the control generator; labels carry no signal.
  bool null_signal = false;

  /// Probability of the precise wording in a slot is 0.5 + lexical_skew / 2
  /// for control profiles and 0.5 - lexical_skew / 2 for dementia profiles.
  double lexical_skew = 0.4;
  /// Share of control documents whose lexical profile is the dementia one.
  double mimic_rate = 0.1;
  /// Dementia disfluency rates are control rates times (1 + 2 * event_skew).
  double event_skew = 0.3;
  /// Probability that a clause is scrambled: base for control, base + skew
  /// for dementia.
  double scramble_base = 0.05;
  double scramble_skew = 0.35;
  /// Comment words per document from the class's pool, and the chance that
  /// each comes from the other pool instead.
  std::size_t comment_words = 4;
  double comment_leak = 0.25;

  std::size_t min_utterances = 8;
  std::size_t max_utterances = 14;

  /// Throws Error{InvalidConfig}.
  void validate() const;
  nlohmann::json to_json() const;
};

struct SyntheticDocument {
  std::string id;
  std::string chat_text;
  chat::SidecarRecord metadata;
  bool mimic = false;
};

/// Control documents first, then dementia documents; ids "syn0001"... .
std::vector<SyntheticDocument> generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

/// Unlabeled documents from the same generator under a derived seed, in the
/// corpus's class proportions; ids "bg0001"... . Used to fit the embedders.
std::vector<SyntheticDocument> generate_background(const SyntheticCorpusSpec& spec, std::size_t docs);

/// Writes <dir>/<id>.cha for every document and <dir>/metadata.json.
void write_corpus(const std::filesystem::path& dir, const std::vector<SyntheticDocument>& docs,
                  const nlohmann::json& provenance);

/// Parsed transcripts with metadata applied.
std::vector<chat::Transcript> to_transcripts(const std::vector<SyntheticDocument>& docs);

}  // namespace adscan::synthetic
