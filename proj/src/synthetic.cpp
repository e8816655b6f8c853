#include "adscan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "adscan/chat_json.hpp"
#include "adscan/error.hpp"

namespace adscan::synthetic {

namespace {

// "{precise|vague}" slots; '_' joins words inside an alternative.
constexpr const char* kClauses[] = {
    "the {boy|kid} is {stealing|taking} {cookies|something} from the {jar|thing}",
    "the {stool|chair} is {tipping|falling} over",
    "the {woman|lady} is {drying|doing} the {dishes|things}",
    "the {water|stuff} is {overflowing|running} out of the {sink|thing}",
    "the {girl|kid} is {reaching|asking} for a cookie",
    "the {mother|lady} is {daydreaming|standing} by the {window|thing}",
    "the {curtains|things} are {blowing|hanging} in the {breeze|window}",
    "the {boy|kid} is {balancing|up} on the {stool|chair}",
    "the {cupboard|door} is {open|there}",
    "the {girl|kid} is {laughing|looking} at the {boy|kid}",
    "there is a {plate|thing} and two {cups|things} on the {counter|side}",
    "the {faucet|water} is {left|still} on",
    "the {boy|kid} is {handing|giving} a cookie to his {sister|girl}",
    "the {woman|lady} does not {notice|see} the {water|stuff}",
    "outside the {window|thing} there is a {garden|yard}",
    "the {lid|top} of the {jar|thing} is {off|open}",
};

constexpr const char* kControlComments[] = {"busy", "sunny", "quiet", "tidy", "bright", "calm", "clean",
                                            "pleasant", "cheerful", "ordinary", "lovely", "careful",
                                            "peaceful", "neat", "warm", "homely", "friendly", "gentle",
                                            "sensible", "orderly", "lively", "playful", "cosy", "normal",
                                            "typical", "simple", "happy", "relaxed", "proper", "organized",
                                            "sweet", "nice", "fresh", "airy", "spacious", "comfortable",
                                            "familiar", "helpful", "patient", "polite"};
constexpr const char* kDementiaComments[] = {"confusing", "strange", "odd", "funny", "weird", "hard", "messy",
                                             "wrong", "unclear", "puzzling", "silly", "foggy", "muddled",
                                             "awkward", "blurry", "dim", "fuzzy", "tricky", "backwards",
                                             "crooked", "jumbled", "scrambled", "hazy", "lost", "tangled",
                                             "upside", "sideways", "broken", "missing", "empty", "dark",
                                             "loud", "scary", "busted", "cloudy", "smeared", "crowded",
                                             "shaky", "dizzy", "tired"};
constexpr const char* kCommentFrames[] = {"it is", "it looks", "that is", "it seems"};
constexpr const char* kPrompts[] = {"mhm .", "what else do you see ?", "anything else ?", "okay .",
                                    "tell me more about the picture ."};

struct Slot {
  std::vector<std::string> precise, vague;  // empty vague: fixed words
};

std::vector<std::string> split_words(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<Slot> parse_clause(const std::string& text) {
  std::vector<Slot> slots;
  for (const auto& piece : split_words(text, ' ')) {
    if (piece.front() == '{') {
      const auto bar = piece.find('|');
      slots.push_back({split_words(piece.substr(1, bar - 1), '_'),
                       split_words(piece.substr(bar + 1, piece.size() - bar - 2), '_')});
    } else {
      slots.push_back({{piece}, {}});
    }
  }
  return slots;
}

struct Profile {
  double precise;           // probability of the precise wording
  double scramble;          // probability a clause is scrambled
  double event_scale;       // multiplier on disfluency rates
  bool dementia_comments;   // which comment pool dominates
  double speech_rate_mean;  // words per second
  double age_mean;
};

struct Generator {
  const SyntheticCorpusSpec& spec;
  const char* prefix = "syn";
  bool unlabeled = false;
  std::mt19937_64 rng;
  std::vector<std::vector<Slot>> clauses;

  explicit Generator(const SyntheticCorpusSpec& s) : spec(s), rng(s.seed) {
    for (const char* c : kClauses) clauses.push_back(parse_clause(c));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
  bool chance(double p) { return uniform() < p; }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  std::vector<std::string> clause_words(const Profile& lex) {
    std::vector<std::string> words;
    for (const auto& slot : clauses[pick(clauses.size())]) {
      const auto& chosen = slot.vague.empty() || chance(lex.precise) ? slot.precise : slot.vague;
      words.insert(words.end(), chosen.begin(), chosen.end());
    }
    return words;
  }

  // Renders one participant tier with disfluency markers; returns the body
  // and the number of pauses and fillers, which lengthen the recording.
  std::string participant_tier(std::vector<std::string> words, const Profile& p, int& pauses, int& fillers) {
    const double s = p.event_scale;
    if (chance(p.scramble)) std::shuffle(words.begin(), words.end(), rng);
    std::vector<std::string> out;
    if (chance(0.10 * s)) {
      out.push_back(chance(0.5) ? "&uh" : "&um");
      ++fillers;
    }
    const bool retrace = words.size() > 3 && chance(0.05 * s);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i == 0 && retrace) out.push_back("<" + words[0] + " " + words[1] + "> [/]");
      if (i > 0 && chance(0.025 * s)) {
        out.push_back("(.)");
        ++pauses;
      }
      if (i > 0 && chance(0.01 * s)) {
        out.push_back(chance(0.5) ? "&uh" : "&um");
        ++fillers;
      }
      out.push_back(words[i]);
    }
    if (chance(0.03 * s)) out.push_back("xxx");
    const bool trailing = chance(0.03 * s);
    std::string body;
    for (const auto& w : out) body += (body.empty() ? "" : " ") + w;
    return body + (trailing ? " +..." : " .");
  }

  SyntheticDocument document(std::size_t index, bool dementia) {
    const bool signal = !spec.null_signal;
    const bool d = signal && dementia;
    const bool mimic = signal && !dementia && chance(spec.mimic_rate);
    const bool lex_dementia = mimic ? !d : d;

    Profile p{};
    p.precise = 0.5 + (lex_dementia ? -0.5 : 0.5) * spec.lexical_skew;
    p.scramble = spec.scramble_base + (d ? spec.scramble_skew : 0.0);
    p.event_scale = d ? 1.0 + 2.0 * spec.event_skew : 1.0;
    p.dementia_comments = d;
    p.speech_rate_mean = d ? 2.3 - 0.4 * spec.event_skew : 2.3;
    p.age_mean = d ? 71.0 : 65.0;

    SyntheticDocument doc;
    char id[32];
    std::snprintf(id, sizeof id, "%s%04zu", prefix, index + 1);
    doc.id = id;
    doc.mimic = mimic;

    const double age = std::round(std::normal_distribution<double>(p.age_mean, 7.0)(rng));
    const auto gender = chance(0.6) ? chat::Gender::Female : chat::Gender::Male;

    std::ostringstream text;
    text << "@UTF8\n@Begin\n@Languages:\teng\n@Participants:\tPAR Participant, INV Investigator\n";
    text << "@ID:\teng|Synthetic|PAR|" << static_cast<int>(age) << ";|" << chat::to_string(gender) << "|"
         << (unlabeled ? "" : dementia ? "ProbableAD" : "Control") << "||Participant|||\n";
    text << "@ID:\teng|Synthetic|INV|||||Investigator|||\n";
    text << "*INV:\ttell me everything you see going on in that picture .\n";

    const std::size_t n_utt =
        spec.min_utterances + pick(spec.max_utterances - spec.min_utterances + 1);
    std::vector<std::vector<std::string>> clauses_out;
    for (std::size_t u = 0; u < n_utt; ++u) clauses_out.push_back(clause_words(p));
    for (std::size_t k = 0; k < spec.comment_words; ++k) {
      const bool from_dementia = chance(spec.comment_leak) ? !p.dementia_comments : p.dementia_comments;
      std::vector<std::string> words = split_words(kCommentFrames[pick(std::size(kCommentFrames))], ' ');
      words.push_back(from_dementia ? kDementiaComments[pick(std::size(kDementiaComments))]
                                    : kControlComments[pick(std::size(kControlComments))]);
      clauses_out.insert(clauses_out.begin() + static_cast<std::ptrdiff_t>(pick(clauses_out.size() + 1)),
                         std::move(words));
    }

    int pauses = 0, fillers = 0;
    std::size_t word_count = 0;
    for (auto& words : clauses_out) {
      word_count += words.size();
      text << "*PAR:\t" << participant_tier(std::move(words), p, pauses, fillers) << "\n";
      if (chance(0.08 * p.event_scale)) text << "*INV:\t" << kPrompts[pick(std::size(kPrompts))] << "\n";
    }
    text << "@End\n";

    const double rate = std::max(0.8, std::normal_distribution<double>(p.speech_rate_mean, 0.25)(rng));
    double audio = static_cast<double>(word_count) / rate + 1.2 * pauses + 0.5 * fillers +
                   std::abs(std::normal_distribution<double>(0.0, 2.0)(rng));
    audio = std::round(audio * 10.0) / 10.0;

    doc.chat_text = text.str();
    doc.metadata.id = doc.id;
    doc.metadata.age = age;
    doc.metadata.gender = gender;
    doc.metadata.audio_length_seconds = audio;
    doc.metadata.label = unlabeled ? chat::Label::Unknown : dementia ? chat::Label::Dementia : chat::Label::Control;
    return doc;
  }
};

}  // namespace

void SyntheticCorpusSpec::validate() const {
  auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (control_docs + dementia_docs == 0) throw Error(ErrorCode::InvalidConfig, "synthetic corpus needs documents");
  if (!prob(lexical_skew) || !prob(mimic_rate) || !prob(comment_leak) || !prob(scramble_base) ||
      !prob(scramble_base + scramble_skew) || event_skew < 0.0 || event_skew > 2.0)
    throw Error(ErrorCode::InvalidConfig, "synthetic skew parameters out of range");
  if (min_utterances < 1 || max_utterances < min_utterances)
    throw Error(ErrorCode::InvalidConfig, "utterance range");
}

nlohmann::json SyntheticCorpusSpec::to_json() const {
  return {{"control_docs", control_docs},     {"dementia_docs", dementia_docs},
          {"seed", seed},                     {"null_signal", null_signal},
          {"lexical_skew", lexical_skew},     {"mimic_rate", mimic_rate},
          {"event_skew", event_skew},         {"scramble_base", scramble_base},
          {"scramble_skew", scramble_skew},   {"comment_words", comment_words},
          {"comment_leak", comment_leak},     {"min_utterances", min_utterances},
          {"max_utterances", max_utterances}};
}

std::vector<SyntheticDocument> generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Generator g(spec);
  std::vector<SyntheticDocument> docs;
  for (std::size_t i = 0; i < spec.control_docs; ++i) docs.push_back(g.document(docs.size(), false));
  for (std::size_t i = 0; i < spec.dementia_docs; ++i) docs.push_back(g.document(docs.size(), true));
  return docs;
}

std::vector<SyntheticDocument> generate_background(const SyntheticCorpusSpec& spec, std::size_t docs) {
  auto s = spec;
  s.seed = spec.seed ^ 0x5bd1e995u;
  const auto total = spec.control_docs + spec.dementia_docs;
  s.control_docs = total == 0 ? docs / 2 : docs * spec.control_docs / total;
  s.dementia_docs = docs - s.control_docs;
  s.validate();
  Generator g(s);
  g.prefix = "bg";
  g.unlabeled = true;
  std::vector<SyntheticDocument> out;
  for (std::size_t i = 0; i < s.control_docs; ++i) out.push_back(g.document(out.size(), false));
  for (std::size_t i = 0; i < s.dementia_docs; ++i) out.push_back(g.document(out.size(), true));
  return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<SyntheticDocument>& docs,
                  const nlohmann::json& provenance) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, dir.string() + ": " + ec.message());
  nlohmann::json records = nlohmann::json::array();
  for (const auto& d : docs) {
    const auto path = dir / (d.id + ".cha");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, path.string() + ": cannot write");
    out << d.chat_text;
    records.push_back(d.metadata);
  }
  nlohmann::json meta = provenance;
  meta["records"] = std::move(records);
  const auto path = dir / "metadata.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, path.string() + ": cannot write");
  out << meta.dump(2) << "\n";
}

std::vector<chat::Transcript> to_transcripts(const std::vector<SyntheticDocument>& docs) {
  std::vector<chat::Transcript> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    auto t = chat::parse_chat(chat::RawChatDocument::from_text(d.chat_text, d.id));
    chat::apply_sidecar(t, d.metadata);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace adscan::synthetic
