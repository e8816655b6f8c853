#include "adscan/chat.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "adscan/error.hpp"

namespace adscan::chat {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

bool contains_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_alnum(c) || static_cast<unsigned char>(c) >= 0x80; });
}

[[noreturn]] void malformed(const RawChatDocument& doc, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedLine, doc.source_id + ":" + std::to_string(line) + ": " + what);
}

// Lexical items of an utterance body.
enum class ItemKind { Word, GroupOpen, GroupClose, Code, Pause };

struct Item {
  ItemKind kind;
  std::string text;
};

bool is_pause(std::string_view s) {
  // (.) (..) (...) or a timed pause such as (1.5) / (2.)
  if (s.size() < 3 || s.front() != '(' || s.back() != ')') return false;
  auto body = s.substr(1, s.size() - 2);
  if (body.empty()) return false;
  bool any_dot = false;
  for (char c : body) {
    if (c == '.') any_dot = true;
    else if (c != ':' && !std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return any_dot;
}

std::vector<Item> lex(std::string_view body, const RawChatDocument& doc, std::size_t line) {
  std::vector<Item> items;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      items.push_back({ItemKind::Word, word});
      word.clear();
    }
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (is_space(c)) {
      flush();
    } else if (c == '\x15') {
      // media time-alignment bullet: skip to the closing bullet
      flush();
      auto close = body.find('\x15', i + 1);
      i = close == std::string_view::npos ? body.size() : close;
    } else if (c == '<') {
      flush();
      items.push_back({ItemKind::GroupOpen, "<"});
    } else if (c == '>') {
      flush();
      items.push_back({ItemKind::GroupClose, ">"});
    } else if (c == '[') {
      flush();
      auto close = body.find(']', i + 1);
      if (close == std::string_view::npos) malformed(doc, line, "unclosed square bracket code");
      items.push_back({ItemKind::Code, std::string(body.substr(i, close - i + 1))});
      i = close;
    } else if (c == '(' && word.empty()) {
      auto close = body.find(')', i + 1);
      if (close != std::string_view::npos && is_pause(body.substr(i, close - i + 1))) {
        items.push_back({ItemKind::Pause, std::string(body.substr(i, close - i + 1))});
        i = close;
      } else {
        word.push_back(c);
      }
    } else {
      word.push_back(c);
    }
  }
  flush();
  return items;
}

// Strips CHAT word-level annotation: incomplete-word parentheses and
// `@` special-form suffixes.
std::string normalize_word(std::string_view w) {
  if (auto at = w.find('@'); at != std::string_view::npos && at > 0) w = w.substr(0, at);
  std::string out;
  out.reserve(w.size());
  for (char c : w)
    if (c != '(' && c != ')') out.push_back(c);
  return out;
}

bool is_terminator_char(char c) { return c == '.' || c == '?' || c == '!'; }

class UtteranceBuilder {
 public:
  UtteranceBuilder(Utterance& u, std::vector<std::string>& stripped) : u_(u), stripped_(stripped) {}

  void emit(const Item& item) {
    switch (item.kind) {
      case ItemKind::Pause:
        add_event(EventKind::Pause, 0);
        last_word_kept_ = false;
        break;
      case ItemKind::Code:
        if (item.text == "[/]" && last_word_kept_) {
          // single-word retrace: "but [/] but"
          u_.tokens.pop_back();
          add_event(EventKind::Retracing, 1);
        } else {
          stripped_.push_back(item.text);
        }
        last_word_kept_ = false;
        break;
      case ItemKind::Word:
        emit_word(item.text);
        break;
      case ItemKind::GroupOpen:
      case ItemKind::GroupClose:
        break;
    }
  }

  // Content words a group would contribute if kept.
  static std::size_t content_words(const std::vector<Item>& group) {
    std::size_t n = 0;
    for (const auto& it : group)
      if (it.kind == ItemKind::Word && word_class(it.text) != WordClass::Noise) ++n;
    return n;
  }

  void retrace(const std::vector<Item>& group) {
    add_event(EventKind::Retracing, content_words(group));
    last_word_kept_ = false;
  }

  void finish() {
    // Attached terminator on the final word ("cat.").
    if (!u_.tokens.empty()) {
      auto& last = u_.tokens.back();
      while (!last.empty() && is_terminator_char(last.back())) last.pop_back();
      if (!contains_alnum(last)) u_.tokens.pop_back();
    }
  }

 private:
  enum class WordClass { Content, Unintelligible, Filler, Noise };

  static WordClass word_class(std::string_view w) {
    if (w == "xxx") return WordClass::Unintelligible;
    if (w.size() > 1 && w[0] == '&') {
      if (w[1] == '=' || w[1] == '+' || w[1] == '-' || w[1] == '~') return WordClass::Noise;
      return WordClass::Filler;
    }
    if (w == "yyy" || w == "www" || w.front() == '+' || w.front() == '0' || w.front() == '&') return WordClass::Noise;
    if (!contains_alnum(w)) return WordClass::Noise;
    return WordClass::Content;
  }

  void emit_word(const std::string& raw) {
    last_word_kept_ = false;
    if (raw == "+...") {
      add_event(EventKind::TrailingOff, 0);
      return;
    }
    switch (word_class(raw)) {
      case WordClass::Unintelligible: add_event(EventKind::Unintelligible, 1); return;
      case WordClass::Filler: add_event(EventKind::Filler, 1); return;
      case WordClass::Noise:
        if (!std::all_of(raw.begin(), raw.end(), is_terminator_char)) stripped_.push_back(raw);
        return;
      case WordClass::Content: break;
    }
    auto w = normalize_word(raw);
    if (!contains_alnum(w)) {
      stripped_.push_back(raw);
      return;
    }
    u_.tokens.push_back(std::move(w));
    last_word_kept_ = true;
  }

  void add_event(EventKind kind, std::size_t consumed) {
    u_.events.push_back({kind, u_.tokens.size(), u_.tokens.size(), consumed});
  }

  Utterance& u_;
  std::vector<std::string>& stripped_;
  bool last_word_kept_ = false;
};

void parse_body(std::string_view body, Utterance& u, std::vector<std::string>& stripped,
                const RawChatDocument& doc, std::size_t line) {
  auto items = lex(body, doc, line);
  UtteranceBuilder builder(u, stripped);
  bool in_group = false;
  std::vector<Item> group;
  std::optional<std::vector<Item>> pending;  // closed group awaiting its code

  auto flush_pending = [&] {
    if (pending) {
      for (const auto& it : *pending) builder.emit(it);
      pending.reset();
    }
  };

  for (const auto& item : items) {
    if (in_group) {
      if (item.kind == ItemKind::GroupOpen) malformed(doc, line, "nested angle bracket group");
      if (item.kind == ItemKind::GroupClose) {
        in_group = false;
        pending = std::move(group);
        group.clear();
      } else {
        group.push_back(item);
      }
      continue;
    }
    switch (item.kind) {
      case ItemKind::GroupOpen:
        flush_pending();
        in_group = true;
        break;
      case ItemKind::GroupClose:
        malformed(doc, line, "'>' without matching '<'");
      case ItemKind::Code:
        if (pending && item.text == "[/]") {
          builder.retrace(*pending);
          pending.reset();
        } else {
          flush_pending();
          builder.emit(item);
        }
        break;
      default:
        flush_pending();
        builder.emit(item);
    }
  }
  if (in_group) malformed(doc, line, "unclosed angle bracket group");
  flush_pending();
  builder.finish();
}

std::optional<double> parse_age(std::string_view field) {
  field = trim(field);
  int years = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), years);
  if (ec != std::errc{} || p == field.data()) return std::nullopt;
  double age = years;
  if (p < field.data() + field.size() && *p == ';') {
    int months = 0;
    auto rest = std::string_view(p + 1, field.data() + field.size() - (p + 1));
    auto [q, ec2] = std::from_chars(rest.data(), rest.data() + rest.size(), months);
    if (ec2 == std::errc{} && q != rest.data()) age += months / 12.0;
  }
  return age;
}

std::optional<Label> label_from_group(std::string_view group) {
  group = trim(group);
  if (group == "Control") return Label::Control;
  if (group == "ProbableAD" || group == "PossibleAD" || group == "Dementia" || group == "AD") return Label::Dementia;
  return std::nullopt;
}

}  // namespace

RawChatDocument RawChatDocument::from_text(std::string_view text, std::string source_id) {
  RawChatDocument doc;
  doc.source_id = std::move(source_id);
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    doc.lines.emplace_back(line);
  }
  if (!doc.lines.empty() && doc.lines.back().empty()) doc.lines.pop_back();
  return doc;
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Unintelligible: return "Unintelligible";
    case EventKind::Retracing: return "Retracing";
    case EventKind::Pause: return "Pause";
    case EventKind::Filler: return "Filler";
    case EventKind::TrailingOff: return "TrailingOff";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept {
  for (auto k : kEventKinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::string_view to_string(Gender g) noexcept { return g == Gender::Male ? "male" : "female"; }

std::string_view to_string(Label l) noexcept {
  switch (l) {
    case Label::Control: return "control";
    case Label::Dementia: return "dementia";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Gender> gender_from_string(std::string_view s) noexcept {
  if (s == "male" || s == "m" || s == "M") return Gender::Male;
  if (s == "female" || s == "f" || s == "F") return Gender::Female;
  return std::nullopt;
}

std::optional<Label> label_from_string(std::string_view s) noexcept {
  if (s == "control") return Label::Control;
  if (s == "dementia") return Label::Dementia;
  if (s == "unknown") return Label::Unknown;
  return std::nullopt;
}

Transcript parse_chat(const RawChatDocument& doc, const ParseOptions& options) {
  Transcript t;
  t.id = doc.source_id;
  std::vector<std::string> interviewers = options.interviewer_codes;
  struct Pending {
    std::string speaker;
    std::string body;
    std::size_t line;
  };
  std::vector<Pending> tiers;
  bool continuing_speaker = false;
  std::optional<std::string> id_participant_code;

  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    std::string_view line = doc.lines[i];
    if (line.empty()) {
      continuing_speaker = false;
      continue;
    }
    if (line.front() == '*') {
      auto rest = line;
      while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
      auto colon = rest.find(':');
      if (colon == std::string_view::npos) malformed(doc, lineno, "speaker tier without ':'");
      auto code = rest.substr(0, colon);
      if (code.empty() || !std::all_of(code.begin(), code.end(), [](char c) { return is_alnum(c) || c == '_'; }))
        malformed(doc, lineno, "invalid speaker code");
      auto body = rest.substr(colon + 1);
      while (!body.empty() && (body.back() == '*' || is_space(body.back()))) body.remove_suffix(1);
      tiers.push_back({std::string(code), std::string(body), lineno});
      continuing_speaker = true;
    } else if (line.front() == '\t' || line.front() == ' ') {
      if (continuing_speaker && !tiers.empty()) {
        tiers.back().body.push_back(' ');
        tiers.back().body.append(trim(line));
      }
    } else if (line.front() == '@') {
      continuing_speaker = false;
      auto colon = line.find(':');
      auto header = line.substr(0, colon);
      auto value = colon == std::string_view::npos ? std::string_view{} : trim(line.substr(colon + 1));
      if (header == "@Participants") {
        for (auto entry : split(value, ',')) {
          std::istringstream words{std::string(trim(entry))};
          std::string code, word, role;
          words >> code;
          while (words >> word) role = word;
          if (role == "Investigator" || role == "Interviewer") interviewers.push_back(code);
        }
      } else if (header == "@ID") {
        auto f = split(value, '|');
        if (f.size() >= 8) {
          auto code = std::string(trim(f[2]));
          auto role = trim(f[7]);
          if (role == "Investigator" || role == "Interviewer") {
            interviewers.push_back(code);
          } else if (!id_participant_code) {
            id_participant_code = code;
            if (auto age = parse_age(f[3]); age) t.demographics.age = age;
            if (auto g = gender_from_string(trim(f[4])); g) t.demographics.gender = g;
            if (auto l = label_from_group(f[5]); l) t.label = *l;
          }
        }
      }
    } else if (line.front() == '%') {
      continuing_speaker = false;
    } else {
      continuing_speaker = false;
      t.stripped.emplace_back(line);
    }
  }

  if (tiers.empty()) throw Error(ErrorCode::EmptyDocument, doc.source_id + ": no speaker lines");

  for (auto& tier : tiers) {
    Utterance u;
    u.speaker = tier.speaker;
    u.line = tier.line;
    u.role = std::find(interviewers.begin(), interviewers.end(), tier.speaker) != interviewers.end()
                 ? Role::Interviewer
                 : Role::Participant;
    parse_body(tier.body, u, t.stripped, doc, tier.line);
    t.utterances.push_back(std::move(u));
  }
  return t;
}

std::vector<std::string> clean_tokens(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  for (const auto& tok : tokens) {
    std::string s;
    s.reserve(tok.size());
    for (std::size_t i = 0; i < tok.size(); ++i) {
      char c = tok[i];
      if (c == '\\' && i + 1 < tok.size() && (tok[i + 1] == '-' || tok[i + 1] == '/')) {
        s.push_back(' ');
        ++i;
      } else if (c == '-' || c == '/') {
        s.push_back(' ');
      } else if (c == '.' || c == ':' || c == '?' || c == ';' || c == ',' || c == '!' || c == '"') {
        // deleted
      } else if (c == '\xE2' && i + 2 < tok.size() && tok[i + 1] == '\x80' &&
                 (tok[i + 2] == '\x99' || tok[i + 2] == '\x98')) {
        s.push_back('\'');  // U+2019 / U+2018
        i += 2;
      } else {
        s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      }
    }
    std::istringstream parts(s);
    std::string part;
    while (parts >> part) out.push_back(part);
  }
  return out;
}

std::vector<std::string> clean_text(const Transcript& t) {
  std::vector<std::string> out;
  for (const auto& u : t.utterances) {
    if (u.role != Role::Participant) continue;
    auto c = clean_tokens(u.tokens);
    out.insert(out.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  return out;
}

std::vector<std::vector<std::string>> clean_utterances(const Transcript& t) {
  std::vector<std::vector<std::string>> out;
  for (const auto& u : t.utterances) {
    if (u.role != Role::Participant) continue;
    auto c = clean_tokens(u.tokens);
    if (!c.empty()) out.push_back(std::move(c));
  }
  return out;
}

EventCounts event_counts(const Transcript& t) {
  EventCounts counts;
  for (const auto& u : t.utterances) {
    if (u.role != Role::Participant) continue;
    for (const auto& e : u.events) ++counts[e.kind];
  }
  return counts;
}

std::size_t participant_utterance_count(const Transcript& t) {
  return static_cast<std::size_t>(std::count_if(t.utterances.begin(), t.utterances.end(),
                                                [](const Utterance& u) { return u.role == Role::Participant; }));
}

std::size_t interviewer_utterance_count(const Transcript& t) {
  return t.utterances.size() - participant_utterance_count(t);
}

void apply_sidecar(Transcript& t, const SidecarRecord& record) {
  if (!(record.audio_length_seconds > 0.0))
    throw Error(ErrorCode::InvalidMetadata, record.id + ": audio_length_seconds must be positive");
  if (record.age && !(*record.age >= 0.0 && *record.age <= 130.0))
    throw Error(ErrorCode::InvalidMetadata, record.id + ": age outside [0, 130]");
  if (record.age) t.demographics.age = record.age;
  if (record.gender) t.demographics.gender = record.gender;
  t.audio_length_seconds = record.audio_length_seconds;
  t.label = record.label;
}

}  // namespace adscan::chat
