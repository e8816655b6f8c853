#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "adscan/chat.hpp"
#include "adscan/chat_json.hpp"
#include "adscan/error.hpp"

using namespace adscan;
using namespace adscan::chat;

namespace {

RawChatDocument fixture(const std::string& name) {
  std::ifstream in(std::string(ADSCAN_FIXTURES) + "/" + name);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return RawChatDocument::from_text(ss.str(), name);
}

std::vector<EventKind> kinds(const Utterance& u) {
  std::vector<EventKind> out;
  for (const auto& e : u.events) out.push_back(e.kind);
  return out;
}

std::size_t kept_plus_consumed(const Utterance& u) {
  std::size_t n = u.tokens.size();
  for (const auto& e : u.events) n += e.consumed;
  return n;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected adscan::Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("unintelligible marker becomes an event and leaves the tokens") {
  auto t = parse_chat(RawChatDocument::from_text("***GAB: I want xxx .**", "gab"));
  REQUIRE(t.utterances.size() == 1);
  const auto& u = t.utterances[0];
  CHECK(u.speaker == "GAB");
  CHECK(u.tokens == std::vector<std::string>{"I", "want"});
  CHECK(kinds(u) == std::vector<EventKind>{EventKind::Unintelligible});
}

TEST_CASE("retracing group is removed and the repeated word kept once") {
  auto t = parse_chat(fixture("retracing.cha"));
  REQUIRE(t.utterances.size() == 1);
  const auto& u = t.utterances[0];
  CHECK(u.speaker == "DAV");
  CHECK(u.tokens == std::vector<std::string>{"but", "it's", "a", "cat"});
  CHECK(kinds(u) == std::vector<EventKind>{EventKind::Retracing, EventKind::Pause});
  CHECK(u.events[0].consumed == 3);
  CHECK(u.events[1].begin == 1);  // pause sits after the kept "but"
}

TEST_CASE("single-word retrace without brackets") {
  auto t = parse_chat(RawChatDocument::from_text("*PAR:\tthe [/] the boy .", "x"));
  CHECK(t.utterances[0].tokens == std::vector<std::string>{"the", "boy"});
  CHECK(kinds(t.utterances[0]) == std::vector<EventKind>{EventKind::Retracing});
}

TEST_CASE("parse errors") {
  CHECK(code_of([] { parse_chat(RawChatDocument::from_text("", "empty")); }) == ErrorCode::EmptyDocument);
  CHECK(code_of([] { parse_chat(RawChatDocument::from_text("@Begin\n@End\n", "hdr")); }) ==
        ErrorCode::EmptyDocument);

  auto doc = RawChatDocument::from_text("*PAR:\tfine .\n*PAR:\t<but but [/] but .", "bad");
  try {
    parse_chat(doc);
    FAIL("expected MalformedLine");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedLine);
    CHECK(std::string(e.what()).find("bad:2") != std::string::npos);
  }
  CHECK(code_of([] { parse_chat(RawChatDocument::from_text("*PAR:\t<a <b> c> [/] d", "n")); }) ==
        ErrorCode::MalformedLine);
  CHECK(code_of([] { parse_chat(RawChatDocument::from_text("*PAR:\ta b> [/]", "n")); }) == ErrorCode::MalformedLine);
  CHECK(code_of([] { parse_chat(RawChatDocument::from_text("*PAR no colon", "n")); }) == ErrorCode::MalformedLine);
}

TEST_CASE("clean_tokens") {
  CHECK(clean_tokens(std::vector<std::string>{"it's", "a", "cat", "."}) ==
        std::vector<std::string>{"it's", "a", "cat"});
  CHECK(clean_tokens(std::vector<std::string>{"some\\-thing"}) == std::vector<std::string>{"some", "thing"});
  CHECK(clean_tokens(std::vector<std::string>{"and\\/or", "cookie-jar"}) ==
        std::vector<std::string>{"and", "or", "cookie", "jar"});
  CHECK(clean_tokens(std::vector<std::string>{}).empty());
  CHECK(clean_tokens(std::vector<std::string>{"Mother,", "?", "no:", "\"Yes!\""}) ==
        std::vector<std::string>{"mother", "no", "yes"});
  CHECK(clean_tokens(std::vector<std::string>{"it\xE2\x80\x99s"}) == std::vector<std::string>{"it's"});
}

TEST_CASE("event counts across the example dialogue") {
  auto t = parse_chat(fixture("dialogue_xxx.cha"));
  auto dav = parse_chat(fixture("retracing.cha"));
  t.utterances.insert(t.utterances.end(), dav.utterances.begin(), dav.utterances.end());
  auto c = event_counts(t);
  CHECK(c[EventKind::Unintelligible] == 2);
  CHECK(c[EventKind::Retracing] == 1);
  CHECK(c[EventKind::Pause] == 1);
  CHECK(c[EventKind::Filler] == 0);
}

TEST_CASE("event counts: none, and one pause per utterance") {
  auto t = parse_chat(RawChatDocument::from_text("*PAR:\tthe boy is on the stool .", "x"));
  CHECK(event_counts(t) == EventCounts{});

  std::string text;
  for (int i = 0; i < 100; ++i) text += "*PAR:\tthe cookie (.) jar is open .\n*INV:\tuh huh (.) .\n";
  auto many = parse_chat(RawChatDocument::from_text(text, "many"));
  auto c = event_counts(many);
  CHECK(c[EventKind::Pause] == 100);  // interviewer pauses excluded
  CHECK(c[EventKind::Unintelligible] == 0);
}

TEST_CASE("clinical-style transcript: headers, roles, fillers, trailing off") {
  auto t = parse_chat(fixture("pitt_style.cha"));
  REQUIRE(t.demographics.age.has_value());
  CHECK(*t.demographics.age == 67.0);
  CHECK(t.demographics.gender == Gender::Female);
  CHECK(t.label == Label::Dementia);
  REQUIRE(t.utterances.size() == 6);
  CHECK(t.utterances[0].role == Role::Interviewer);
  CHECK(t.utterances[1].role == Role::Participant);
  CHECK(t.utterances[1].tokens ==
        std::vector<std::string>{"well", "the", "lady", "is", "washing", "the", "dishes"});
  CHECK(kinds(t.utterances[1]) == std::vector<EventKind>{EventKind::Filler, EventKind::Retracing});
  CHECK(kinds(t.utterances[3]) == std::vector<EventKind>{EventKind::Unintelligible, EventKind::TrailingOff});
  // continuation line joins the previous tier; [//] is stripped noise
  CHECK(t.utterances[5].tokens.size() == 16);
  CHECK(std::find(t.stripped.begin(), t.stripped.end(), "[//]") != t.stripped.end());
  CHECK(participant_utterance_count(t) == 4);
  CHECK(interviewer_utterance_count(t) == 2);

  auto c = event_counts(t);
  CHECK(c[EventKind::Pause] == 2);
  CHECK(c[EventKind::Filler] == 1);
  CHECK(c[EventKind::TrailingOff] == 1);

  auto cleaned = clean_text(t);
  CHECK(std::find(cleaned.begin(), cleaned.end(), "mhm") == cleaned.end());  // interviewer only
  CHECK(std::find(cleaned.begin(), cleaned.end(), "lady") != cleaned.end());
}

TEST_CASE("content words are conserved: kept tokens plus event-consumed words") {
  auto t = parse_chat(fixture("pitt_style.cha"));
  // hand counts of content words on each participant tier
  CHECK(kept_plus_consumed(t.utterances[1]) == 10);
  CHECK(kept_plus_consumed(t.utterances[2]) == 9);
  CHECK(kept_plus_consumed(t.utterances[3]) == 9);
  CHECK(kept_plus_consumed(t.utterances[5]) == 16);
  auto dav = parse_chat(fixture("retracing.cha"));
  CHECK(kept_plus_consumed(dav.utterances[0]) == 7);
  for (const auto& u : t.utterances)
    for (const auto& e : u.events) {
      CHECK(e.begin <= e.end);
      CHECK(e.end <= u.tokens.size());
    }
}

TEST_CASE("parsing is deterministic and JSON round-trips") {
  auto a = parse_chat(fixture("pitt_style.cha"));
  auto b = parse_chat(fixture("pitt_style.cha"));
  CHECK(a == b);
  nlohmann::json j = a;
  CHECK(j.get<Transcript>() == a);
}

TEST_CASE("sidecar validation") {
  auto t = parse_chat(fixture("dialogue_xxx.cha"));
  SidecarRecord r{"d", 60.0, Gender::Male, 55.0, Label::Control};
  apply_sidecar(t, r);
  CHECK(t.audio_length_seconds == 55.0);
  CHECK(t.label == Label::Control);
  r.audio_length_seconds = 0.0;
  CHECK(code_of([&] { apply_sidecar(t, r); }) == ErrorCode::InvalidMetadata);
  r.audio_length_seconds = 10.0;
  r.age = 140.0;
  CHECK(code_of([&] { apply_sidecar(t, r); }) == ErrorCode::InvalidMetadata);
}

TEST_CASE("random bytes either parse or raise a structured error") {
  std::mt19937_64 rng(7);
  const std::string alphabet = "*<>[]()/.&x: \t\nPARINV+@%abc\\-";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const auto len = rng() % 80;
    for (std::size_t k = 0; k < len; ++k)
      s.push_back(rng() % 3 == 0 ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()]);
    try {
      auto t = parse_chat(RawChatDocument::from_text(s, "fuzz"));
      for (const auto& u : t.utterances) CHECK_FALSE(u.speaker.empty());
    } catch (const Error&) {
    }
  }
}
