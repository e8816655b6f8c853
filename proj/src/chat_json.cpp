#include "adscan/chat_json.hpp"

#include "adscan/error.hpp"

namespace adscan::chat {

using nlohmann::json;

void to_json(json& j, const ParsedEvent& e) {
  j = json{{"kind", to_string(e.kind)}, {"begin", e.begin}, {"end", e.end}, {"consumed", e.consumed}};
}

void from_json(const json& j, ParsedEvent& e) {
  auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::InvalidMetadata, "unknown event kind " + j.at("kind").dump());
  e.kind = *kind;
  e.begin = j.at("begin").get<std::size_t>();
  e.end = j.at("end").get<std::size_t>();
  e.consumed = j.at("consumed").get<std::size_t>();
}

void to_json(json& j, const Utterance& u) {
  j = json{{"speaker", u.speaker},
           {"role", u.role == Role::Participant ? "participant" : "interviewer"},
           {"tokens", u.tokens},
           {"events", u.events},
           {"line", u.line}};
}

void from_json(const json& j, Utterance& u) {
  u.speaker = j.at("speaker").get<std::string>();
  u.role = j.at("role").get<std::string>() == "interviewer" ? Role::Interviewer : Role::Participant;
  u.tokens = j.at("tokens").get<std::vector<std::string>>();
  u.events = j.at("events").get<std::vector<ParsedEvent>>();
  u.line = j.at("line").get<std::size_t>();
}

void to_json(json& j, const Transcript& t) {
  json demo = json::object();
  demo["age"] = t.demographics.age ? json(*t.demographics.age) : json(nullptr);
  demo["gender"] = t.demographics.gender ? json(to_string(*t.demographics.gender)) : json(nullptr);
  j = json{{"id", t.id},
           {"label", to_string(t.label)},
           {"audio_length_seconds", t.audio_length_seconds},
           {"demographics", demo},
           {"utterances", t.utterances},
           {"stripped", t.stripped}};
}

void from_json(const json& j, Transcript& t) {
  t.id = j.at("id").get<std::string>();
  auto label = label_from_string(j.at("label").get<std::string>());
  if (!label) throw Error(ErrorCode::InvalidMetadata, "unknown label " + j.at("label").dump());
  t.label = *label;
  t.audio_length_seconds = j.at("audio_length_seconds").get<double>();
  const auto& demo = j.at("demographics");
  t.demographics.age = demo.at("age").is_null() ? std::nullopt : std::optional<double>(demo.at("age").get<double>());
  t.demographics.gender =
      demo.at("gender").is_null() ? std::nullopt : gender_from_string(demo.at("gender").get<std::string>());
  t.utterances = j.at("utterances").get<std::vector<Utterance>>();
  t.stripped = j.at("stripped").get<std::vector<std::string>>();
}

void to_json(json& j, const SidecarRecord& r) {
  j = json{{"id", r.id},
           {"age", r.age ? json(*r.age) : json(nullptr)},
           {"gender", r.gender ? json(to_string(*r.gender)) : json(nullptr)},
           {"audio_length_seconds", r.audio_length_seconds},
           {"label", to_string(r.label)}};
}

void from_json(const json& j, SidecarRecord& r) {
  r.id = j.at("id").get<std::string>();
  if (j.contains("age") && !j.at("age").is_null()) r.age = j.at("age").get<double>();
  if (j.contains("gender") && !j.at("gender").is_null()) {
    r.gender = gender_from_string(j.at("gender").get<std::string>());
    if (!r.gender) throw Error(ErrorCode::InvalidMetadata, r.id + ": unknown gender " + j.at("gender").dump());
  }
  r.audio_length_seconds = j.at("audio_length_seconds").get<double>();
  auto label = label_from_string(j.value("label", std::string("unknown")));
  if (!label) throw Error(ErrorCode::InvalidMetadata, r.id + ": unknown label " + j.at("label").dump());
  r.label = *label;
}

}  // namespace adscan::chat
