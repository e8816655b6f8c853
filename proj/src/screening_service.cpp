#include "adscan/screening_service.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "adscan/error.hpp"
#include "adscan/hash.hpp"

namespace adscan::service {

using nlohmann::json;

std::string_view to_string(RiskBand b) noexcept {
  switch (b) {
    case RiskBand::Low: return "Low";
    case RiskBand::Elevated: return "Elevated";
    case RiskBand::High: return "High";
  }
  return "Low";
}

RiskBand band_for(double p, const BandThresholds& t) noexcept {
  if (p < t.elevated) return RiskBand::Low;
  if (p < t.high) return RiskBand::Elevated;
  return RiskBand::High;
}

ScreeningRequest ScreeningRequest::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "request body must be a JSON object");
  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) throw Error(ErrorCode::InvalidConfig, std::string("missing field '") + name + "'");
    return j.at(name);
  };
  ScreeningRequest r;
  const auto& text = field("description_text");
  if (!text.is_string()) throw Error(ErrorCode::InvalidConfig, "description_text must be a string");
  r.description_text = text.get<std::string>();
  const auto& age = field("age");
  if (!age.is_number() || !(age.get<double>() >= 0.0 && age.get<double>() <= 130.0))
    throw Error(ErrorCode::InvalidConfig, "age must be a number in [0, 130]");
  r.age = age.get<double>();
  const auto& gender = field("gender");
  const auto g = gender.is_string() ? chat::gender_from_string(gender.get<std::string>()) : std::nullopt;
  if (!g) throw Error(ErrorCode::InvalidConfig, "gender must be \"male\" or \"female\"");
  r.gender = *g;
  const auto& duration = field("speaking_duration");
  if (!duration.is_number()) throw Error(ErrorCode::InvalidConfig, "speaking_duration must be a number");
  r.speaking_duration = duration.get<double>();
  if (!(r.speaking_duration > 0.0) || !std::isfinite(r.speaking_duration))
    throw Error(ErrorCode::NonPositiveAudioLength, "speaking_duration must be positive");
  return r;
}

json ScreeningResponse::to_json() const {
  return {{"probability", probability},
          {"risk_band", to_string(risk_band)},
          {"model_version", model_version},
          {"disclaimer", disclaimer}};
}

chat::Transcript transcript_from_text(const ScreeningRequest& r) {
  chat::Transcript t;
  t.id = "request";
  t.demographics.age = r.age;
  t.demographics.gender = r.gender;
  t.audio_length_seconds = r.speaking_duration;
  chat::Utterance u;
  u.speaker = "PAR";
  auto flush = [&] {
    if (!chat::clean_tokens(u.tokens).empty()) t.utterances.push_back(u);
    u.tokens.clear();
  };
  std::string word;
  for (char ch : r.description_text) {
    const bool end = ch == '.' || ch == '?' || ch == '!' || ch == '\n';
    if (std::isspace(static_cast<unsigned char>(ch)) || end) {
      if (!word.empty()) u.tokens.push_back(word);
      word.clear();
      if (end) flush();
    } else {
      word += ch;
    }
  }
  if (!word.empty()) u.tokens.push_back(word);
  flush();
  if (t.utterances.empty()) throw Error(ErrorCode::EmptyText, "description has no words");
  return t;
}

void ScreeningService::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot read model");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  load_json(j);
}

void ScreeningService::load_json(const json& container) {
  auto next = std::make_shared<Loaded>();
  next->model = pipeline::model_from_json(container);
  next->version = pipeline::container_version(container);
  next->info = {{"version", next->version},
                {"format_version", container.at("format_version")},
                {"config_hash", container.at("config_hash")},
                {"pipeline", container.at("pipeline")},
                {"classifier", container.at("classifier").at("type")},
                {"schema", container.at("schema")},
                {"risk_bands", {{"elevated", thresholds_.elevated}, {"high", thresholds_.high}}}};
  std::lock_guard lock(mutex_);
  loaded_ = std::move(next);
}

std::shared_ptr<const ScreeningService::Loaded> ScreeningService::current() const {
  std::lock_guard lock(mutex_);
  return loaded_;
}

json ScreeningService::health() const {
  const auto m = current();
  if (!m) return {{"loaded", false}};
  return {{"loaded", true}, {"version", m->version}};
}

json ScreeningService::model_info() const {
  const auto m = current();
  if (!m) throw Error(ErrorCode::ModelNotLoaded, "no model is loaded");
  return m->info;
}

ScreeningResponse ScreeningService::score(const ScreeningRequest& request) const {
  const auto m = current();
  if (!m) throw Error(ErrorCode::ModelNotLoaded, "no model is loaded");
  const auto t = transcript_from_text(request);
  ScreeningResponse r;
  r.probability = pipeline::predict_proba(m->model, t);
  if (!std::isfinite(r.probability)) throw Error(ErrorCode::NonFiniteFeatures, "score is not finite");
  r.risk_band = band_for(r.probability, thresholds_);
  r.model_version = m->version;
  return r;
}

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyText:
    case ErrorCode::InvalidConfig:
    case ErrorCode::NonPositiveAudioLength:
    case ErrorCode::MissingDemographics:
      return 400;
    case ErrorCode::ModelNotLoaded:
      return 503;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}, {"disclaimer", kDisclaimer}});
}

}  // namespace

void register_routes(httplib::Server& server, ScreeningService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/api/v1/health", [&](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, service.health());
  });
  server.Get("/api/v1/model", [&](const httplib::Request&, httplib::Response& res) {
    try {
      send_json(res, 200, service.model_info());
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), e.what());
    }
  });
  server.Post("/api/v1/score", [&](const httplib::Request& req, httplib::Response& res) {
    try {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidConfig, "request body is not valid JSON");
      }
      send_json(res, 200, service.score(ScreeningRequest::from_json(body)).to_json());
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  });
}

}  // namespace adscan::service
