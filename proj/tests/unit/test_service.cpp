#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "adscan/error.hpp"
#include "adscan/screening_service.hpp"
#include "small_run.hpp"

#include <httplib.h>

using namespace adscan;
using namespace adscan::service;
using nlohmann::json;

namespace {

const json& container() {
  static const json j = [] {
    auto ex = testing::small_experiment(testing::small_config());
    return pipeline::run_pipeline(ex, false).model;
  }();
  return j;
}

ScreeningRequest request(std::string text) {
  ScreeningRequest r;
  r.description_text = std::move(text);
  r.age = 70;
  r.gender = chat::Gender::Female;
  r.speaking_duration = 45;
  return r;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("risk bands follow the thresholds") {
  CHECK(band_for(0.0) == RiskBand::Low);
  CHECK(band_for(0.2999) == RiskBand::Low);
  CHECK(band_for(0.3) == RiskBand::Elevated);
  CHECK(band_for(0.5) == RiskBand::Elevated);
  CHECK(band_for(0.7) == RiskBand::High);
  CHECK(band_for(1.0) == RiskBand::High);
  CHECK(band_for(0.5, {0.2, 0.4}) == RiskBand::High);
}

TEST_CASE("request validation") {
  const json ok{{"description_text", "a boy"}, {"age", 70}, {"gender", "male"}, {"speaking_duration", 30}};
  CHECK(ScreeningRequest::from_json(ok).gender == chat::Gender::Male);
  for (const char* field : {"description_text", "age", "gender", "speaking_duration"}) {
    auto j = ok;
    j.erase(field);
    CHECK(code_of([&] { ScreeningRequest::from_json(j); }) == ErrorCode::InvalidConfig);
  }
  auto j = ok;
  j["speaking_duration"] = 0;
  CHECK(code_of([&] { ScreeningRequest::from_json(j); }) == ErrorCode::NonPositiveAudioLength);
  j = ok;
  j["gender"] = "x";
  CHECK(code_of([&] { ScreeningRequest::from_json(j); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("free text becomes one participant utterance per sentence") {
  const auto t = transcript_from_text(request("The boy, he is on the stool! Water\nis running.  "));
  REQUIRE(t.utterances.size() == 3);
  CHECK(t.utterances[0].tokens == std::vector<std::string>{"The", "boy,", "he", "is", "on", "the", "stool"});
  CHECK(chat::clean_text(t).front() == "the");
  CHECK(t.audio_length_seconds == 45);
  CHECK(code_of([] { transcript_from_text(request(" .. ! \n")); }) == ErrorCode::EmptyText);
}

TEST_CASE("service scoring, loading and health") {
  ScreeningService svc;
  CHECK(svc.health() == json{{"loaded", false}});
  CHECK(code_of([&] { svc.score(request("the boy")); }) == ErrorCode::ModelNotLoaded);
  CHECK(code_of([&] { svc.model_info(); }) == ErrorCode::ModelNotLoaded);

  auto corrupt = container();
  corrupt["classifier"]["bias"] = 42.0;
  CHECK(code_of([&] { svc.load_json(corrupt); }) == ErrorCode::SchemaMismatch);
  CHECK(svc.health() == json{{"loaded", false}});

  svc.load_json(container());
  CHECK(svc.health().at("version") == pipeline::container_version(container()));
  CHECK(svc.model_info().at("pipeline") == 4);

  const auto text = "the kid is taking something from the thing . the lady is doing the things";
  const auto a = svc.score(request(text));
  const auto b = svc.score(request(text));
  CHECK(a.probability == b.probability);
  CHECK(a.probability >= 0.0);
  CHECK(a.probability <= 1.0);
  CHECK(a.risk_band == band_for(a.probability));
  CHECK(a.to_json().at("disclaimer") == std::string(kDisclaimer));
  CHECK(code_of([&] { svc.score(request("   ")); }) == ErrorCode::EmptyText);

  // A failed reload keeps the current model.
  const auto path = std::filesystem::temp_directory_path() / "adscan_unit_bad_model.json";
  std::ofstream(path) << "{not json";
  CHECK(code_of([&] { svc.load(path); }) == ErrorCode::SchemaMismatch);
  CHECK(svc.health().at("loaded") == true);
  std::filesystem::remove(path);
}

TEST_CASE("HTTP routes, status codes and CORS") {
  ScreeningService svc;
  httplib::Server server;
  register_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const std::string body =
      json{{"description_text", "the boy is on the stool"}, {"age", 70}, {"gender", "female"}, {"speaking_duration", 20}}
          .dump();

  auto res = client.Get("/api/v1/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body) == json{{"loaded", false}});
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");

  res = client.Post("/api/v1/score", body, "application/json");
  REQUIRE(res);
  CHECK(res->status == 503);
  CHECK(json::parse(res->body).at("error") == "ModelNotLoaded");

  svc.load_json(container());
  res = client.Post("/api/v1/score", body, "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto first = json::parse(res->body);
  for (const char* field : {"probability", "risk_band", "model_version", "disclaimer"}) CHECK(first.contains(field));
  res = client.Post("/api/v1/score", body, "application/json");
  CHECK(json::parse(res->body) == first);

  auto empty = json::parse(body);
  empty["description_text"] = "";
  res = client.Post("/api/v1/score", empty.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body).at("error") == "EmptyText");
  CHECK(json::parse(res->body).contains("disclaimer"));

  res = client.Post("/api/v1/score", "{oops", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);

  res = client.Options("/api/v1/score");
  REQUIRE(res);
  CHECK(res->status == 204);
  CHECK(res->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  res = client.Get("/api/v1/model");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body).at("version") == pipeline::container_version(container()));

  server.stop();
  thread.join();
}
