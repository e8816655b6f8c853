#pragma once

// Scores a typed picture description with a loaded model container.

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "adscan/chat.hpp"
#include "adscan/pipeline.hpp"

namespace httplib {
class Server;
}

namespace adscan::service {

enum class RiskBand { Low, Elevated, High };
std::string_view to_string(RiskBand b) noexcept;

struct BandThresholds {
  double elevated = 0.3;  // probability at which Low becomes Elevated
  double high = 0.7;      // probability at which Elevated becomes High
};

RiskBand band_for(double probability, const BandThresholds& t = {}) noexcept;

inline constexpr std::string_view kDisclaimer =
    "This result is a research screening aid, not a medical diagnosis. "
    "Please consult a qualified clinician about any concerns regarding memory or thinking.";

struct ScreeningRequest {
  std::string description_text;
  double age = 0.0;
  chat::Gender gender = chat::Gender::Female;
  double speaking_duration = 0.0;  // seconds

  /// Throws Error{InvalidConfig} for missing or ill-typed fields and
  /// Error{NonPositiveAudioLength} for a non-positive duration.
  static ScreeningRequest from_json(const nlohmann::json& j);
};

struct ScreeningResponse {
  double probability = 0.0;
  RiskBand risk_band = RiskBand::Low;
  std::string model_version;
  std::string disclaimer{kDisclaimer};

  nlohmann::json to_json() const;
};

/// One participant utterance per sentence of the free text. CHAT markers are
/// not interpreted. Throws Error{EmptyText} when no word survives cleaning.
chat::Transcript transcript_from_text(const ScreeningRequest& r);

class ScreeningService {
 public:
  explicit ScreeningService(BandThresholds thresholds = {}) : thresholds_(thresholds) {}

  /// Replaces the current model only when the new container verifies; on
  /// failure the previous state is kept and the error rethrown.
  void load(const std::filesystem::path& path);
  void load_json(const nlohmann::json& container);

  /// {"loaded": bool, "version": hash} (version only when loaded).
  nlohmann::json health() const;
  /// Schema and version metadata. Throws Error{ModelNotLoaded}.
  nlohmann::json model_info() const;
  /// Throws Error{ModelNotLoaded}, Error{EmptyText}.
  ScreeningResponse score(const ScreeningRequest& request) const;

  const BandThresholds& thresholds() const noexcept { return thresholds_; }

 private:
  struct Loaded {
    pipeline::FittedPipeline model;
    std::string version;
    nlohmann::json info;
  };
  std::shared_ptr<const Loaded> current() const;

  BandThresholds thresholds_;
  mutable std::mutex mutex_;
  std::shared_ptr<const Loaded> loaded_;
};

/// POST /api/v1/score, GET /api/v1/health, GET /api/v1/model, with CORS
/// headers on every response.
void register_routes(httplib::Server& server, ScreeningService& service);

}  // namespace adscan::service
