#include "adscan/error.hpp"

namespace adscan {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NonPositiveAudioLength: return "NonPositiveAudioLength";
    case ErrorCode::MissingDemographics: return "MissingDemographics";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::AllTokensOOV: return "AllTokensOOV";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::NonFiniteFeatures: return "NonFiniteFeatures";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingleClassLabels: return "SingleClassLabels";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::ModelNotLoaded: return "ModelNotLoaded";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidMetadata: return "InvalidMetadata";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_numeric_failure(ErrorCode code) noexcept {
  return code == ErrorCode::DivergenceDetected || code == ErrorCode::NonFiniteFeatures;
}

}  // namespace adscan
