#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adscan {

enum class ErrorCode {
  // transcript parsing
  MalformedLine,
  EmptyDocument,
  // features
  EmptyCorpus,
  NonPositiveAudioLength,
  MissingDemographics,
  SchemaMismatch,
  // embeddings
  DivergenceDetected,
  AllTokensOOV,
  EmptySequence,
  DimensionMismatch,
  // classifiers / evaluation
  SingleClassTraining,
  NonFiniteFeatures,
  TooFewSamples,
  LengthMismatch,
  SingleClassLabels,
  // service
  EmptyText,
  ModelNotLoaded,
  // misc
  InvalidConfig,
  InvalidMetadata,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for the codes that describe numeric failure rather than bad input.
bool is_numeric_failure(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adscan
