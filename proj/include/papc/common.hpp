#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace papc {

// Canonical pipeline format: mono 11025 Hz, 40 ms frames, ~10 ms hop.
inline constexpr int kSampleRateHz = 11025;
inline constexpr int kFrameLen = 441;   // 40 ms at 11025 Hz
inline constexpr int kHop = 110;        // 9.977 ms; nearest integer hop
inline constexpr int kFftSize = 512;
inline constexpr int kNumBins = kFftSize / 2 + 1;
inline constexpr double kBinHz = static_cast<double>(kSampleRateHz) / kFftSize;

enum class ErrorCode {
  MalformedWav,
  UnsupportedEncoding,
  EmptyClip,
  SilentFrame,
  KeepTooLarge,
  EmptySequence,
  NoSpeechDetected,
  LengthMismatch,
  InsufficientVoicing,
  ZeroAmplitudeFrame,
  AllFramesSilent,
  TooFewFrames,
  TooLittleSpeech,
  DegenerateClusters,
  SingularScatter,
  DegenerateMeans,
  SingleClassInput,
  DimensionMismatch,
  NonfiniteLoss,
  EmptyTestSet,
  NoInputs,
  ModelMissing,
  ManifestMalformed,
  ConfigError,
  IoError,
  InvalidArgument,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedWav: return "MalformedWav";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::EmptyClip: return "EmptyClip";
    case ErrorCode::SilentFrame: return "SilentFrame";
    case ErrorCode::KeepTooLarge: return "KeepTooLarge";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::NoSpeechDetected: return "NoSpeechDetected";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InsufficientVoicing: return "InsufficientVoicing";
    case ErrorCode::ZeroAmplitudeFrame: return "ZeroAmplitudeFrame";
    case ErrorCode::AllFramesSilent: return "AllFramesSilent";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::TooLittleSpeech: return "TooLittleSpeech";
    case ErrorCode::DegenerateClusters: return "DegenerateClusters";
    case ErrorCode::SingularScatter: return "SingularScatter";
    case ErrorCode::DegenerateMeans: return "DegenerateMeans";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonfiniteLoss: return "NonfiniteLoss";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::NoInputs: return "NoInputs";
    case ErrorCode::ModelMissing: return "ModelMissing";
    case ErrorCode::ManifestMalformed: return "ManifestMalformed";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline double db_from_power_ratio(double ratio) { return 10.0 * std::log10(ratio); }
inline double db_from_amplitude_ratio(double ratio) { return 20.0 * std::log10(ratio); }

}  // namespace papc
