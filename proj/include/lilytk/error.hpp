#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lilytk {

enum class Errc {
  InvalidUtf8,
  UnterminatedString,
  UnterminatedBlockComment,
  UnterminatedScheme,
  UnbalancedBlock,
  MissingIncludeTarget,
  NoIncludes,
  Io,
  // tokenizer
  MalformedVocabulary,
  DuplicateAddedToken,
  AddedTokenCollidesWithBase,
  WrongCategoryCount,
  UnknownId,
  RateOutOfRange,
  // pitch
  NotAPitchName,
  // metadata
  YearOutOfRange,
  SchemaViolation,
  EmptyCorpus,
  // taxonomy
  CycleDetected,
  DanglingEdge,
  MalformedSpec,
  InvalidDuration,
  NonPositiveBpm,
  // validate
  ParseFailure,
  EngraverNotFound,
  Timeout,
  // probe
  DimensionMismatch,
  MalformedRecord,
  NoRecords,
  NoClassesRemain,
  ClassSmallerThanK,
  TooFewSamples,
  SingleClass,
  NonFiniteLoss,
  EmptyTestSet,
  InvalidArgument,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidUtf8: return "InvalidUtf8";
    case Errc::UnterminatedString: return "UnterminatedString";
    case Errc::UnterminatedBlockComment: return "UnterminatedBlockComment";
    case Errc::UnterminatedScheme: return "UnterminatedScheme";
    case Errc::UnbalancedBlock: return "UnbalancedBlock";
    case Errc::MissingIncludeTarget: return "MissingIncludeTarget";
    case Errc::NoIncludes: return "NoIncludes";
    case Errc::Io: return "Io";
    case Errc::MalformedVocabulary: return "MalformedVocabulary";
    case Errc::DuplicateAddedToken: return "DuplicateAddedToken";
    case Errc::AddedTokenCollidesWithBase: return "AddedTokenCollidesWithBase";
    case Errc::WrongCategoryCount: return "WrongCategoryCount";
    case Errc::UnknownId: return "UnknownId";
    case Errc::RateOutOfRange: return "RateOutOfRange";
    case Errc::NotAPitchName: return "NotAPitchName";
    case Errc::YearOutOfRange: return "YearOutOfRange";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::DanglingEdge: return "DanglingEdge";
    case Errc::MalformedSpec: return "MalformedSpec";
    case Errc::InvalidDuration: return "InvalidDuration";
    case Errc::NonPositiveBpm: return "NonPositiveBpm";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::EngraverNotFound: return "EngraverNotFound";
    case Errc::Timeout: return "Timeout";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::NoRecords: return "NoRecords";
    case Errc::NoClassesRemain: return "NoClassesRemain";
    case Errc::ClassSmallerThanK: return "ClassSmallerThanK";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::SingleClass: return "SingleClass";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::EmptyTestSet: return "EmptyTestSet";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure in the toolkit is reported as an Error carrying a machine-readable
/// code. `offset` is a byte offset (lexer/parser) or a 1-based line number
/// (record readers), whichever the thrower documents.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), offset_(offset) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::size_t> offset_;
};

}  // namespace lilytk
