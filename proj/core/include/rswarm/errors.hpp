#pragma once

#include <stdexcept>
#include <string>

#include "rswarm/source_span.hpp"

namespace rswarm {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Error anchored to a position in a source file.
class SpanError : public Error {
 public:
  SpanError(std::string message, SourceSpan span)
      : Error(span.to_string() + ": " + message), span_(std::move(span)) {}

  const SourceSpan& span() const { return span_; }

 private:
  SourceSpan span_;
};

struct UnterminatedString : SpanError {
  using SpanError::SpanError;
};
struct UnterminatedBlockComment : SpanError {
  using SpanError::SpanError;
};
struct MalformedModuleHeader : SpanError {
  using SpanError::SpanError;
};
struct LayoutError : SpanError {
  using SpanError::SpanError;
};

struct InvalidCfg : Error {
  using Error::Error;
};

struct NoSources : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

struct ToolNotFound : Error {
  using Error::Error;
};
struct Timeout : Error {
  using Error::Error;
};
struct UnparseableOutput : Error {
  using Error::Error;
};
struct MissingHeaderLine : Error {
  using Error::Error;
};
struct BuildFailed : Error {
  using Error::Error;
};
struct ProfileFileMissing : Error {
  using Error::Error;
};
struct SummaryMismatch : Error {
  using Error::Error;
};

struct BackendUnavailable : Error {
  using Error::Error;
};
struct ReplayMiss : Error {
  using Error::Error;
};
struct SchemaViolation : Error {
  using Error::Error;
};
struct MissingArtifact : Error {
  using Error::Error;
};

struct UnparseableCandidate : Error {
  using Error::Error;
};

struct DuplicatePhase : Error {
  using Error::Error;
};
struct SnapshotMismatch : Error {
  using Error::Error;
};
struct DivisionByZeroPre : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace rswarm
