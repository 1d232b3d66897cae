#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ibe {

// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorKind { usage, data, upstream };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class UpstreamError : public Error {
 public:
  explicit UpstreamError(const std::string& what) : Error(ErrorKind::upstream, what) {}
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// Explanation parsing.
class NoStepsFound : public DataError {
 public:
  NoStepsFound() : DataError("no \"Step N\" headers found in response") {}
};

class MalformedStep : public DataError {
 public:
  using DataError::DataError;
};

// Logic text parsing.
class SyntaxError : public DataError {
 public:
  SyntaxError(const std::string& msg, std::size_t line, std::size_t column)
      : DataError("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

  // Set when the text came from an LLM response.
  const std::string& raw_response() const noexcept { return raw_; }
  SyntaxError& attach_raw(std::string raw) {
    raw_ = std::move(raw);
    return *this;
  }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string raw_;
};

class MissingQuery : public DataError {
 public:
  MissingQuery() : DataError("logic program has no query (\"?- atom.\")") {}
};

class NoFacts : public DataError {
 public:
  NoFacts() : DataError("logic program has no facts") {}
};

// An LLM response that failed to parse; keeps the raw text for debugging.
class ResponseParseError : public DataError {
 public:
  ResponseParseError(const std::string& what, std::string raw) : DataError(what), raw_(std::move(raw)) {}
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class UnparseableVerdict : public ResponseParseError {
 public:
  explicit UnparseableVerdict(std::string raw)
      : ResponseParseError("judge verdict could not be parsed", std::move(raw)) {}
};

class ReplayMiss : public UpstreamError {
 public:
  ReplayMiss(const std::string& fingerprint, const std::string& context)
      : UpstreamError("replay miss for " + context + " (fingerprint " + fingerprint + ")"),
        fingerprint_(fingerprint) {}
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  std::string fingerprint_;
};

class TransportError : public UpstreamError {
 public:
  using UpstreamError::UpstreamError;
};

// Scorer backends (remote or fallback) that failed on an input.
class ScorerError : public UpstreamError {
 public:
  using UpstreamError::UpstreamError;
};

// The sidecar reported that an op is disabled.
class CapabilityError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

}  // namespace ibe
