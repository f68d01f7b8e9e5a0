#pragma once

#include <stdexcept>
#include <string>

namespace metafuse {

/// Broad failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  config,     // bad configuration or precondition on user input
  alignment,  // sample ids / row counts disagree between sources
  numeric,    // divergence, non-finite values
  format,     // malformed file
  domain,     // argument outside an operation's domain
  io,         // filesystem
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};

struct AlignmentError : Error {
  explicit AlignmentError(const std::string& w) : Error(ErrorKind::alignment, w) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};

/// Training loss became non-finite.
struct DivergenceError : NumericError {
  DivergenceError(const std::string& w, int epoch) : NumericError(w), epoch(epoch) {}
  int epoch;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};

/// Two evaluation reports cannot be compared (different classes or splits).
struct ComparabilityError : Error {
  explicit ComparabilityError(const std::string& w) : Error(ErrorKind::domain, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::format, w) {}
};

struct MagicMismatchError : FormatError {
  using FormatError::FormatError;
};

struct TruncatedError : FormatError {
  using FormatError::FormatError;
};

struct ChecksumError : FormatError {
  using FormatError::FormatError;
};

struct VersionError : FormatError {
  using FormatError::FormatError;
};

/// Non-ASCII byte in metadata.
struct EncodingError : Error {
  EncodingError(const std::string& w, std::size_t row, std::string field, unsigned char byte)
      : Error(ErrorKind::domain, w), row(row), field(std::move(field)), byte(byte) {}
  std::size_t row;
  std::string field;
  unsigned char byte;
};

}  // namespace metafuse
