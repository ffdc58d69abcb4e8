#pragma once

#include <stdexcept>
#include <string>

namespace gait {

// Exit-code category used by the CLI: data errors map to 2, model errors to 3.
enum class ErrorKind { data, model };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed text input; the message carries the offending line number.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error(ErrorKind::data, m) {}
};

// Structural problems in data files: bad magic, truncation, timestamp jitter
// beyond tolerance. The message carries a byte offset where that applies.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error(ErrorKind::data, m) {}
};

// Inputs too short or otherwise degenerate for the requested operation.
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& m) : Error(ErrorKind::data, m) {}
};

// 3-axis vs 6-axis mismatches.
class ModeError : public Error {
 public:
  explicit ModeError(const std::string& m) : Error(ErrorKind::data, m) {}
};

// Dataset-level problems: missing classes, empty calibration set.
class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error(ErrorKind::data, m) {}
};

// Tensor or grid dimension mismatches.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error(ErrorKind::model, m) {}
};

// Invalid model configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::model, m) {}
};

// Model file problems (magic/version/truncation); message carries the offset.
class ModelFormatError : public Error {
 public:
  explicit ModelFormatError(const std::string& m) : Error(ErrorKind::model, m) {}
};

}  // namespace gait
