#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metaemb {

// Broad failure classes. The CLI maps these one-to-one onto exit codes.
enum class ErrorCategory {
  Usage = 1,
  Data = 2,
  Training = 3,
  Evaluation = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Violated precondition on an API call (shape mismatch, bad argument).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

/// Malformed input line. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(ErrorCategory::Data, path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid line that disagrees with the file's declared layout.
class FormatError : public Error {
 public:
  FormatError(const std::string& path, std::size_t line, const std::string& what)
      : Error(ErrorCategory::Data, path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class NormalizationError : public Error {
 public:
  explicit NormalizationError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(ErrorCategory::Training, what) {}
};

/// Loss undefined for the given inputs (e.g. cosine of a zero row).
class LossError : public Error {
 public:
  explicit LossError(const std::string& what) : Error(ErrorCategory::Training, what) {}
};

class DistanceError : public Error {
 public:
  explicit DistanceError(const std::string& what) : Error(ErrorCategory::Training, what) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what) : Error(ErrorCategory::Evaluation, what) {}
};

}  // namespace metaemb
