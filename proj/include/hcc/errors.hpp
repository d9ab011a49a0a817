#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hcc {

// Root of every error thrown by the library. The category drives the CLI
// exit code (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- numeric substrate -------------------------------------------------------
class DimensionError : public Error { public: using Error::Error; };
class LabelError : public Error { public: using Error::Error; };
class DeterminismError : public Error { public: using Error::Error; };
class ArgumentError : public Error { public: using Error::Error; };

// -- data layer --------------------------------------------------------------
class DataError : public Error { public: using Error::Error; };

class LexError : public DataError {
 public:
  LexError(const std::string& what, std::size_t offset)
      : DataError(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class VocabularyError : public DataError { public: using DataError::DataError; };

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public DataError { public: using DataError::DataError; };
class ConfigError : public DataError { public: using DataError::DataError; };
class IoError : public DataError { public: using DataError::DataError; };

// -- checkpoints -------------------------------------------------------------
class FormatError : public DataError { public: using DataError::DataError; };
class VersionError : public DataError { public: using DataError::DataError; };
class CorruptionError : public DataError { public: using DataError::DataError; };

// -- training ----------------------------------------------------------------
class TrainingDivergenceError : public Error { public: using Error::Error; };
class ScheduleError : public Error { public: using Error::Error; };

// -- evaluation --------------------------------------------------------------
class EmptyEvaluationError : public Error { public: using Error::Error; };
class ClockError : public Error { public: using Error::Error; };

// -- remote backend ----------------------------------------------------------
class BackendError : public Error { public: using Error::Error; };
class BackendTimeoutError : public BackendError { public: using BackendError::BackendError; };

class BackendStatusError : public BackendError {
 public:
  explicit BackendStatusError(int status)
      : BackendError("remote backend returned HTTP " + std::to_string(status)), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ProtocolError : public BackendError { public: using BackendError::BackendError; };

}  // namespace hcc
