#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cantor {

// Base for every typed error raised by the library. `code` is a stable
// machine-readable identifier; `what()` is the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Bad configuration (CLI exit 2).
class ConfigError : public Error {
 public:
  using Error::Error;
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

// Bad or missing input data (CLI exit 3). Codes include: source_schema,
// validation_failed, missing_caption, missing_trace, unknown_record,
// empty_pool, io.
class DataError : public Error {
 public:
  using Error::Error;
};

// Decision-parser failures. Codes: empty_input, no_tasks_found,
// unknown_module, disabled_module.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Answer-extraction failures. Codes: no_answer_found, ambiguous, out_of_range.
class ExtractError : public Error {
 public:
  using Error::Error;
};

// Backend failures (CLI exit 4).
class BackendError : public Error {
 public:
  enum class Kind { Transient, Permanent, ModalityMismatch, ReplayMiss };

  BackendError(Kind kind, const std::string& message)
      : Error(code_for(kind), message), kind_(kind) {}

  Kind kind() const { return kind_; }

  static const char* code_for(Kind kind) {
    switch (kind) {
      case Kind::Transient: return "backend_transient";
      case Kind::Permanent: return "backend_permanent";
      case Kind::ModalityMismatch: return "modality_mismatch";
      case Kind::ReplayMiss: return "replay_miss";
    }
    return "backend";
  }

 private:
  Kind kind_;
};

// Replay lookup miss; carries the digest of the offending request.
class ReplayMiss : public BackendError {
 public:
  explicit ReplayMiss(std::string request_key)
      : BackendError(Kind::ReplayMiss,
                     "no transcript entry for request key " + request_key),
        key_(std::move(request_key)) {}

  const std::string& request_key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace cantor
