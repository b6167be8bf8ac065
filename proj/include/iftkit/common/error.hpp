#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iftkit {

// Error categories. Each maps onto one of the CLI exit codes.
enum class ErrorKind {
  kUsage,         // bad flags, unknown subcommand
  kIo,            // unreadable/unwritable files
  kParse,         // malformed JSON/CSV, unparseable judge or refiner output
  kSchema,        // well-formed input missing required fields
  kValidation,    // values outside their contract
  kPrecondition,  // operation called on data that does not satisfy its precondition
  kConfig,        // bad tokenizer definition, template, or oracle settings
  kTransport,     // retries exhausted, permanent HTTP error, malformed response body
  kNotFound,
  kConflict,
};

std::string_view to_string(ErrorKind kind);

// Stable process exit code for an error kind: 2 usage, 3 validation,
// 4 transport, 5 parse.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(ErrorKind::kUsage, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error(ErrorKind::kParse, m) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error(ErrorKind::kSchema, m) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& m)
      : Error(ErrorKind::kValidation, m) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& m)
      : Error(ErrorKind::kPrecondition, m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::kConfig, m) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& m)
      : Error(ErrorKind::kTransport, m) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& m)
      : Error(ErrorKind::kNotFound, m) {}
};

class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& m)
      : Error(ErrorKind::kConflict, m) {}
};

}  // namespace iftkit
