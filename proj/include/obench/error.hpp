#pragma once

#include <stdexcept>
#include <string>

namespace obench {

// Argument violates a documented precondition (sizes, shapes, ranges).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Kernel input outside the mathematical domain of the operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SingularMatrix : public DomainError {
 public:
  using DomainError::DomainError;
};

class MalformedPayload : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A grid cell (op, n, rate, codec) required by an aggregate is absent.
class IncompleteGrid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedRatio : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Socket bind/connect failures for the proxy and the offload server.
class StartupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OffloadUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RemoteError : public std::runtime_error {
 public:
  RemoteError(int status, std::string diagnostic)
      : std::runtime_error("remote error " + std::to_string(status) + ": " +
                           diagnostic),
        status_(status),
        diagnostic_(std::move(diagnostic)) {}

  int status() const noexcept { return status_; }
  const std::string& diagnostic() const noexcept { return diagnostic_; }

 private:
  int status_;
  std::string diagnostic_;
};

}  // namespace obench
