// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace promptforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Invalid input data or configuration. `field()` names the offending field,
/// key, or location (e.g. "rounds", "line 2: answer").
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Duplicate registration or unresolvable metric/loss name.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// A plugin broke its contract (metric out of [0,1], loss without gradient).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Missing environment configuration. `variable()` names the variable.
class ConfigurationError : public Error {
 public:
  ConfigurationError(std::string variable, const std::string& message)
      : Error(message), variable_(std::move(variable)) {}

  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

/// Model transport failure after `attempts()` tries.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts, bool retriable = true)
      : Error(message), attempts_(attempts), retriable_(retriable) {}

  int attempts() const noexcept { return attempts_; }
  bool retriable() const noexcept { return retriable_; }

 private:
  int attempts_;
  bool retriable_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// A whole optimization or evaluation run could not produce a result.
class RunError : public Error {
 public:
  using Error::Error;
};

/// Raised at a round boundary after cancellation was requested.
class CancelledError : public Error {
 public:
  CancelledError() : Error("run cancelled") {}
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace promptforge
