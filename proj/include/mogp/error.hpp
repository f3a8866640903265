#pragma once

#include <stdexcept>
#include <string>

namespace mogp {

/// Broad failure class; the CLI maps each kind onto an exit status.
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class InvalidParameter : public NumericalError {
 public:
  explicit InvalidParameter(const std::string& what) : NumericalError(what) {}
};

/// Cholesky factorization failed even at the largest allowed jitter.
class IllConditionedError : public NumericalError {
 public:
  IllConditionedError(const std::string& what, double final_jitter)
      : NumericalError(what), final_jitter_(final_jitter) {}
  double final_jitter() const noexcept { return final_jitter_; }

 private:
  double final_jitter_;
};

}  // namespace mogp
