#pragma once

#include <stdexcept>
#include <string>

namespace adshield {

/// Base class for every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input data (corpus records, prediction files,
/// model files). `record_id` names the offending record when known.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::string record_id = {})
      : Error(record_id.empty() ? what : what + " (record " + record_id + ")"),
        record_id_(std::move(record_id)) {}

  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

/// Caller violated an operation's precondition (bad hyperparameter,
/// single-class training data, untrained model, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace adshield
