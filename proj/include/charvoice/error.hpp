#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace charvoice {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unreadable inputs.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Inputs that were read but break a contract. `details` holds the offending
// ids or line numbers when there is more than one.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what,
                           std::vector<std::string> details = {})
      : Error(what), details_(std::move(details)) {}

  const std::vector<std::string>& details() const { return details_; }

 private:
  std::vector<std::string> details_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace charvoice
