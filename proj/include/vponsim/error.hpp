#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vponsim {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedParameters : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// Raised when an internal protocol invariant is broken (double delivery,
// transmission outside a grant, quiet window on the wrong VPON, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class CapacityExceeded : public Error {
 public:
  CapacityExceeded(std::size_t found, std::size_t requested)
      : Error("code search found " + std::to_string(found) + " of " +
              std::to_string(requested) + " requested codewords"),
        found_(found),
        requested_(requested) {}

  std::size_t found() const noexcept { return found_; }
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::size_t found_;
  std::size_t requested_;
};

// Schema violation in a scenario file. `path` is a JSON pointer ("/vpons/1/members").
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error((path.empty() ? std::string("/") : path) + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FeasibilityError : public Error {
 public:
  FeasibilityError(double deficit_db, const std::string& what)
      : Error(what), deficit_db_(deficit_db) {}

  double deficit_db() const noexcept { return deficit_db_; }

 private:
  double deficit_db_;
};

}  // namespace vponsim
