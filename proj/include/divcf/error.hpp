#pragma once

#include <stdexcept>
#include <string>

namespace divcf {

// Input failed a schema, range, or contract check. Service maps this to 422.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what, std::string field = {})
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// Model and encoder were built from different schemas. Service maps this to 409.
class FingerprintMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An operation was asked for on data where it is undefined.
class Undefined : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace divcf
