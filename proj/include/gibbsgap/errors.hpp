#pragma once

#include <stdexcept>
#include <string>

namespace gibbsgap {

// A distribution or model parameter is outside its admissible range.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

// An operation was called in a regime where it is undefined (e.g. n < 3 for
// the trace estimator, gamma >= 1 for the Wasserstein bound).
class PreconditionError : public std::domain_error {
 public:
  explicit PreconditionError(const std::string& what) : std::domain_error(what) {}
};

// Malformed input file or record.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gibbsgap
