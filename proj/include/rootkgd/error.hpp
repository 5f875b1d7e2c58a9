#pragma once

#include <stdexcept>
#include <string>

namespace rootkgd {

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, CSV, config). The CLI maps this to exit code 2.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a structural or numeric invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure while fitting or evaluating a model.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace rootkgd
