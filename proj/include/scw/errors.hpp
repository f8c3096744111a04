#pragma once

#include <stdexcept>
#include <string>

namespace scw {

// Bad arguments or configuration; CLI exit code 1.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data; CLI exit code 2.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, non-convergence; CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace scw
