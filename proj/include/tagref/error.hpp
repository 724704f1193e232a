#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tagref {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad command-line usage or parameters outside their documented range.
struct UsageError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data.
struct DataError : Error {
  using Error::Error;
};

// An iterative solver exhausted its iteration budget. `partial` keeps the
// last iterate(s) so callers can salvage partial output.
struct ConvergenceError : Error {
  std::vector<std::vector<double>> partial;

  ConvergenceError(const std::string& msg, std::vector<std::vector<double>> last)
      : Error(msg), partial(std::move(last)) {}
};

}  // namespace tagref
