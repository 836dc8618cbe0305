#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace shareboost {

/// Malformed or inconsistent input (dimensions, labels, files, options).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite value or gradient met during optimization. Carries the offending point.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::vector<double> point = {})
      : std::runtime_error(what), point_(std::move(point)) {}

  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InputError(msg);
}

}  // namespace detail
}  // namespace shareboost
