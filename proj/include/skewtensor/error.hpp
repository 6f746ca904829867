#pragma once

#include <stdexcept>
#include <string>

namespace skewtensor {

// Bad arguments, malformed files, dimension mismatches. CLI maps this to exit code 2.
class value_error : public std::invalid_argument {
 public:
  explicit value_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical breakdown: non-SPD scale, degenerate weights, domain overflow.
// CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace skewtensor
