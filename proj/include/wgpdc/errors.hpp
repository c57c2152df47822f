#pragma once

#include <stdexcept>
#include <string>

namespace wgpdc {

// Invalid configuration, file, or argument. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during a computation. CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wgpdc
