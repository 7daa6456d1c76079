#pragma once

#include <stdexcept>
#include <string>

namespace slepwave {

// Malformed or inconsistent input data (files, caches, masks).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to deliver a result satisfying its contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slepwave
