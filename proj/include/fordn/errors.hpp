#pragma once

#include <stdexcept>
#include <string>

namespace fordn {

/// Input data that parses but violates a structural requirement.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fordn
