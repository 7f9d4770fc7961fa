#pragma once

#include <stdexcept>
#include <string>

namespace briefkit {

// base for every error raised by the library. each module derives the
// specific error types its contract names.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace briefkit
