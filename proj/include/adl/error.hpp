#pragma once

#include <stdexcept>
#include <string>

namespace adl {

// Base for all errors raised by the ADL toolchain.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

// A fault raised while a behaviour reduces (projection failure, index out of
// range, type mismatch that slipped past the checker). Terminates only the
// faulting behaviour.
class RuntimeFault : public Error {
 public:
  using Error::Error;
};

class SerializationError : public Error {
 public:
  using Error::Error;
};

}  // namespace adl
