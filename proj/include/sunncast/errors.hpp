#pragma once

#include <stdexcept>
#include <string>

namespace sunncast {

/// Raised for malformed inputs: bad files, bad arguments, violated
/// preconditions the caller can fix. Everything else is an internal error.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sunncast
