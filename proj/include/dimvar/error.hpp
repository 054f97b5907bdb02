#pragma once

#include <stdexcept>
#include <string>

namespace dimvar {

// Raised for invalid arguments, bad configs and violated preconditions.
// The CLI maps it to exit code 2.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace dimvar
