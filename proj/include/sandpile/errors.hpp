#pragma once

#include <stdexcept>
#include <string>

namespace sandpile {

/// Invalid run configuration: bad flag values, dimension mismatches,
/// missing source support for a walled table. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A time step was refused because a CFL condition does not hold.
/// Maps to CLI exit code 3.
class CflError : public std::runtime_error {
 public:
  CflError(const std::string& condition, const std::string& what)
      : std::runtime_error(what), condition_(condition) {}

  const std::string& condition() const noexcept { return condition_; }

 private:
  std::string condition_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCfl = 3;

}  // namespace sandpile
