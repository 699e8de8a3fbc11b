#pragma once

#include <stdexcept>
#include <string>

namespace sslab {

/// All recoverable failures surface as this exception; callers that want a
/// process exit code catch it at the CLI boundary.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Training aborted because the loss or a gradient stopped being finite.
class DivergenceError : public Error {
public:
  DivergenceError(long step, const std::string& what)
      : Error("training diverged at step " + std::to_string(step) + ": " +
              what),
        step_(step) {}
  long step() const { return step_; }

private:
  long step_;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

}  // namespace sslab
