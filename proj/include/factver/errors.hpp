#pragma once

#include <stdexcept>
#include <string>

namespace factver {

// Bad user input: malformed files, unknown ids, invalid CLI values. Exit code 1.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline stage aborted. Carries the stage name. Exit code 2.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace factver
