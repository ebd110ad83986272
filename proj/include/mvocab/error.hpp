#pragma once

#include <stdexcept>
#include <string>

namespace mvocab {

// Coarse failure class. The CLI maps these one-to-one onto exit codes.
enum class ErrorKind {
  kUsage = 1,
  kIo = 2,
  kTraining = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& message) {
  throw Error(ErrorKind::kUsage, message);
}
[[noreturn]] inline void throw_io(const std::string& message) {
  throw Error(ErrorKind::kIo, message);
}
[[noreturn]] inline void throw_training(const std::string& message) {
  throw Error(ErrorKind::kTraining, message);
}

}  // namespace mvocab
