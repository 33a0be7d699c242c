#pragma once

#include <stdexcept>
#include <string>

namespace convsearch {

// Error categories map onto the CLI exit codes: usage=1, data=2, runtime=3.
enum class ErrorKind { usage = 1, data = 2, runtime = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  static Error usage(std::string msg) { return Error(ErrorKind::usage, std::move(msg)); }
  static Error data(std::string msg) { return Error(ErrorKind::data, std::move(msg)); }
  static Error runtime(std::string msg) { return Error(ErrorKind::runtime, std::move(msg)); }

 private:
  ErrorKind kind_;
};

}  // namespace convsearch
