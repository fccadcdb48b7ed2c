#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sisrfp {

// Maps onto process exit codes used by the CLI.
enum class ErrorKind { usage = 1, data = 2, diverged = 3 };

// Every failure carries a short machine-readable code ("empty-output",
// "crop-too-large", ...) followed by a human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail, ErrorKind kind = ErrorKind::data)
      : std::runtime_error(code + (detail.empty() ? "" : ": " + detail)),
        code_(std::move(code)),
        kind_(kind) {}

  const std::string& code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string code_;
  ErrorKind kind_;
};

[[noreturn]] inline void fail(std::string code, const std::string& detail = {},
                              ErrorKind kind = ErrorKind::data) {
  throw Error(std::move(code), detail, kind);
}

}  // namespace sisrfp
