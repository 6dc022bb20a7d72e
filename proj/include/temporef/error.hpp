#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace temporef {

enum class ErrorKind {
  InvalidArgument,
  FileNotFound,
  UnsupportedFormat,
  EmptyAudio,
  TooShort,
  BadMagic,
  VersionMismatch,
  DimensionMismatch,
  Truncated,
  Checksum,
  IncompleteBank,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the toolkit; `kind()` lets callers and tests
// tell failure classes apart without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace temporef
