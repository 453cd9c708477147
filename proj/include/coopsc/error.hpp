#pragma once

#include <stdexcept>
#include <string>

namespace coopsc {

enum class ErrorKind {
  kShape,
  kState,
  kPrecondition,
  kFormat,
  kVersion,
  kTruncated,
  kIo,
  kConfig,
};

const char* to_string(ErrorKind kind);

/// Exception type for all library failures. The kind lets callers tell a
/// corrupt file from a shape bug without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace coopsc
