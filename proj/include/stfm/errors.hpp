#pragma once

#include <stdexcept>
#include <string>

namespace stfm {

enum class ErrorKind {
  invalid_argument,
  dimension,
  config,
  io,
  checkpoint_format,
  checkpoint_version,
  checkpoint_truncated,
  checkpoint_shape,
  diverged,
};

const char* error_kind_name(ErrorKind kind);

// Single exception type for the whole library; the C API maps the kind
// to a status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  static Error invalid_argument(const std::string& m) { return {ErrorKind::invalid_argument, m}; }
  static Error dimension(const std::string& m) { return {ErrorKind::dimension, m}; }
  static Error config(const std::string& m) { return {ErrorKind::config, m}; }
  static Error io(const std::string& m) { return {ErrorKind::io, m}; }
  static Error diverged(const std::string& m) { return {ErrorKind::diverged, m}; }

 private:
  ErrorKind kind_;
};

}  // namespace stfm
