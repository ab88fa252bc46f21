#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sinusseg {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  Format,      // malformed input file (CSV header, PNG layout, JSON)
  Row,         // a single malformed record inside an otherwise valid file
  Empty,       // nothing usable in the input
  Degenerate,  // geometry that cannot be rasterized
  Shape,       // dimension or batch mismatch
  Count,       // not enough records to satisfy a split
  Argument,    // invalid scalar argument
  Config,      // invalid or inconsistent configuration
  Data,        // missing training data
  Io,          // filesystem failure
  Pairing,     // unmatched files between two directories
  Divergence,  // NaN/inf during training
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace sinusseg
